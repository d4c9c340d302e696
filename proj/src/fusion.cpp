#include "qcmm/fusion.hpp"

#include <cmath>
#include <stdexcept>

#include "qcmm/gates.hpp"

namespace qcmm {
namespace {

double half_sin_sq(double v) {
  double s = std::sin(v / 2);
  return s * s;
}

Mat ground_projector() {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 1;
  return m;
}

}  // namespace

double triplet_excitation(double v_h, double v_l) {
  return half_sin_sq(v_h) * half_sin_sq(v_l);
}

double triplet_excitation_dv(double v_h, double v_l) {
  return 0.5 * std::sin(v_h) * half_sin_sq(v_l);
}

Mat fuse_triplet(double v_h, double v_l, double theta) {
  double p = triplet_excitation(v_h, v_l);
  Mat r = rotation_matrix(Axis::Y, theta);
  Mat rotated = r * ground_projector() * r.adjoint();
  return (1 - p) * ground_projector() + p * rotated;
}

Mat fuse_triplet_reference(double v_h, double v_l, double theta) {
  PureState psi(3);
  apply_unitary(psi, rotation(Axis::Y, v_h), {0});
  apply_unitary(psi, rotation(Axis::Y, v_l), {1});
  DensityMatrix rho = DensityMatrix::from_pure(psi);
  apply_unitary(rho, cc_ry(theta), {0, 1, 2});
  return partial_trace(rho, {0, 1}).matrix();
}

Mat fuse_triplet_dtheta(double v_h, double v_l, double theta) {
  double p = triplet_excitation(v_h, v_l);
  Mat r = rotation_matrix(Axis::Y, theta);
  Mat dr = rotation_derivative(Axis::Y, theta);
  Mat ket0 = ground_projector();
  return p * (dr * ket0 * r.adjoint() + r * ket0 * dr.adjoint());
}

Mat fuse_triplet_dexcitation(double theta) {
  Mat r = rotation_matrix(Axis::Y, theta);
  return r * ground_projector() * r.adjoint() - ground_projector();
}

double belief_mass(double theta) { return half_sin_sq(theta); }

DensityMatrix FusedState::materialize() const {
  if (factors.empty()) throw std::invalid_argument("no factors to materialize");
  Mat rho = factors[0];
  for (size_t j = 1; j < factors.size(); ++j) rho = kron(rho, factors[j]);
  return DensityMatrix::from_matrix(rho);
}

FusedState fuse(const RVec& v_h, const RVec& v_l, const RVec& thetas) {
  if (v_h.size() != v_l.size() || v_h.size() != thetas.size())
    throw std::invalid_argument("fuse expects equally sized angle vectors");
  FusedState out;
  out.factors.reserve(v_h.size());
  for (int j = 0; j < v_h.size(); ++j)
    out.factors.push_back(fuse_triplet(v_h[j], v_l[j], thetas[j]));
  return out;
}

PureState angle_encode(const RVec& angles) {
  const int n = static_cast<int>(angles.size());
  if (n < 1 || n > kMaxQubits)
    throw std::invalid_argument("angle count out of range");
  Vec amps = Vec::Ones(1);
  for (int j = 0; j < n; ++j) {
    Vec q(2);
    q << std::cos(angles[j] / 2), std::sin(angles[j] / 2);
    amps = kron(Mat(amps), Mat(q)).col(0);
  }
  return PureState::from_amplitudes(amps);
}

Vec angle_encode_derivative(const RVec& angles, int j) {
  const int n = static_cast<int>(angles.size());
  if (j < 0 || j >= n) throw std::out_of_range("derivative index");
  Vec amps = Vec::Ones(1);
  for (int q = 0; q < n; ++q) {
    Vec f(2);
    if (q == j)
      f << -0.5 * std::sin(angles[q] / 2), 0.5 * std::cos(angles[q] / 2);
    else
      f << std::cos(angles[q] / 2), std::sin(angles[q] / 2);
    amps = kron(Mat(amps), Mat(f)).col(0);
  }
  return amps;
}

std::vector<std::pair<int, int>> baseline_topology(const std::string& topology) {
  std::vector<std::pair<int, int>> gates;
  if (topology == "circuit-block") {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) gates.emplace_back(i, 4 + j);
  } else if (topology == "all-to-all") {
    for (int stride : {1, 2, 4})
      for (int i = 0; i < 8; ++i) gates.emplace_back(i, (i + stride) % 8);
  } else {
    throw std::invalid_argument("unknown baseline topology: " + topology);
  }
  return gates;
}

int baseline_gate_count(const std::string& topology) {
  return static_cast<int>(baseline_topology(topology).size());
}

PureState fuse_baseline(const RVec& v_h, const RVec& v_l,
                        const std::string& topology) {
  if (v_h.size() != 4 || v_l.size() != 4)
    throw std::invalid_argument("baselines take four angles per modality");
  RVec all(8);
  all << v_h, v_l;
  PureState psi = angle_encode(all);
  GateMatrix cx = cnot();
  for (const auto& [control, target] : baseline_topology(topology))
    apply_unitary(psi, cx, {control, target});
  return psi;
}

}  // namespace qcmm
