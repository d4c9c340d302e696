#include "qcmm/gates.hpp"

#include <cmath>
#include <stdexcept>

namespace qcmm {

namespace {

void check_finite(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite gate angle");
}

Mat pauli_of(Axis a) {
  Mat m(2, 2);
  switch (a) {
    case Axis::X: m << 0, 1, 1, 0; break;
    case Axis::Y: m << 0, c64(0, -1), c64(0, 1), 0; break;
    case Axis::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

}  // namespace

Mat rotation_matrix(Axis axis, double angle) {
  check_finite(angle);
  const double c = std::cos(angle / 2), s = std::sin(angle / 2);
  Mat m(2, 2);
  switch (axis) {
    case Axis::X: m << c, c64(0, -s), c64(0, -s), c; break;
    case Axis::Y: m << c, -s, s, c; break;
    case Axis::Z: m << c64(c, -s), 0, 0, c64(c, s); break;
  }
  return m;
}

GateMatrix rotation(Axis axis, double angle) {
  return GateMatrix{rotation_matrix(axis, angle), 1};
}

Mat rotation_derivative(Axis axis, double angle) {
  check_finite(angle);
  return c64(0, -0.5) * (pauli_of(axis) * rotation_matrix(axis, angle));
}

Mat u3_matrix(double theta, double phi, double lambda) {
  check_finite(theta);
  check_finite(phi);
  check_finite(lambda);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Mat m(2, 2);
  m(0, 0) = c;
  m(0, 1) = -std::exp(c64(0, lambda)) * s;
  m(1, 0) = std::exp(c64(0, phi)) * s;
  m(1, 1) = std::exp(c64(0, phi + lambda)) * c;
  return m;
}

GateMatrix u3(double theta, double phi, double lambda) {
  return GateMatrix{u3_matrix(theta, phi, lambda), 1};
}

Mat u3_derivative(int which, double theta, double phi, double lambda) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Mat m = Mat::Zero(2, 2);
  switch (which) {
    case 0:
      m(0, 0) = -0.5 * s;
      m(0, 1) = -std::exp(c64(0, lambda)) * 0.5 * c;
      m(1, 0) = std::exp(c64(0, phi)) * 0.5 * c;
      m(1, 1) = -std::exp(c64(0, phi + lambda)) * 0.5 * s;
      break;
    case 1:
      m(1, 0) = c64(0, 1) * std::exp(c64(0, phi)) * s;
      m(1, 1) = c64(0, 1) * std::exp(c64(0, phi + lambda)) * c;
      break;
    case 2:
      m(0, 1) = c64(0, -1) * std::exp(c64(0, lambda)) * s;
      m(1, 1) = c64(0, 1) * std::exp(c64(0, phi + lambda)) * c;
      break;
    default:
      throw std::invalid_argument("u3 parameter index must be 0, 1, or 2");
  }
  return m;
}

Mat controlled_matrix(const Mat& base, bool control_on_one) {
  const Eigen::Index d = base.rows();
  Mat m = Mat::Identity(2 * d, 2 * d);
  if (control_on_one)
    m.bottomRightCorner(d, d) = base;
  else
    m.topLeftCorner(d, d) = base;
  return m;
}

GateMatrix controlled(const GateMatrix& base, bool control_on_one) {
  return GateMatrix{controlled_matrix(base.m, control_on_one), base.arity + 1};
}

GateMatrix cc_ry(double theta) {
  Mat m = Mat::Identity(8, 8);
  m.bottomRightCorner(2, 2) = rotation_matrix(Axis::Y, theta);
  return GateMatrix{m, 3};
}

GateMatrix hadamard() {
  Mat m(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  m << s, s, s, -s;
  return GateMatrix{m, 1};
}

GateMatrix pauli_x_gate() { return GateMatrix{pauli_of(Axis::X), 1}; }

GateMatrix cnot() { return controlled(pauli_x_gate(), true); }

GateMatrix cz() {
  Mat m = Mat::Identity(4, 4);
  m(3, 3) = -1;
  return GateMatrix{m, 2};
}

}  // namespace qcmm
