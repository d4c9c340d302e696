#include "qcmm/qtensor.hpp"

#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <string>

namespace qcmm {

namespace {

bool is_power_of_two(Eigen::Index x) { return x > 0 && (x & (x - 1)) == 0; }

int log2_exact(Eigen::Index x) {
  int n = 0;
  while ((Eigen::Index(1) << n) < x) ++n;
  return n;
}

void check_register_size(int n) {
  if (n < 1 || n > kMaxQubits)
    throw std::invalid_argument("register size " + std::to_string(n) +
                                " outside [1, " + std::to_string(kMaxQubits) + "]");
}

// Validates targets and returns per-gate-qubit bit strides.
std::vector<int> target_strides(int n, const std::vector<int>& targets) {
  std::vector<int> strides(targets.size());
  unsigned seen = 0;
  for (size_t j = 0; j < targets.size(); ++j) {
    int t = targets[j];
    if (t < 0 || t >= n)
      throw std::invalid_argument("target qubit " + std::to_string(t) +
                                  " out of range for " + std::to_string(n) + " qubits");
    if (seen & (1u << t))
      throw std::invalid_argument("duplicate target qubit " + std::to_string(t));
    seen |= 1u << t;
    strides[j] = 1 << (n - 1 - t);
  }
  return strides;
}

// Local index offsets for all 2^k settings of the target bits.
std::vector<int> local_offsets(const std::vector<int>& strides) {
  const int k = static_cast<int>(strides.size());
  std::vector<int> offs(size_t(1) << k, 0);
  for (int g = 0; g < (1 << k); ++g)
    for (int j = 0; j < k; ++j)
      if ((g >> (k - 1 - j)) & 1) offs[g] += strides[j];
  return offs;
}

// Base indices: all labels whose target bits are zero.
std::vector<int> base_indices(int n, const std::vector<int>& strides) {
  const int dim = 1 << n;
  int mask = 0;
  for (int s : strides) mask |= s;
  std::vector<int> base;
  base.reserve(dim >> strides.size());
  for (int i = 0; i < dim; ++i)
    if ((i & mask) == 0) base.push_back(i);
  return base;
}

// The inner kernels below work on split real/imaginary scalars instead of
// std::complex so the compiler can fuse and vectorize the 4K flops per
// gathered group; this is the whole simulator's hot path.
template <int K>
struct SplitGate {
  double re[K * K];
  double im[K * K];
  explicit SplitGate(const c64* g) {
    for (int t = 0; t < K * K; ++t) {
      re[t] = g[t].real();
      im[t] = g[t].imag();
    }
  }
};

// y <- g * y on the gathered K amplitudes of every column.
template <int K>
void left_mult_k(c64* data, int dim, const c64* g,
                 const std::vector<int>& base, const std::vector<int>& offs) {
  const SplitGate<K> s(g);
  for (int c = 0; c < dim; ++c) {
    c64* col = data + static_cast<size_t>(c) * dim;
    for (int b : base) {
      double ar[K], ai[K];
      for (int j = 0; j < K; ++j) {
        const c64 v = col[b + offs[j]];
        ar[j] = v.real();
        ai[j] = v.imag();
      }
      for (int i = 0; i < K; ++i) {
        double sr = 0.0, si = 0.0;
        for (int j = 0; j < K; ++j) {
          const double gr = s.re[i + K * j], gi = s.im[i + K * j];
          sr += gr * ar[j] - gi * ai[j];
          si += gr * ai[j] + gi * ar[j];
        }
        col[b + offs[i]] = c64(sr, si);
      }
    }
  }
}

// Columns mix: new_col[i] = sum_j old_col[j] * g(j, i). Row-contiguous streams.
template <int K>
void right_mult_k(c64* data, int dim, const c64* g,
                  const std::vector<int>& base, const std::vector<int>& offs) {
  const SplitGate<K> s(g);
  std::array<c64*, K> cols;
  for (int b : base) {
    for (int j = 0; j < K; ++j)
      cols[j] = data + static_cast<size_t>(b + offs[j]) * dim;
    for (int r = 0; r < dim; ++r) {
      double ar[K], ai[K];
      for (int j = 0; j < K; ++j) {
        const c64 v = cols[j][r];
        ar[j] = v.real();
        ai[j] = v.imag();
      }
      for (int i = 0; i < K; ++i) {
        double sr = 0.0, si = 0.0;
        for (int j = 0; j < K; ++j) {
          const double gr = s.re[j + K * i], gi = s.im[j + K * i];
          sr += ar[j] * gr - ai[j] * gi;
          si += ar[j] * gi + ai[j] * gr;
        }
        cols[i][r] = c64(sr, si);
      }
    }
  }
}

template <int K>
void vec_mult_k(c64* data, const c64* g, const std::vector<int>& base,
                const std::vector<int>& offs) {
  const SplitGate<K> s(g);
  for (int b : base) {
    double ar[K], ai[K];
    for (int j = 0; j < K; ++j) {
      const c64 v = data[b + offs[j]];
      ar[j] = v.real();
      ai[j] = v.imag();
    }
    for (int i = 0; i < K; ++i) {
      double sr = 0.0, si = 0.0;
      for (int j = 0; j < K; ++j) {
        const double gr = s.re[i + K * j], gi = s.im[i + K * j];
        sr += gr * ar[j] - gi * ai[j];
        si += gr * ai[j] + gi * ar[j];
      }
      data[b + offs[i]] = c64(sr, si);
    }
  }
}

// Copies g into column-major scratch with compile-time stride K.
template <int K>
std::array<c64, size_t(K) * K> pack(const Mat& g) {
  std::array<c64, size_t(K) * K> out;
  for (int j = 0; j < K; ++j)
    for (int i = 0; i < K; ++i) out[i + K * j] = g(i, j);
  return out;
}

void check_gate_shape(const Mat& g, size_t n_targets) {
  if (g.rows() != g.cols() || !is_power_of_two(g.rows()))
    throw std::invalid_argument("gate matrix must be square with power-of-two size");
  if (g.rows() != Eigen::Index(1) << n_targets)
    throw std::invalid_argument("gate arity does not match target count");
}

}  // namespace

GateMatrix make_gate(const Mat& m) {
  if (m.rows() != m.cols() || !is_power_of_two(m.rows()))
    throw std::invalid_argument("gate matrix must be square with power-of-two size");
  const int arity = log2_exact(m.rows());
  if (arity > kMaxQubits) throw std::invalid_argument("gate exceeds qubit cap");
  Mat err = m.adjoint() * m - Mat::Identity(m.rows(), m.cols());
  if (err.cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("matrix is not unitary within 1e-10");
  return GateMatrix{m, arity};
}

PureState::PureState(int n_qubits) {
  check_register_size(n_qubits);
  n_ = n_qubits;
  amp_ = Vec::Zero(Eigen::Index(1) << n_qubits);
  amp_(0) = 1.0;
}

PureState PureState::from_amplitudes(Vec amplitudes) {
  if (!is_power_of_two(amplitudes.size()))
    throw std::invalid_argument("amplitude count must be a power of two");
  PureState s;
  s.n_ = log2_exact(amplitudes.size());
  check_register_size(s.n_);
  if (std::abs(amplitudes.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("state norm deviates from 1 beyond 1e-10");
  s.amp_ = std::move(amplitudes);
  return s;
}

DensityMatrix::DensityMatrix(int n_qubits) {
  check_register_size(n_qubits);
  n_ = n_qubits;
  rho_ = Mat::Zero(Eigen::Index(1) << n_qubits, Eigen::Index(1) << n_qubits);
  rho_(0, 0) = 1.0;
}

DensityMatrix DensityMatrix::from_matrix(Mat rho) {
  if (rho.rows() != rho.cols() || !is_power_of_two(rho.rows()))
    throw std::invalid_argument("density matrix must be square with power-of-two size");
  DensityMatrix s;
  s.n_ = log2_exact(rho.rows());
  check_register_size(s.n_);
  if ((rho - Mat(rho.adjoint())).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("density matrix not Hermitian");
  if (std::abs(rho.trace() - c64(1, 0)) > 1e-9)
    throw std::invalid_argument("density matrix trace deviates from 1");
  s.rho_ = std::move(rho);
  return s;
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
  DensityMatrix s;
  s.n_ = psi.qubits();
  s.rho_ = psi.amplitudes() * psi.amplitudes().adjoint();
  return s;
}

void DensityMatrix::validate(double tol) const {
  if ((rho_ - Mat(rho_.adjoint())).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("density matrix not Hermitian within tolerance");
  if (std::abs(rho_.trace() - c64(1, 0)) > tol)
    throw std::invalid_argument("density matrix trace deviates from 1");
  Eigen::SelfAdjointEigenSolver<Mat> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::invalid_argument("density matrix has eigenvalue below -1e-9");
}

Mat kron(const Mat& a, const Mat& b) {
  if (a.rows() * b.rows() > (Eigen::Index(1) << kMaxQubits) ||
      a.cols() * b.cols() > (Eigen::Index(1) << kMaxQubits))
    throw std::invalid_argument("kron result exceeds the dense register cap");
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void left_mult_placed(Mat& m, const Mat& g, int n,
                      const std::vector<int>& targets) {
  check_gate_shape(g, targets.size());
  auto strides = target_strides(n, targets);
  auto offs = local_offsets(strides);
  auto base = base_indices(n, strides);
  const int dim = 1 << n;
  switch (targets.size()) {
    case 1: { auto p = pack<2>(g); left_mult_k<2>(m.data(), dim, p.data(), base, offs); break; }
    case 2: { auto p = pack<4>(g); left_mult_k<4>(m.data(), dim, p.data(), base, offs); break; }
    case 3: { auto p = pack<8>(g); left_mult_k<8>(m.data(), dim, p.data(), base, offs); break; }
    default:
      // Rare large placements fall back to a dense product.
      m = embed(g, n, targets) * m;
  }
}

void right_mult_placed(Mat& m, const Mat& g, int n,
                       const std::vector<int>& targets) {
  check_gate_shape(g, targets.size());
  auto strides = target_strides(n, targets);
  auto offs = local_offsets(strides);
  auto base = base_indices(n, strides);
  const int dim = 1 << n;
  switch (targets.size()) {
    case 1: { auto p = pack<2>(g); right_mult_k<2>(m.data(), dim, p.data(), base, offs); break; }
    case 2: { auto p = pack<4>(g); right_mult_k<4>(m.data(), dim, p.data(), base, offs); break; }
    case 3: { auto p = pack<8>(g); right_mult_k<8>(m.data(), dim, p.data(), base, offs); break; }
    default:
      m = m * embed(g, n, targets);
  }
}

void left_mult_placed_vec(Vec& v, const Mat& g, int n,
                          const std::vector<int>& targets) {
  check_gate_shape(g, targets.size());
  auto strides = target_strides(n, targets);
  auto offs = local_offsets(strides);
  auto base = base_indices(n, strides);
  switch (targets.size()) {
    case 1: { auto p = pack<2>(g); vec_mult_k<2>(v.data(), p.data(), base, offs); break; }
    case 2: { auto p = pack<4>(g); vec_mult_k<4>(v.data(), p.data(), base, offs); break; }
    case 3: { auto p = pack<8>(g); vec_mult_k<8>(v.data(), p.data(), base, offs); break; }
    default:
      v = embed(g, n, targets) * v;
  }
}

Placement make_placement(int n, const std::vector<int>& targets) {
  auto strides = target_strides(n, targets);
  return Placement{local_offsets(strides), base_indices(n, strides)};
}

Mat embed(const Mat& g, int n, const std::vector<int>& targets) {
  check_gate_shape(g, targets.size());
  auto strides = target_strides(n, targets);
  auto offs = local_offsets(strides);
  auto base = base_indices(n, strides);
  const int dim = 1 << n;
  const int k = static_cast<int>(offs.size());
  Mat out = Mat::Zero(dim, dim);
  for (int b : base)
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i) out(b + offs[i], b + offs[j]) = g(i, j);
  return out;
}

void apply_unitary(DensityMatrix& state, const GateMatrix& g,
                   const std::vector<int>& targets) {
  if (static_cast<size_t>(g.arity) != targets.size())
    throw std::invalid_argument("gate arity does not match target count");
  left_mult_placed(state.matrix(), g.m, state.qubits(), targets);
  right_mult_placed(state.matrix(), Mat(g.m.adjoint()), state.qubits(), targets);
}

void apply_unitary(PureState& state, const GateMatrix& g,
                   const std::vector<int>& targets) {
  if (static_cast<size_t>(g.arity) != targets.size())
    throw std::invalid_argument("gate arity does not match target count");
  left_mult_placed_vec(state.amplitudes(), g.m, state.qubits(), targets);
}

namespace {

// Offsets of the kept/discarded qubits for partial traces.
struct TraceLayout {
  std::vector<int> kept_offs, traced_offs;
  int n_kept = 0;
};

TraceLayout trace_layout(int n, const std::vector<int>& discard) {
  if (discard.empty()) throw std::invalid_argument("nothing to trace out");
  auto tr_strides = target_strides(n, discard);  // validates range/duplicates
  std::vector<bool> is_discard(n, false);
  for (int q : discard) is_discard[q] = true;
  std::vector<int> kept_strides;
  for (int q = 0; q < n; ++q)
    if (!is_discard[q]) kept_strides.push_back(1 << (n - 1 - q));
  if (kept_strides.empty())
    throw std::invalid_argument("cannot discard every qubit of the register");
  TraceLayout lay;
  lay.n_kept = static_cast<int>(kept_strides.size());
  lay.kept_offs = local_offsets(kept_strides);
  lay.traced_offs = local_offsets(tr_strides);
  return lay;
}

}  // namespace

DensityMatrix partial_trace(const DensityMatrix& state,
                            const std::vector<int>& discard) {
  TraceLayout lay = trace_layout(state.qubits(), discard);
  const int dk = 1 << lay.n_kept;
  Mat out = Mat::Zero(dk, dk);
  const Mat& rho = state.matrix();
  for (int b = 0; b < dk; ++b)
    for (int a = 0; a < dk; ++a) {
      c64 acc(0, 0);
      for (int t : lay.traced_offs)
        acc += rho(lay.kept_offs[a] + t, lay.kept_offs[b] + t);
      out(a, b) = acc;
    }
  return DensityMatrix::from_matrix(std::move(out));
}

DensityMatrix partial_trace(const PureState& state,
                            const std::vector<int>& discard) {
  TraceLayout lay = trace_layout(state.qubits(), discard);
  const int dk = 1 << lay.n_kept;
  Mat out = Mat::Zero(dk, dk);
  const Vec& psi = state.amplitudes();
  for (int b = 0; b < dk; ++b)
    for (int a = 0; a < dk; ++a) {
      c64 acc(0, 0);
      for (int t : lay.traced_offs)
        acc += psi(lay.kept_offs[a] + t) * std::conj(psi(lay.kept_offs[b] + t));
      out(a, b) = acc;
    }
  return DensityMatrix::from_matrix(std::move(out));
}

namespace {

double clamp_probability(double p, const char* what) {
  if (!std::isfinite(p) || p < -1e-9 || p > 1.0 + 1e-9)
    throw std::runtime_error(std::string(what) + " outside [0,1] beyond roundoff");
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

}  // namespace

double projector_expectation(const DensityMatrix& state, int basis_index) {
  const Eigen::Index dim = state.matrix().rows();
  if (basis_index < 0 || basis_index >= dim)
    throw std::out_of_range("basis index out of range");
  return clamp_probability(state.matrix()(basis_index, basis_index).real(),
                           "projector expectation");
}

double projector_expectation(const PureState& state, int basis_index) {
  const Eigen::Index dim = state.amplitudes().size();
  if (basis_index < 0 || basis_index >= dim)
    throw std::out_of_range("basis index out of range");
  return clamp_probability(std::norm(state.amplitudes()(basis_index)),
                           "projector expectation");
}

}  // namespace qcmm
