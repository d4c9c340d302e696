#include "qcmm/ansatz.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "qcmm/gates.hpp"
#include "qcmm/qtensor.hpp"

using namespace qcmm;

// Literal two-qubit constructions, kept deliberately dumb: every kernel's
// expected matrix is written out gate by gate with explicit kron/projector
// algebra, independent of the library's placement machinery.
namespace {

Mat tI() { return Mat::Identity(2, 2); }

Mat tRx(double t) {
  Mat m(2, 2);
  m << std::cos(t / 2), c64(0, -std::sin(t / 2)), c64(0, -std::sin(t / 2)),
      std::cos(t / 2);
  return m;
}

Mat tRy(double t) {
  Mat m(2, 2);
  m << std::cos(t / 2), -std::sin(t / 2), std::sin(t / 2), std::cos(t / 2);
  return m;
}

Mat tRz(double t) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = std::exp(c64(0, -t / 2));
  m(1, 1) = std::exp(c64(0, t / 2));
  return m;
}

Mat tU3(double t, double p, double l) {
  Mat m(2, 2);
  m(0, 0) = std::cos(t / 2);
  m(0, 1) = -std::exp(c64(0, l)) * std::sin(t / 2);
  m(1, 0) = std::exp(c64(0, p)) * std::sin(t / 2);
  m(1, 1) = std::exp(c64(0, p + l)) * std::cos(t / 2);
  return m;
}

Mat tH() {
  Mat m(2, 2);
  const double s = 1 / std::sqrt(2.0);
  m << s, s, s, -s;
  return m;
}

Mat tP0() { Mat m = Mat::Zero(2, 2); m(0, 0) = 1; return m; }
Mat tP1() { Mat m = Mat::Zero(2, 2); m(1, 1) = 1; return m; }

Mat on_top(const Mat& g) { return oracle::kron(g, tI()); }
Mat on_bottom(const Mat& g) { return oracle::kron(tI(), g); }
Mat wall(const Mat& a, const Mat& b) { return oracle::kron(a, b); }

// control = top wire (most significant), fires on |1>.
Mat ctrl_top(const Mat& g) {
  return oracle::kron(tP0(), tI()) + oracle::kron(tP1(), g);
}
// control = bottom wire.
Mat ctrl_bottom(const Mat& g) {
  return oracle::kron(tI(), tP0()) + oracle::kron(g, tP1());
}

Mat tCNOT_top() { return ctrl_top(oracle::pauli('x')); }
Mat tCNOT_bottom() { return ctrl_bottom(oracle::pauli('x')); }

Mat tCZ() {
  Mat m = Mat::Identity(4, 4);
  m(3, 3) = -1;
  return m;
}

// Expected kernel matrices, figure order (leftmost gate applied first).
Mat expected_kernel(const std::string& name, const RVec& p) {
  if (name == "TTN") return tCNOT_top() * wall(tRy(p[0]), tRy(p[1]));
  if (name == "SO4")
    return wall(tRy(p[4]), tRy(p[5])) * tCNOT_top() *
           wall(tRy(p[2]), tRy(p[3])) * tCNOT_top() * wall(tRy(p[0]), tRy(p[1]));
  if (name == "U15")
    return tCNOT_top() * wall(tRy(p[2]), tRy(p[3])) * tCNOT_bottom() *
           wall(tRy(p[0]), tRy(p[1]));
  if (name == "SU4")
    return wall(tU3(p[9], p[10], p[11]), tU3(p[12], p[13], p[14])) *
           tCNOT_top() * on_top(tRy(p[8])) * tCNOT_bottom() *
           wall(tRy(p[6]), tRz(p[7])) * tCNOT_top() *
           wall(tU3(p[0], p[1], p[2]), tU3(p[3], p[4], p[5]));
  if (name == "U5")
    return wall(tRz(p[8]), tRz(p[9])) * wall(tRx(p[6]), tRx(p[7])) *
           ctrl_top(tRz(p[5])) * ctrl_bottom(tRz(p[4])) *
           wall(tRz(p[2]), tRz(p[3])) * wall(tRx(p[0]), tRx(p[1]));
  if (name == "U6")
    return wall(tRz(p[8]), tRz(p[9])) * wall(tRx(p[6]), tRx(p[7])) *
           ctrl_top(tRx(p[5])) * ctrl_bottom(tRx(p[4])) *
           wall(tRz(p[2]), tRz(p[3])) * wall(tRx(p[0]), tRx(p[1]));
  if (name == "U9")
    return wall(tRx(p[0]), tRx(p[1])) * tCZ() * wall(tH(), tH());
  if (name == "U13")
    return ctrl_top(tRz(p[5])) * wall(tRy(p[3]), tRy(p[4])) *
           ctrl_bottom(tRz(p[2])) * wall(tRy(p[0]), tRy(p[1]));
  if (name == "U14")
    return ctrl_top(tRx(p[5])) * wall(tRy(p[3]), tRy(p[4])) *
           ctrl_bottom(tRx(p[2])) * wall(tRy(p[0]), tRy(p[1]));
  throw std::logic_error("no expectation for kernel " + name);
}

RVec random_params(int n, SplitMix64& rng) {
  RVec p(n);
  for (int i = 0; i < n; ++i) p[i] = rng.uniform(-2 * kPi, 2 * kPi);
  return p;
}

void expect_mat_near(const Mat& a, const Mat& b, double tol) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  EXPECT_LE(oracle::max_abs_diff(a, b), tol);
}

}  // namespace

TEST(KernelZoo, ParamCounts) {
  const std::map<std::string, int> want = {
      {"TTN", 2}, {"U5", 10}, {"U6", 10}, {"U9", 2},  {"U13", 6},
      {"U14", 6}, {"U15", 4}, {"SO4", 6}, {"SU4", 15}};
  for (const auto& [name, count] : want)
    EXPECT_EQ(kernel_param_count(name), count) << name;
  EXPECT_EQ(kernel_names().size(), want.size());
}

TEST(KernelZoo, UnknownNameRejected) {
  EXPECT_THROW(kernel_param_count("U42"), std::invalid_argument);
  EXPECT_THROW(instantiate_kernel("nope", RVec::Zero(2)), std::invalid_argument);
  EXPECT_THROW(instantiate_kernel("SO4", RVec::Zero(5)), std::invalid_argument);
}

TEST(KernelZoo, MatchesLiteralConstruction) {
  SplitMix64 rng(61);
  for (const auto& name : kernel_names()) {
    RVec p = random_params(kernel_param_count(name), rng);
    GateMatrix got = instantiate_kernel(name, p);
    EXPECT_EQ(got.arity, 2);
    expect_mat_near(got.m, expected_kernel(name, p), 1e-12);
  }
}

TEST(KernelZoo, AllOutputsUnitary) {
  SplitMix64 rng(67);
  for (const auto& name : kernel_names()) {
    RVec p = random_params(kernel_param_count(name), rng);
    Mat u = instantiate_kernel(name, p).m;
    expect_mat_near(Mat(u.adjoint() * u), Mat::Identity(4, 4), 1e-12);
  }
}

TEST(KernelZoo, So4AtZeroIsIdentity) {
  expect_mat_near(instantiate_kernel("SO4", RVec::Zero(6)).m,
                  Mat::Identity(4, 4), 1e-14);
}

TEST(KernelZoo, TtnPiZeroMapsGroundToDoublyExcited) {
  RVec p(2);
  p << kPi, 0.0;
  Vec v = Vec::Zero(4);
  v(0) = 1;
  Vec out = instantiate_kernel("TTN", p).m * v;
  EXPECT_NEAR(std::abs(out(3) - c64(1, 0)), 0.0, 1e-14);
}

TEST(KernelZoo, U9ZeroIsEntanglerOnly) {
  expect_mat_near(instantiate_kernel("U9", RVec::Zero(2)).m,
                  Mat(tCZ() * wall(tH(), tH())), 1e-14);
}

TEST(KernelZoo, InstantiationIsDeterministic) {
  SplitMix64 rng(71);
  RVec p = random_params(6, rng);
  Mat a = instantiate_kernel("U13", p).m;
  Mat b = instantiate_kernel("U13", p).m;
  EXPECT_TRUE(a == b);  // bit-identical: same params, same kernel
}

TEST(KernelZoo, GradientsMatchFiniteDifference) {
  SplitMix64 rng(73);
  const double eps = 1e-6;
  for (const auto& name : kernel_names()) {
    const int np = kernel_param_count(name);
    RVec p = random_params(np, rng);
    KernelWithGrad kg = kernel_with_grad(name, p);
    expect_mat_near(kg.u, instantiate_kernel(name, p).m, 1e-13);
    ASSERT_EQ(static_cast<int>(kg.du.size()), np);
    for (int i = 0; i < np; ++i) {
      RVec pp = p, pm = p;
      pp[i] += eps;
      pm[i] -= eps;
      Mat fd = (instantiate_kernel(name, pp).m - instantiate_kernel(name, pm).m) /
               (2 * eps);
      expect_mat_near(kg.du[i], fd, 1e-7);
    }
  }
}

TEST(LayerPlan, PairCoverage) {
  LayerPlan plan = make_layer_plan(6, "SO4");
  std::vector<std::pair<int, int>> a{{0, 1}, {2, 3}, {4, 5}};
  std::vector<std::pair<int, int>> b{{1, 2}, {3, 4}, {5, 0}};
  EXPECT_EQ(plan.sublayer_a, a);
  EXPECT_EQ(plan.sublayer_b, b);
  LayerPlan tiny = make_layer_plan(2, "TTN");
  std::vector<std::pair<int, int>> tb{{1, 0}};
  EXPECT_EQ(tiny.sublayer_b, tb);
}

TEST(LayerPlan, RejectsOddOrOutOfRange) {
  EXPECT_THROW(make_layer_plan(3, "SO4"), std::invalid_argument);
  EXPECT_THROW(make_layer_plan(0, "SO4"), std::invalid_argument);
  EXPECT_THROW(make_layer_plan(18, "SO4"), std::invalid_argument);
}

TEST(ConvLayer, IdentityKernelGivesIdentity) {
  GateMatrix u = conv_layer(make_layer_plan(4, "SO4"), RVec::Zero(6));
  expect_mat_near(u.m, Mat::Identity(16, 16), 1e-13);
}

TEST(ConvLayer, MatchesDenseOracleOnFourQubits) {
  SplitMix64 rng(79);
  RVec p = random_params(6, rng);
  Mat k = expected_kernel("U13", p);
  // Sublayer A pairs (0,1),(2,3) first, then B pairs (1,2),(3,0).
  Mat u = oracle::embed(k, 4, {3, 0}) * oracle::embed(k, 4, {1, 2}) *
          oracle::embed(k, 4, {2, 3}) * oracle::embed(k, 4, {0, 1});
  expect_mat_near(conv_layer(make_layer_plan(4, "U13"), p).m, u, 1e-12);
}

TEST(ConvLayer, SharedKernelIsTranslationInvariant) {
  SplitMix64 rng(83);
  const int n = 8;
  RVec p = random_params(4, rng);
  Mat u = conv_layer(make_layer_plan(n, "U15"), p).m;
  // Permutation that relabels qubit q as q+2 (mod 8).
  const int dim = 1 << n;
  Mat perm = Mat::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    int j = 0;
    for (int q = 0; q < n; ++q) {
      int bit = (i >> (n - 1 - ((q + 2) % n))) & 1;
      j |= bit << (n - 1 - q);
    }
    perm(j, i) = 1;
  }
  expect_mat_near(Mat(perm * u * perm.adjoint()), u, 1e-10);
}

TEST(PoolingUnit, ZeroAnglesIdentity) {
  expect_mat_near(pooling_unit(0, 0).m, Mat::Identity(4, 4), 1e-15);
}

TEST(PoolingUnit, MatchesProjectorForm) {
  SplitMix64 rng(89);
  for (int i = 0; i < 5; ++i) {
    double t1 = rng.uniform(-4, 4), t2 = rng.uniform(-4, 4);
    Mat want = oracle::kron(tP1(), tRz(t1)) + oracle::kron(tP0(), tRx(t2));
    expect_mat_near(pooling_unit(t1, t2).m, want, 1e-14);
  }
}

TEST(PoolingUnit, ExcitedSourceAppliesPhaseOnly) {
  // source |1>, target |0>, t1 = pi: pure phase -i on the target's |0> branch.
  Vec v = Vec::Zero(4);
  v(2) = 1;  // |10>
  Vec out = pooling_unit(kPi, 0.123).m * v;
  EXPECT_NEAR(std::abs(out(2) - c64(0, -1)), 0.0, 1e-14);
  EXPECT_NEAR(std::norm(out(2)), 1.0, 1e-14);  // populations unchanged
}

TEST(PoolingUnit, GroundSourceRotatesTarget) {
  // source |0>, target |0>, t2 = pi: target population moves to |1>.
  Vec v = Vec::Zero(4);
  v(0) = 1;
  Vec out = pooling_unit(0.77, kPi).m * v;
  EXPECT_NEAR(std::norm(out(1)), 1.0, 1e-14);
}

TEST(PoolingUnit, DerivativesMatchFiniteDifference) {
  const double eps = 1e-6;
  double t1 = 0.9, t2 = -1.3;
  Mat fd1 = (pooling_unit(t1 + eps, t2).m - pooling_unit(t1 - eps, t2).m) / (2 * eps);
  Mat fd2 = (pooling_unit(t1, t2 + eps).m - pooling_unit(t1, t2 - eps).m) / (2 * eps);
  expect_mat_near(pooling_unit_derivative(0, t1, t2), fd1, 1e-8);
  expect_mat_near(pooling_unit_derivative(1, t1, t2), fd2, 1e-8);
}

TEST(PoolLayer, TwoQubitExample) {
  // |10>: target qubit 0 is |1>, source qubit 1 is |0>; zero angles pool to |1><1|.
  Vec v = Vec::Zero(4);
  v(2) = 1;
  DensityMatrix rho = DensityMatrix::from_pure(PureState::from_amplitudes(v));
  DensityMatrix out = pool_layer(rho, 0, 0);
  EXPECT_EQ(out.qubits(), 1);
  EXPECT_NEAR(out.matrix()(1, 1).real(), 1.0, 1e-14);
}

TEST(PoolLayer, MatchesDenseOracle) {
  SplitMix64 rng(97);
  for (int it = 0; it < 5; ++it) {
    Mat rho = oracle::random_density(16, rng);
    double t1 = rng.uniform(-4, 4), t2 = rng.uniform(-4, 4);
    Mat unit = oracle::kron(tP1(), tRz(t1)) + oracle::kron(tP0(), tRx(t2));
    // Units act on (source=1, target=0) and (source=3, target=2).
    Mat full = oracle::embed(unit, 4, {3, 2}) * oracle::embed(unit, 4, {1, 0});
    Mat evolved = full * rho * full.adjoint();
    Mat want = oracle::partial_trace(evolved, 4, {1, 3});
    DensityMatrix got = pool_layer(DensityMatrix::from_matrix(rho), t1, t2);
    EXPECT_EQ(got.qubits(), 2);
    expect_mat_near(got.matrix(), want, 1e-10);
  }
}

TEST(PoolLayer, PureInputAgreesWithDensityInput) {
  SplitMix64 rng(101);
  Vec psi = oracle::random_state(16, rng);
  PureState ps = PureState::from_amplitudes(psi);
  DensityMatrix dm = DensityMatrix::from_pure(ps);
  DensityMatrix a = pool_layer(ps, 0.4, 1.1);
  DensityMatrix b = pool_layer(dm, 0.4, 1.1);
  expect_mat_near(a.matrix(), b.matrix(), 1e-12);
}

TEST(PoolLayer, OutputIsValidState) {
  SplitMix64 rng(103);
  Mat rho = oracle::random_density(64, rng);
  DensityMatrix out = pool_layer(DensityMatrix::from_matrix(rho), 2.2, -0.6);
  EXPECT_EQ(out.qubits(), 3);
  EXPECT_NO_THROW(out.validate(1e-10));
}
