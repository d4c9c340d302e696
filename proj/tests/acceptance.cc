// Acceptance gate: every shipped guarantee is checked once, at its stated
// tolerance and time budget, and reported as exactly one [PASS]/[FAIL] line.
// The process exits nonzero if any line fails. The two training checks run
// the full 25-epoch synthetic experiment, so this binary takes a few minutes;
// everything else finishes in seconds.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qcmm/ansatz.hpp"
#include "qcmm/data.hpp"
#include "qcmm/evidence.hpp"
#include "qcmm/fusion.hpp"
#include "qcmm/gates.hpp"
#include "qcmm/grad.hpp"
#include "qcmm/harness.hpp"
#include "qcmm/model.hpp"
#include "qcmm/qcnn.hpp"
#include "qcmm/qtensor.hpp"
#include "qcmm/rng.hpp"
#include "qcmm/types.hpp"

using namespace qcmm;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

int g_failures = 0;

void report(int idx, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] %d. %s: %s\n", pass ? "PASS" : "FAIL", idx, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

#if defined(__GNUC__)
__attribute__((format(printf, 1, 2)))
#endif
std::string fmt(const char* f, ...) {
  va_list args;
  va_start(args, f);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

// 1. The fused state's joint-excitation mass must equal the closed-form
// evidential product sin^2(v_h/2) sin^2(v_l/2) sin^2(theta/2).
void check_correspondence() {
  Timer t;
  SplitMix64 rng(998244353);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    double v_h = rng.uniform(-2 * kPi, 2 * kPi);
    double v_l = rng.uniform(-2 * kPi, 2 * kPi);
    double theta = rng.uniform(-2 * kPi, 2 * kPi);
    worst = std::max(worst, verify_fusion_correspondence(v_h, v_l, theta).abs_diff);
  }
  double sec = t.seconds();
  report(1, "fused mass matches the evidential product",
         worst <= 1e-12 && sec < 1.0,
         fmt("max |quantum - closed form| %.3e over 1000 triples "
             "(tol 1e-12), %.2f s (budget 1 s)",
             worst, sec));
}

// 2. The factored per-feature fusion must equal a dense 3d-qubit
// simulation (state vector through the embedded gates, outer product,
// trace out the evidence qubits).
void check_decomposability() {
  Timer t;
  SplitMix64 rng(127);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 3;
    RVec v_h(d), v_l(d), thetas(d);
    for (int j = 0; j < d; ++j) {
      v_h[j] = rng.uniform(0, kPi);
      v_l[j] = rng.uniform(0, kPi);
      thetas[j] = rng.uniform(0, 2 * kPi);
    }
    const int n = 3 * d;
    Vec psi = Vec::Zero(1 << n);
    psi(0) = 1;
    Mat ccry = Mat::Identity(8, 8);
    std::vector<int> discard;
    for (int j = 0; j < d; ++j) {
      psi = oracle::embed(rotation_matrix(Axis::Y, v_h[j]), n, {3 * j}) * psi;
      psi = oracle::embed(rotation_matrix(Axis::Y, v_l[j]), n, {3 * j + 1}) * psi;
      ccry.bottomRightCorner(2, 2) = rotation_matrix(Axis::Y, thetas[j]);
      psi = oracle::embed(ccry, n, {3 * j, 3 * j + 1, 3 * j + 2}) * psi;
      discard.push_back(3 * j);
      discard.push_back(3 * j + 1);
    }
    Mat want = oracle::partial_trace(psi * psi.adjoint(), n, discard);
    Mat got = fuse(v_h, v_l, thetas).materialize().matrix();
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
  }
  double sec = t.seconds();
  report(2, "factored fusion matches dense simulate-and-trace",
         worst <= 1e-10 && sec < 10.0,
         fmt("max deviation %.3e over 100 inputs, d in {1,2,3} "
             "(tol 1e-10), %.2f s (budget 10 s)",
             worst, sec));
}

// 3. On a seeded two-feature one-block toy, the analytic gradient of every
// trainable parameter must match a central finite difference.
void check_gradients() {
  Timer t;
  double worst = 0;
  int params_checked = 0;
  for (const std::string& kernel : kernel_names()) {
    ModelConfig mc;
    mc.kernel = kernel;
    mc.feature_dim = 2;
    mc.hidden_dim = 8;
    ParamStore params = init_params(mc, 998244353);
    SplitMix64 rng(derive_stream(998244353, 17));
    std::vector<Sample> batch;
    for (int i = 0; i < 3; ++i) {
      Sample s;
      s.x_h = RVec::NullaryExpr(2, [&](Eigen::Index) { return rng.uniform(-2, 2); });
      s.x_l = RVec::NullaryExpr(2, [&](Eigen::Index) { return rng.uniform(-2, 2); });
      s.label = i % 2;
      batch.push_back(s);
    }
    RVec analytic = backward(batch, params).grad;
    RVec fd = fd_gradient(
        [&](const RVec& flat) {
          ParamStore p = params;
          p.from_flat(flat);
          return batch_loss(batch, p);
        },
        params.to_flat(), 1e-4);
    worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff());
    params_checked += params.total();
  }
  double sec = t.seconds();
  report(3, "analytic gradients match finite differences",
         worst <= 1e-5 && sec < 30.0,
         fmt("max |analytic - FD(1e-4)| %.3e over %d parameters, "
             "all kernels (tol 1e-5), %.2f s (budget 30 s)",
             worst, params_checked, sec));
}

// 4. Exact parameter accounting for the eight-feature model: 8 fusion
// angles driving 8 fusion gates, 2192 classical MLP weights, and the
// per-kernel quantum totals 24 (SO4), 20 (U15), 42 (SU4).
void check_parameter_accounting() {
  Timer t;
  ModelConfig mc;
  std::map<std::string, int> want{{"SO4", 24}, {"U15", 20}, {"SU4", 42}};
  bool pass = true;
  std::string totals;
  for (const auto& [kernel, total] : want) {
    mc.kernel = kernel;
    ParamCounts counts = count_parameters(qcnn_config(mc), mc.feature_dim);
    pass = pass && counts.fusion == 8 && counts.total_quantum == total;
    totals += fmt("%s%s %d/%d", totals.empty() ? "" : ", ", kernel.c_str(),
                  counts.total_quantum, total);
  }
  int gates = static_cast<int>(
      fuse(RVec::Zero(8), RVec::Zero(8), RVec::Constant(8, kPi)).factors.size());
  mc.kernel = "SO4";
  ParamStore params = init_params(mc, 0);
  int mlp = params.mlp_h->param_count() + params.mlp_l->param_count();
  pass = pass && gates == 8 && mlp == 2192;
  report(4, "parameter accounting",
         pass,
         fmt("fusion params 8, fusion gates %d/8, mlp %d/2192, "
             "quantum totals (got/want) %s; exact, %.2f s",
             gates, mlp, totals.c_str(), t.seconds()));
}

MassFunction random_mass(int frame, SplitMix64& rng) {
  MassFunction m(frame);
  const int full = (1 << frame) - 1;
  int supports = 1 + static_cast<int>(rng.next() % 4);
  std::map<int, double> raw;
  raw[full] = 0.1 + rng.u01();
  for (int i = 0; i < supports; ++i) {
    int subset = 1 + static_cast<int>(rng.next() % full);
    raw[subset] += 0.05 + rng.u01();
  }
  double total = 0;
  for (const auto& [s, w] : raw) total += w;
  for (const auto& [s, w] : raw) m.set(s, w / total);
  return m;
}

// 5. Conjunctive combination must reproduce the enumerated two-source
// example and satisfy commutativity, associativity, and the vacuous
// identity on random frames.
void check_conjunctive_combination() {
  Timer t;
  MassFunction m1(2), m2(2);
  m1.set(0b01, 0.6);
  m1.set(0b11, 0.4);
  m2.set(0b10, 0.5);
  m2.set(0b11, 0.5);
  auto [combined, conflict] = combine_conjunctive(m1, m2);
  double ex = std::abs(conflict - 0.3);
  ex = std::max(ex, std::abs(combined.mass(0b01) - 3.0 / 7.0));
  ex = std::max(ex, std::abs(combined.mass(0b10) - 2.0 / 7.0));
  ex = std::max(ex, std::abs(combined.mass(0b11) - 2.0 / 7.0));

  SplitMix64 rng(149);
  double prop = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int frame = 2 + static_cast<int>(rng.next() % 3);
    MassFunction a = random_mass(frame, rng);
    MassFunction b = random_mass(frame, rng);
    MassFunction c = random_mass(frame, rng);
    auto ab = combine_conjunctive(a, b);
    auto ba = combine_conjunctive(b, a);
    auto left = combine_conjunctive(ab.first, c);
    auto right = combine_conjunctive(a, combine_conjunctive(b, c).first);
    auto [ident, k_ident] = combine_conjunctive(a, MassFunction::vacuous(frame));
    prop = std::max(prop, std::abs(ab.second - ba.second));
    prop = std::max(prop, std::abs(k_ident));
    for (int s = 1; s <= a.full_set(); ++s) {
      prop = std::max(prop, std::abs(ab.first.mass(s) - ba.first.mass(s)));
      prop = std::max(prop, std::abs(left.first.mass(s) - right.first.mass(s)));
      prop = std::max(prop, std::abs(ident.mass(s) - a.mass(s)));
    }
  }
  double sec = t.seconds();
  report(5, "conjunctive combination",
         ex <= 1e-12 && prop <= 1e-12,
         fmt("enumerated example (K 0.3, masses 3/7 2/7 2/7) dev %.3e; "
             "commutativity/associativity/identity dev %.3e over 100 "
             "random frames (tol 1e-12), %.2f s",
             ex, prop, sec));
}

struct LearningRun {
  MetricsReport metrics;
  ParamStore params;
  double seconds = 0;
};

LearningRun run_mode(const TrainConfig& base, const std::string& mode,
                     const DatasetBundle& raw) {
  Timer t;
  TrainConfig cfg = base;
  cfg.model.ablation = mode;
  validate_model(cfg.model);
  DatasetBundle bundle = prepare_features(cfg.model, raw);
  TrainResult result = train(cfg, bundle);
  return {evaluate(result.params, bundle), result.params, t.seconds()};
}

// 6/7. The complementary synthetic task: the fused model must clearly beat
// either modality alone, and training the fusion angles must not trail a
// fusion frozen at theta = pi (whose angles must never move).
void check_learning() {
  SynthSpec spec;  // 4 classes, 200/class, d = 8, complementary
  const uint64_t seed = 998244353;
  DatasetBundle raw = split_dataset(synth_generate(spec, seed), 0.8, seed);
  TrainConfig cfg;
  cfg.model.kernel = "SO4";

  LearningRun fused = run_mode(cfg, "none", raw);
  LearningRun hsi = run_mode(cfg, "hsi-only", raw);
  LearningRun lidar = run_mode(cfg, "lidar-only", raw);
  double sec6 = fused.seconds + hsi.seconds + lidar.seconds;
  bool pass6 = fused.metrics.oa >= 0.90 && hsi.metrics.oa <= 0.80 &&
               lidar.metrics.oa <= 0.80 && fused.metrics.oa > hsi.metrics.oa &&
               fused.metrics.oa > lidar.metrics.oa && sec6 <= 900.0;
  report(6, "fused beats unimodal on complementary synthetic data", pass6,
         fmt("fused OA %.4f (need >= 0.90), hsi-only %.4f and lidar-only "
             "%.4f (need <= 0.80, both below fused); %.0f s (budget 900 s)",
             fused.metrics.oa, hsi.metrics.oa, lidar.metrics.oa, sec6));

  LearningRun fixed = run_mode(cfg, "fixed-fusion", raw);
  bool frozen = true;
  for (int j = 0; j < fixed.params.fusion_thetas.size(); ++j)
    frozen = frozen && fixed.params.fusion_thetas[j] == kPi;
  bool pass7 =
      fused.metrics.oa >= fixed.metrics.oa - 0.01 && frozen;
  report(7, "trainable fusion is not inferior to fixed fusion", pass7,
         fmt("trainable OA %.4f vs fixed OA %.4f (need >= fixed - 0.01); "
             "frozen thetas held at pi exactly: %s; %.0f s",
             fused.metrics.oa, fixed.metrics.oa, frozen ? "yes" : "NO",
             fixed.seconds));
}

// 8. External benchmark scores need the original data files and are out of
// scope here; what is guaranteed is that a manifest on disk drives the
// identical train/evaluate/report pipeline end to end.
void check_manifest_pipeline() {
  Timer t;
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() /
                 ("qcmm_accept_" + std::to_string(SplitMix64(t.t0.time_since_epoch().count()).next()));
  fs::create_directories(dir);
  bool pass = false;
  std::string detail;
  try {
    SynthSpec spec;
    spec.n_per_class = 20;
    spec.d = 4;
    DatasetBundle made = split_dataset(synth_generate(spec, 11), 0.75, 11);
    save_manifest(made, dir.string(), "bench");
    DatasetBundle loaded = load_dataset((dir / "bench.json").string());

    TrainConfig cfg;
    cfg.model.feature_dim = 4;
    cfg.epochs = 2;
    DatasetBundle bundle = prepare_features(cfg.model, loaded);
    TrainResult result = train(cfg, bundle);
    MetricsReport metrics = evaluate(result.params, bundle);
    write_metrics_json(metrics, (dir / "metrics.json").string());
    pass = fs::file_size(dir / "metrics.json") > 0 &&
           metrics.confusion.sum() ==
               static_cast<int>(loaded.test_idx.size());
    detail = fmt(
        "manifest -> load -> train -> metrics ran end to end (test OA %.2f, "
        "unconstrained; external benchmark files not bundled), %.2f s",
        metrics.oa, t.seconds());
  } catch (const std::exception& e) {
    detail = std::string("pipeline threw: ") + e.what();
  }
  fs::remove_all(dir);
  report(8, "file-driven benchmark pipeline", pass, detail);
}

// 9. Simulator invariants on randomized cases: kernels and layers are
// unitary, fusion and pooling preserve trace and positivity, and predicted
// probabilities are normalized.
void check_simulator_sanity() {
  Timer t;
  SplitMix64 rng(163);
  const auto& kernels = kernel_names();
  double unit = 0, trace = 0, min_eig = 0, norm = 0;

  for (int i = 0; i < 1000; ++i) {
    const std::string& name = kernels[i % kernels.size()];
    RVec p = RVec::NullaryExpr(kernel_param_count(name),
                               [&](Eigen::Index) { return rng.uniform(-kPi, kPi); });
    Mat u = instantiate_kernel(name, p).m;
    if (i % 7 == 0)
      u = conv_layer(make_layer_plan(4, name),
                     RVec::NullaryExpr(kernel_param_count(name), [&](Eigen::Index) {
                       return rng.uniform(-kPi, kPi);
                     }))
              .m;
    if (i % 5 == 0) u = pooling_unit(rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)).m;
    Mat dev = u * u.adjoint() - Mat::Identity(u.rows(), u.cols());
    unit = std::max(unit, dev.cwiseAbs().maxCoeff());
  }

  Eigen::SelfAdjointEigenSolver<Mat> eig;
  for (int i = 0; i < 1000; ++i) {
    RVec v_h(4), v_l(4), thetas(4);
    for (int j = 0; j < 4; ++j) {
      v_h[j] = rng.uniform(0, kPi);
      v_l[j] = rng.uniform(0, kPi);
      thetas[j] = rng.uniform(0, 2 * kPi);
    }
    DensityMatrix rho = fuse(v_h, v_l, thetas).materialize();
    DensityMatrix pooled =
        pool_layer(rho, rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi));
    trace = std::max(trace, std::abs(rho.matrix().trace() - c64(1, 0)));
    trace = std::max(trace, std::abs(pooled.matrix().trace() - c64(1, 0)));
    eig.compute(pooled.matrix(), Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }

  ModelConfig mc;
  mc.feature_dim = 4;
  ParamStore params = init_params(mc, 29);
  RVec flat = params.to_flat();
  for (int i = 0; i < 1000; ++i) {
    RVec jitter = RVec::NullaryExpr(flat.size(),
                                    [&](Eigen::Index) { return rng.uniform(-1, 1); });
    params.from_flat(flat + jitter);
    RVec x_h = RVec::NullaryExpr(4, [&](Eigen::Index) { return rng.uniform(-3, 3); });
    RVec x_l = RVec::NullaryExpr(4, [&](Eigen::Index) { return rng.uniform(-3, 3); });
    Prediction pred = model_forward(params, x_h, x_l);
    norm = std::max(norm, std::abs(pred.probs.sum() - 1.0));
    norm = std::max(norm, std::max(-pred.probs.minCoeff(), 0.0));
  }

  double sec = t.seconds();
  report(9, "simulator sanity",
         unit <= 1e-10 && trace <= 1e-10 && min_eig >= -1e-10 &&
             norm <= 1e-10 && sec < 60.0,
         fmt("1000 cases each: unitarity dev %.2e, trace dev %.2e, min "
             "eigenvalue %.2e, probability dev %.2e (tol 1e-10), %.1f s "
             "(budget 60 s)",
             unit, trace, min_eig, norm, sec));
}

}  // namespace

int main() {
  try {
    check_correspondence();
    check_decomposability();
    check_gradients();
    check_parameter_accounting();
    check_conjunctive_combination();
    check_learning();
    check_manifest_pipeline();
    check_simulator_sanity();
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("acceptance: %d of 9 checks passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
