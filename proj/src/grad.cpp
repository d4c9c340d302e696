#include "qcmm/grad.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "qcmm/ansatz.hpp"
#include "qcmm/classical.hpp"
#include "qcmm/fusion.hpp"
#include "qcmm/gates.hpp"
#include "qcmm/qcnn.hpp"
#include "qcmm/qtensor.hpp"

namespace qcmm {
namespace {

// One recorded circuit operation: either a placed gate (with the derivative
// of each angle that feeds it) or a partial trace.
struct Step {
  bool trace = false;
  Mat u;
  std::vector<int> targets;
  std::vector<std::pair<int, Mat>> derivs;  // (circuit param index, du/dp)
  std::vector<int> discard;
  int n_before = 0;  // register width entering this step, set while running
};

std::vector<int> kept_qubits(const Step& s) {
  std::vector<bool> dropped(s.n_before, false);
  for (int q : s.discard) dropped[q] = true;
  std::vector<int> kept;
  for (int q = 0; q < s.n_before; ++q)
    if (!dropped[q]) kept.push_back(q);
  return kept;
}

// Unrolls the whole quantum circuit: an optional CNOT prefix, then per block
// the shared convolution kernel over both sublayers, the pooling units and
// the trace of the pooled sources, then the readout trim.
std::vector<Step> build_program(const QcnnConfig& cfg, const RVec& qparams,
                                const std::vector<std::pair<int, int>>& prefix) {
  std::vector<Step> steps;
  const Mat cx = cnot().m;
  for (const auto& [control, target] : prefix) {
    Step s;
    s.u = cx;
    s.targets = {control, target};
    steps.push_back(std::move(s));
  }
  const int k = kernel_param_count(cfg.kernel);
  int n = cfg.n_qubits_in;
  int at = 0;
  for (int b = 0; b < cfg.blocks; ++b) {
    KernelWithGrad kg = kernel_with_grad(cfg.kernel, qparams.segment(at, k));
    LayerPlan plan = make_layer_plan(n, cfg.kernel);
    auto add_pair = [&](int top, int bottom) {
      Step s;
      s.u = kg.u;
      s.targets = {top, bottom};
      s.derivs.reserve(k);
      for (int i = 0; i < k; ++i) s.derivs.emplace_back(at + i, kg.du[i]);
      steps.push_back(std::move(s));
    };
    for (const auto& [top, bottom] : plan.sublayer_a) add_pair(top, bottom);
    for (const auto& [top, bottom] : plan.sublayer_b) add_pair(top, bottom);
    const double t1 = qparams[at + k], t2 = qparams[at + k + 1];
    const Mat unit = pooling_unit(t1, t2).m;
    const Mat d1 = pooling_unit_derivative(0, t1, t2);
    const Mat d2 = pooling_unit_derivative(1, t1, t2);
    Step tr;
    tr.trace = true;
    for (const auto& [source, target] : pool_pairs(n)) {
      Step s;
      s.u = unit;
      s.targets = {source, target};
      s.derivs.emplace_back(at + k, d1);
      s.derivs.emplace_back(at + k + 1, d2);
      steps.push_back(std::move(s));
      tr.discard.push_back(source);
    }
    steps.push_back(std::move(tr));
    at += k + 2;
    n /= 2;
  }
  if (n > 2) {
    Step tr;
    tr.trace = true;
    for (int q = 2; q < n; ++q) tr.discard.push_back(q);
    steps.push_back(std::move(tr));
  }
  return steps;
}

// Everything the reverse sweep needs: the state entering every gate, and for
// circuits that start pure, the state vector entering the first trace.
struct Tape {
  std::vector<Step> steps;
  bool pure_entry = false;
  int boundary = -1;
  std::vector<Mat> pre_m;
  std::vector<Vec> pre_v;
  Vec psi_boundary;
  RVec probs;  // raw diagonal of the final register
};

GateMatrix as_gate(const Step& s) {
  return GateMatrix{s.u, static_cast<int>(s.targets.size())};
}

void run_forward(Tape& t, DensityMatrix rho) {
  t.pre_m.assign(t.steps.size(), Mat());
  for (size_t i = 0; i < t.steps.size(); ++i) {
    Step& s = t.steps[i];
    s.n_before = rho.qubits();
    if (s.trace) {
      rho = partial_trace(rho, s.discard);
    } else {
      t.pre_m[i] = rho.matrix();
      apply_unitary(rho, as_gate(s), s.targets);
    }
  }
  t.probs = rho.matrix().diagonal().real();
}

void run_forward(Tape& t, PureState psi) {
  t.pure_entry = true;
  t.pre_m.assign(t.steps.size(), Mat());
  t.pre_v.assign(t.steps.size(), Vec());
  DensityMatrix rho(1);
  bool pure = true;
  for (size_t i = 0; i < t.steps.size(); ++i) {
    Step& s = t.steps[i];
    s.n_before = pure ? psi.qubits() : rho.qubits();
    if (s.trace) {
      if (pure) {
        t.boundary = static_cast<int>(i);
        t.psi_boundary = psi.amplitudes();
        rho = partial_trace(psi, s.discard);
        pure = false;
      } else {
        rho = partial_trace(rho, s.discard);
      }
    } else if (pure) {
      t.pre_v[i] = psi.amplitudes();
      apply_unitary(psi, as_gate(s), s.targets);
    } else {
      t.pre_m[i] = rho.matrix();
      apply_unitary(rho, as_gate(s), s.targets);
    }
  }
  if (pure) throw std::logic_error("circuit never left the pure segment");
  t.probs = rho.matrix().diagonal().real();
}

// Accumulates w(a, b) += sum over one column of conj(y_a) rho_b with split
// real/imaginary arithmetic; a single pass over both matrices in storage
// order, no transposed copies.
template <int K>
void contract_w_k(const c64* y, const c64* rho, int dim,
                  const std::vector<int>& base, const std::vector<int>& offs,
                  Mat& w) {
  double wr[K * K] = {0.0}, wi[K * K] = {0.0};
  for (int c = 0; c < dim; ++c) {
    const c64* ycol = y + static_cast<size_t>(c) * dim;
    const c64* rcol = rho + static_cast<size_t>(c) * dim;
    for (int b : base) {
      double yr[K], yi[K], rr[K], ri[K];
      for (int j = 0; j < K; ++j) {
        const c64 u = ycol[b + offs[j]];
        yr[j] = u.real();
        yi[j] = u.imag();
        const c64 v = rcol[b + offs[j]];
        rr[j] = v.real();
        ri[j] = v.imag();
      }
      for (int a = 0; a < K; ++a)
        for (int bb = 0; bb < K; ++bb) {
          wr[a + K * bb] += yr[a] * rr[bb] + yi[a] * ri[bb];
          wi[a + K * bb] += yr[a] * ri[bb] - yi[a] * rr[bb];
        }
    }
  }
  for (int bb = 0; bb < K; ++bb)
    for (int a = 0; a < K; ++a) w(a, bb) += c64(wr[a + K * bb], wi[a + K * bb]);
}

// W(a, b) = sum_{r, i} conj(y((a r), i)) rho((b r), i), the contraction that
// reduces Tr(cotangent * placed(du) * rho * placed(u)^dagger) to a small
// matrix pairing with each du.
Mat contract_w(const Mat& y, const Mat& rho, int n,
               const std::vector<int>& targets) {
  Placement pl = make_placement(n, targets);
  const int k = static_cast<int>(pl.offsets.size());
  Mat w = Mat::Zero(k, k);
  const int dim = static_cast<int>(y.rows());
  switch (k) {
    case 2:
      contract_w_k<2>(y.data(), rho.data(), dim, pl.bases, pl.offsets, w);
      break;
    case 4:
      contract_w_k<4>(y.data(), rho.data(), dim, pl.bases, pl.offsets, w);
      break;
    case 8:
      contract_w_k<8>(y.data(), rho.data(), dim, pl.bases, pl.offsets, w);
      break;
    default: {
      Mat yt = y.transpose();  // rows become contiguous columns
      Mat rt = rho.transpose();
      for (int base : pl.bases)
        for (int a = 0; a < k; ++a)
          for (int b = 0; b < k; ++b)
            w(a, b) +=
                yt.col(base + pl.offsets[a]).dot(rt.col(base + pl.offsets[b]));
    }
  }
  return w;
}

// Pure-state analogue: W(a, b) = sum_r conj(lambda[(a r)]) psi[(b r)].
Mat contract_w(const Vec& lambda, const Vec& psi, int n,
               const std::vector<int>& targets) {
  Placement pl = make_placement(n, targets);
  const int k = static_cast<int>(pl.offsets.size());
  Mat w = Mat::Zero(k, k);
  for (int base : pl.bases)
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        w(a, b) += std::conj(lambda[base + pl.offsets[a]]) *
                   psi[base + pl.offsets[b]];
  return w;
}

// Cotangent of the circuit input: the Hermitian matrix pairing with d rho_0
// for mixed entries, or the vector pairing with d psi_0 for pure entries.
struct InputCotangent {
  Mat gbar;
  Vec lambda;
};

// Reverse sweep. Seeds with dL/d diag(rho_final), accumulates every angle
// gradient into qgrad, and propagates the cotangent back to the input.
// Density steps: through rho_t = A rho A^dag the cotangent pulls back as
// A^dag G A, and dL/dp = 2 Re Tr((G A)^dag placed(du) rho). Pure steps use
// the vector forms lambda -> A^dag lambda, dL/dp = 2 Re <lambda|du|psi>.
InputCotangent run_backward(Tape& t, const RVec& dprobs, RVec& qgrad) {
  const int dim = static_cast<int>(dprobs.size());
  Mat gbar = Mat::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) gbar(i, i) = dprobs[i];
  Vec lambda;
  bool density = true;
  for (int i = static_cast<int>(t.steps.size()) - 1; i >= 0; --i) {
    const Step& s = t.steps[i];
    if (s.trace) {
      std::vector<int> kept = kept_qubits(s);
      if (t.pure_entry && i == t.boundary) {
        // Tr_discard |psi><psi| differentiates to lambda = embed(G) psi.
        lambda = t.psi_boundary;
        left_mult_placed_vec(lambda, gbar, s.n_before, kept);
        density = false;
      } else {
        gbar = embed(gbar, s.n_before, kept);
      }
    } else if (density) {
      Mat y = gbar;
      right_mult_placed(y, s.u, s.n_before, s.targets);
      if (!s.derivs.empty()) {
        Mat w = contract_w(y, t.pre_m[i], s.n_before, s.targets);
        for (const auto& [idx, du] : s.derivs)
          qgrad[idx] += 2.0 * du.cwiseProduct(w).sum().real();
      }
      left_mult_placed(y, Mat(s.u.adjoint()), s.n_before, s.targets);
      gbar = std::move(y);
    } else {
      if (!s.derivs.empty()) {
        Mat w = contract_w(lambda, t.pre_v[i], s.n_before, s.targets);
        for (const auto& [idx, du] : s.derivs)
          qgrad[idx] += 2.0 * du.cwiseProduct(w).sum().real();
      }
      left_mult_placed_vec(lambda, Mat(s.u.adjoint()), s.n_before, s.targets);
    }
  }
  return InputCotangent{std::move(gbar), std::move(lambda)};
}

// dL/d factor_j of a product state rho_1 (x) ... (x) rho_d, contracted from
// the cotangent of the materialized register. Prefix/suffix products over
// the other factors avoid dividing by entries that may be zero.
std::vector<Mat> factor_cotangents(const Mat& gbar,
                                   const std::vector<Mat>& factors) {
  const int d = static_cast<int>(factors.size());
  const int dim = 1 << d;
  // Split real/imaginary scalar arithmetic, columns walked in storage order;
  // this loop touches every matrix entry d times and dominates the fusion
  // pullback, so it is written like the gate kernels.
  std::vector<std::array<double, 4>> fre(d), fim(d), outr(d), outi(d);
  for (int j = 0; j < d; ++j) {
    for (int yj = 0; yj < 2; ++yj)
      for (int xj = 0; xj < 2; ++xj) {
        fre[j][yj * 2 + xj] = factors[j](yj, xj).real();
        fim[j][yj * 2 + xj] = factors[j](yj, xj).imag();
      }
    outr[j].fill(0.0);
    outi[j].fill(0.0);
  }
  std::vector<double> pr(d + 1), pi(d + 1), sr(d + 1), si(d + 1);
  std::vector<int> sel(d);
  const c64* gcol = gbar.data();
  for (int y = 0; y < dim; ++y, gcol += dim) {
    for (int x = 0; x < dim; ++x) {
      const double gr = gcol[x].real();
      const double gi = gcol[x].imag();
      if (gr == 0.0 && gi == 0.0) continue;
      for (int j = 0; j < d; ++j)
        sel[j] = (((y >> (d - 1 - j)) & 1) << 1) | ((x >> (d - 1 - j)) & 1);
      pr[0] = 1.0;
      pi[0] = 0.0;
      for (int j = 0; j < d; ++j) {
        const double a = pr[j], b = pi[j];
        const double c = fre[j][sel[j]], e = fim[j][sel[j]];
        pr[j + 1] = a * c - b * e;
        pi[j + 1] = a * e + b * c;
      }
      sr[d] = 1.0;
      si[d] = 0.0;
      for (int j = d - 1; j >= 0; --j) {
        const double a = sr[j + 1], b = si[j + 1];
        const double c = fre[j][sel[j]], e = fim[j][sel[j]];
        sr[j] = a * c - b * e;
        si[j] = a * e + b * c;
      }
      for (int j = 0; j < d; ++j) {
        const double ar = pr[j] * sr[j + 1] - pi[j] * si[j + 1];
        const double ai = pr[j] * si[j + 1] + pi[j] * sr[j + 1];
        outr[j][sel[j]] += gr * ar - gi * ai;
        outi[j][sel[j]] += gr * ai + gi * ar;
      }
    }
  }
  std::vector<Mat> out(d, Mat::Zero(2, 2));
  for (int j = 0; j < d; ++j)
    for (int yj = 0; yj < 2; ++yj)
      for (int xj = 0; xj < 2; ++xj)
        out[j](xj, yj) = c64(outr[j][yj * 2 + xj], outi[j][yj * 2 + xj]);
  return out;
}

// Encoding pullback: dL/dv_j = 2 Re <lambda | d angle_encode / dv_j>.
RVec encode_grads(const Vec& lambda, const RVec& angles) {
  RVec dv(angles.size());
  for (int j = 0; j < angles.size(); ++j)
    dv[j] = 2.0 * lambda.dot(angle_encode_derivative(angles, j)).real();
  return dv;
}

// Flat offsets of each parameter group, mirroring ParamStore::to_flat.
struct Layout {
  int mlp_h_at = -1;
  int mlp_l_at = -1;
  int cls_at = -1;
  int theta_at = 0;
  int qcnn_at = 0;
  int total = 0;
};

Layout layout_of(const ParamStore& p) {
  Layout l;
  int at = 0;
  if (p.mlp_h) {
    l.mlp_h_at = at;
    at += p.mlp_h->param_count();
  }
  if (p.mlp_l) {
    l.mlp_l_at = at;
    at += p.mlp_l->param_count();
  }
  if (p.cls_fusion) {
    l.cls_at = at;
    at += p.cls_fusion->param_count();
  }
  l.theta_at = at;
  at += static_cast<int>(p.fusion_thetas.size());
  l.qcnn_at = at;
  at += static_cast<int>(p.qcnn.size());
  l.total = at;
  return l;
}

void add_mlp_grads(RVec& flat, int at, const MlpGrads& g) {
  for (int i = 0; i < g.w1.rows(); ++i)
    for (int j = 0; j < g.w1.cols(); ++j) flat[at++] += g.w1(i, j);
  for (int i = 0; i < g.b1.size(); ++i) flat[at++] += g.b1[i];
  for (int i = 0; i < g.w2.rows(); ++i)
    for (int j = 0; j < g.w2.cols(); ++j) flat[at++] += g.w2(i, j);
  for (int i = 0; i < g.b2.size(); ++i) flat[at++] += g.b2[i];
}

// Full reverse-mode gradient of one sample's loss, in flat layout.
RVec sample_gradient(const ParamStore& p, const Layout& lay, const Sample& s,
                     double* loss) {
  const ModelConfig& cfg = p.config;
  const QcnnConfig qc = qcnn_config(cfg);
  const bool unimodal =
      cfg.ablation == "hsi-only" || cfg.ablation == "lidar-only";
  const bool fused = cfg.strategy == "qcmm" && !unimodal;
  const bool no_mlp = cfg.ablation == "no-mlp";

  RVec gs = RVec::Zero(lay.total);
  RVec qgrad = RVec::Zero(p.qcnn.size());
  Tape tape;
  RVec vh, vl, enc;
  std::vector<Mat> factors;

  if (fused) {
    vh = no_mlp ? s.x_h : mlp_forward(s.x_h, *p.mlp_h);
    vl = no_mlp ? s.x_l : mlp_forward(s.x_l, *p.mlp_l);
    FusedState in = fuse(vh, vl, p.fusion_thetas);
    factors = in.factors;
    tape.steps = build_program(qc, p.qcnn, {});
    run_forward(tape, in.materialize());
  } else if (unimodal) {
    const RVec& x = cfg.ablation == "hsi-only" ? s.x_h : s.x_l;
    const MlpParams& mlp =
        cfg.ablation == "hsi-only" ? *p.mlp_h : *p.mlp_l;
    enc = mlp_forward(x, mlp);
    tape.steps = build_program(qc, p.qcnn, {});
    run_forward(tape, angle_encode(enc));
  } else if (cfg.strategy == "classical") {
    vh = mlp_forward(s.x_h, *p.mlp_h);
    vl = mlp_forward(s.x_l, *p.mlp_l);
    enc = classical_fusion(vh, vl, *p.cls_fusion);
    tape.steps = build_program(qc, p.qcnn, {});
    run_forward(tape, angle_encode(enc));
  } else {
    vh = mlp_forward(s.x_h, *p.mlp_h);
    vl = mlp_forward(s.x_l, *p.mlp_l);
    enc.resize(8);
    enc << vh, vl;
    tape.steps = build_program(qc, p.qcnn, baseline_topology(cfg.strategy));
    run_forward(tape, angle_encode(enc));
  }

  Prediction pred;
  pred.probs = tape.probs;
  *loss = cross_entropy(pred, s.label);
  RVec dprobs = RVec::Zero(tape.probs.size());
  if (tape.probs[s.label] > kProbFloor)
    dprobs[s.label] = -1.0 / tape.probs[s.label];

  InputCotangent in = run_backward(tape, dprobs, qgrad);
  gs.segment(lay.qcnn_at, p.qcnn.size()) = qgrad;

  if (fused) {
    const int d = cfg.feature_dim;
    std::vector<Mat> kf = factor_cotangents(in.gbar, factors);
    RVec dvh(d), dvl(d);
    for (int j = 0; j < d; ++j) {
      const double theta = p.fusion_thetas[j];
      gs[lay.theta_at + j] +=
          (kf[j] * fuse_triplet_dtheta(vh[j], vl[j], theta)).trace().real();
      const double dp =
          (kf[j] * fuse_triplet_dexcitation(theta)).trace().real();
      dvh[j] = dp * triplet_excitation_dv(vh[j], vl[j]);
      dvl[j] = dp * triplet_excitation_dv(vl[j], vh[j]);
    }
    if (!no_mlp) {
      add_mlp_grads(gs, lay.mlp_h_at, mlp_backward(s.x_h, *p.mlp_h, dvh));
      add_mlp_grads(gs, lay.mlp_l_at, mlp_backward(s.x_l, *p.mlp_l, dvl));
    }
    return gs;
  }

  RVec dv = encode_grads(in.lambda, enc);
  if (unimodal) {
    if (cfg.ablation == "hsi-only")
      add_mlp_grads(gs, lay.mlp_h_at, mlp_backward(s.x_h, *p.mlp_h, dv));
    else
      add_mlp_grads(gs, lay.mlp_l_at, mlp_backward(s.x_l, *p.mlp_l, dv));
  } else if (cfg.strategy == "classical") {
    ClassicalFusionGrads cg =
        classical_fusion_backward(vh, vl, *p.cls_fusion, dv);
    int at = lay.cls_at;
    for (int i = 0; i < cg.w.rows(); ++i)
      for (int j = 0; j < cg.w.cols(); ++j) gs[at++] += cg.w(i, j);
    for (int i = 0; i < cg.b.size(); ++i) gs[at++] += cg.b[i];
    add_mlp_grads(gs, lay.mlp_h_at, mlp_backward(s.x_h, *p.mlp_h, cg.v_h));
    add_mlp_grads(gs, lay.mlp_l_at, mlp_backward(s.x_l, *p.mlp_l, cg.v_l));
  } else {
    add_mlp_grads(gs, lay.mlp_h_at, mlp_backward(s.x_h, *p.mlp_h, dv.head(4)));
    add_mlp_grads(gs, lay.mlp_l_at, mlp_backward(s.x_l, *p.mlp_l, dv.tail(4)));
  }
  return gs;
}

}  // namespace

RVec fd_gradient(const std::function<double(const RVec&)>& loss,
                 const RVec& params, double eps) {
  if (!(eps > 0.0))
    throw std::invalid_argument("finite-difference step must be positive");
  RVec grad(params.size());
  RVec probe = params;
  for (int i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + eps;
    const double hi = loss(probe);
    probe[i] = params[i] - eps;
    const double lo = loss(probe);
    probe[i] = params[i];
    if (!std::isfinite(hi) || !std::isfinite(lo))
      throw std::runtime_error("loss is not finite at a probe point");
    grad[i] = (hi - lo) / (2.0 * eps);
  }
  return grad;
}

double shift_gradient(const std::function<double(double)>& prob, double x) {
  return (prob(x + kPi / 2) - prob(x - kPi / 2)) / 2.0;
}

double shift_gradient(const std::function<RVec(const RVec&)>& model_fn,
                      const RVec& params, const std::vector<ParamClass>& kinds,
                      int param_index, int class_index) {
  if (static_cast<int>(kinds.size()) != params.size())
    throw std::invalid_argument("one parameter kind per parameter expected");
  if (param_index < 0 || param_index >= params.size())
    throw std::out_of_range("parameter index out of range");
  if (kinds[param_index] == ParamClass::kClassical)
    throw std::logic_error("shift rule applies to rotation angles, not weights");
  if (kinds[param_index] == ParamClass::kControlled)
    throw std::logic_error(
        "controlled rotations violate the two-term shift rule");
  RVec probe = params;
  probe[param_index] = params[param_index] + kPi / 2;
  const RVec up = model_fn(probe);
  probe[param_index] = params[param_index] - kPi / 2;
  const RVec down = model_fn(probe);
  if (class_index < 0 || class_index >= up.size())
    throw std::out_of_range("class index out of range");
  return (up[class_index] - down[class_index]) / 2.0;
}

double batch_loss(const std::vector<Sample>& batch, const ParamStore& params) {
  if (batch.empty())
    throw std::invalid_argument("batch loss needs at least one sample");
  double sum = 0.0;
  for (const Sample& s : batch)
    sum += cross_entropy(model_forward(params, s.x_h, s.x_l), s.label);
  return sum / static_cast<double>(batch.size());
}

BackwardResult backward(const std::vector<Sample>& batch,
                        const ParamStore& params) {
  if (batch.empty())
    throw std::invalid_argument("backward needs at least one sample");
  validate_model(params.config);
  const Layout lay = layout_of(params);
  BackwardResult out;
  out.grad = RVec::Zero(lay.total);
  double loss_sum = 0.0;
  for (const Sample& s : batch) {
    double loss = 0.0;
    out.grad += sample_gradient(params, lay, s, &loss);
    loss_sum += loss;
  }
  out.grad /= static_cast<double>(batch.size());
  out.grad = out.grad.cwiseProduct(params.gradient_mask());
  out.mean_loss = loss_sum / static_cast<double>(batch.size());
  if (!out.grad.allFinite() || !std::isfinite(out.mean_loss))
    throw std::runtime_error("gradient is not finite");
  return out;
}

}  // namespace qcmm
