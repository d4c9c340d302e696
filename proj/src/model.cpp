#include "qcmm/model.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "qcmm/ansatz.hpp"
#include "qcmm/fusion.hpp"
#include "qcmm/rng.hpp"

namespace qcmm {
namespace {

const std::set<std::string>& known_strategies() {
  static const std::set<std::string> s = {"qcmm", "circuit-block", "all-to-all",
                                          "classical"};
  return s;
}

const std::set<std::string>& known_ablations() {
  static const std::set<std::string> s = {
      "none", "no-mlp", "fixed-fusion", "hsi-only", "lidar-only", "shallow-qcnn"};
  return s;
}

bool uses_fusion_thetas(const ModelConfig& cfg) {
  return cfg.strategy == "qcmm" && cfg.ablation != "hsi-only" &&
         cfg.ablation != "lidar-only";
}

int mlp_out_dim(const ModelConfig& cfg) {
  if (cfg.strategy == "circuit-block" || cfg.strategy == "all-to-all") return 4;
  return cfg.feature_dim;
}

// Qubit count entering the qcnn.
int circuit_width(const ModelConfig& cfg) {
  return cfg.strategy == "qcmm" ? cfg.feature_dim : 8;
}

void write_mlp(const MlpParams& p, RVec& flat, int& at) {
  for (int i = 0; i < p.w1.rows(); ++i)
    for (int j = 0; j < p.w1.cols(); ++j) flat[at++] = p.w1(i, j);
  for (int i = 0; i < p.b1.size(); ++i) flat[at++] = p.b1[i];
  for (int i = 0; i < p.w2.rows(); ++i)
    for (int j = 0; j < p.w2.cols(); ++j) flat[at++] = p.w2(i, j);
  for (int i = 0; i < p.b2.size(); ++i) flat[at++] = p.b2[i];
}

void read_mlp(MlpParams& p, const RVec& flat, int& at) {
  for (int i = 0; i < p.w1.rows(); ++i)
    for (int j = 0; j < p.w1.cols(); ++j) p.w1(i, j) = flat[at++];
  for (int i = 0; i < p.b1.size(); ++i) p.b1[i] = flat[at++];
  for (int i = 0; i < p.w2.rows(); ++i)
    for (int j = 0; j < p.w2.cols(); ++j) p.w2(i, j) = flat[at++];
  for (int i = 0; i < p.b2.size(); ++i) p.b2[i] = flat[at++];
}

}  // namespace

void validate_model(const ModelConfig& cfg) {
  if (!known_strategies().count(cfg.strategy))
    throw std::invalid_argument("unknown strategy: " + cfg.strategy);
  if (!known_ablations().count(cfg.ablation))
    throw std::invalid_argument("unknown ablation: " + cfg.ablation);
  if (cfg.ablation != "none" && cfg.strategy != "qcmm")
    throw std::invalid_argument("ablations apply to the fused model only");
  if (cfg.strategy != "qcmm" && cfg.feature_dim != 8)
    throw std::invalid_argument(cfg.strategy +
                                " requires 8 features per modality");
  if (cfg.hidden_dim < 1)
    throw std::invalid_argument("hidden width must be positive");
  if (cfg.feature_dim < 2 || (cfg.feature_dim & (cfg.feature_dim - 1)) != 0)
    throw std::invalid_argument(
        "feature dimension must be a power of two, at least 2");
  validate_config(qcnn_config(cfg));
}

QcnnConfig qcnn_config(const ModelConfig& cfg) {
  QcnnConfig q;
  q.n_qubits_in = circuit_width(cfg);
  q.kernel = cfg.kernel;
  // Pool until two qubits remain: 8 -> 2 blocks, 4 -> 1; a 2-qubit circuit
  // still pools once, down to a single readout qubit.
  int full = 0;
  for (int n = q.n_qubits_in; n > 2; n /= 2) ++full;
  if (full == 0) full = 1;
  q.blocks = cfg.ablation == "shallow-qcnn" ? 1 : full;
  return q;
}

int model_class_count(const ModelConfig& cfg) {
  return 1 << qcnn_final_qubits(qcnn_config(cfg));
}

int ParamStore::total() const {
  int n = 0;
  if (mlp_h) n += mlp_h->param_count();
  if (mlp_l) n += mlp_l->param_count();
  if (cls_fusion) n += cls_fusion->param_count();
  n += static_cast<int>(fusion_thetas.size() + qcnn.size());
  return n;
}

RVec ParamStore::to_flat() const {
  RVec flat(total());
  int at = 0;
  if (mlp_h) write_mlp(*mlp_h, flat, at);
  if (mlp_l) write_mlp(*mlp_l, flat, at);
  if (cls_fusion) {
    for (int i = 0; i < cls_fusion->w.rows(); ++i)
      for (int j = 0; j < cls_fusion->w.cols(); ++j)
        flat[at++] = cls_fusion->w(i, j);
    for (int i = 0; i < cls_fusion->b.size(); ++i) flat[at++] = cls_fusion->b[i];
  }
  for (int i = 0; i < fusion_thetas.size(); ++i) flat[at++] = fusion_thetas[i];
  for (int i = 0; i < qcnn.size(); ++i) flat[at++] = qcnn[i];
  return flat;
}

void ParamStore::from_flat(const RVec& flat) {
  if (flat.size() != total())
    throw std::invalid_argument("flat vector has wrong length");
  int at = 0;
  if (mlp_h) read_mlp(*mlp_h, flat, at);
  if (mlp_l) read_mlp(*mlp_l, flat, at);
  if (cls_fusion) {
    for (int i = 0; i < cls_fusion->w.rows(); ++i)
      for (int j = 0; j < cls_fusion->w.cols(); ++j)
        cls_fusion->w(i, j) = flat[at++];
    for (int i = 0; i < cls_fusion->b.size(); ++i) cls_fusion->b[i] = flat[at++];
  }
  for (int i = 0; i < fusion_thetas.size(); ++i) fusion_thetas[i] = flat[at++];
  for (int i = 0; i < qcnn.size(); ++i) qcnn[i] = flat[at++];
}

std::vector<ParamClass> ParamStore::param_classes() const {
  std::vector<ParamClass> classes;
  classes.reserve(total());
  int classical = total() - static_cast<int>(fusion_thetas.size() + qcnn.size());
  for (int i = 0; i < classical; ++i) classes.push_back(ParamClass::kClassical);
  for (int i = 0; i < fusion_thetas.size(); ++i)
    classes.push_back(ParamClass::kControlled);
  QcnnConfig q = qcnn_config(config);
  std::vector<ParamKind> kinds = kernel_param_kinds(q.kernel);
  for (int b = 0; b < q.blocks; ++b) {
    for (ParamKind k : kinds)
      classes.push_back(k == ParamKind::kControlled ? ParamClass::kControlled
                                                    : ParamClass::kRotation);
    classes.push_back(ParamClass::kControlled);  // pool theta1
    classes.push_back(ParamClass::kControlled);  // pool theta2
  }
  return classes;
}

RVec ParamStore::gradient_mask() const {
  RVec mask = RVec::Ones(total());
  if (config.ablation == "fixed-fusion") {
    int classical =
        total() - static_cast<int>(fusion_thetas.size() + qcnn.size());
    mask.segment(classical, fusion_thetas.size()).setZero();
  }
  return mask;
}

ParamStore init_params(const ModelConfig& cfg, uint64_t seed) {
  validate_model(cfg);
  ParamStore p;
  p.config = cfg;
  bool want_h = cfg.ablation != "no-mlp" && cfg.ablation != "lidar-only";
  bool want_l = cfg.ablation != "no-mlp" && cfg.ablation != "hsi-only";
  if (want_h) {
    SplitMix64 rng(derive_stream(seed, 0));
    p.mlp_h = mlp_init(cfg.feature_dim, cfg.hidden_dim, mlp_out_dim(cfg), rng);
  }
  if (want_l) {
    SplitMix64 rng(derive_stream(seed, 1));
    p.mlp_l = mlp_init(cfg.feature_dim, cfg.hidden_dim, mlp_out_dim(cfg), rng);
  }
  if (cfg.strategy == "classical") {
    SplitMix64 rng(derive_stream(seed, 2));
    p.cls_fusion = classical_fusion_init(rng);
  }
  if (uses_fusion_thetas(cfg))
    p.fusion_thetas = RVec::Constant(cfg.feature_dim, kPi);
  QcnnConfig q = qcnn_config(cfg);
  SplitMix64 rng(derive_stream(seed, 3));
  p.qcnn.resize(qcnn_param_count(q));
  for (int i = 0; i < p.qcnn.size(); ++i) p.qcnn[i] = rng.uniform(0, 2 * kPi);
  return p;
}

Prediction model_forward(const ParamStore& params, const RVec& x_h,
                         const RVec& x_l) {
  const ModelConfig& cfg = params.config;
  QcnnConfig q = qcnn_config(cfg);
  if (cfg.strategy == "qcmm") {
    if (cfg.ablation == "hsi-only")
      return qcnn_forward(angle_encode(mlp_forward(x_h, *params.mlp_h)), q,
                          params.qcnn);
    if (cfg.ablation == "lidar-only")
      return qcnn_forward(angle_encode(mlp_forward(x_l, *params.mlp_l)), q,
                          params.qcnn);
    RVec v_h = cfg.ablation == "no-mlp" ? x_h : mlp_forward(x_h, *params.mlp_h);
    RVec v_l = cfg.ablation == "no-mlp" ? x_l : mlp_forward(x_l, *params.mlp_l);
    return qcnn_forward(fuse(v_h, v_l, params.fusion_thetas), q, params.qcnn);
  }
  RVec v_h = mlp_forward(x_h, *params.mlp_h);
  RVec v_l = mlp_forward(x_l, *params.mlp_l);
  if (cfg.strategy == "classical")
    return qcnn_forward(angle_encode(classical_fusion(v_h, v_l, *params.cls_fusion)),
                        q, params.qcnn);
  return qcnn_forward(fuse_baseline(v_h, v_l, cfg.strategy), q, params.qcnn);
}

double cross_entropy(const Prediction& pred, int label) {
  if (label < 0 || label >= pred.probs.size())
    throw std::out_of_range("class label outside prediction range");
  return -std::log(std::max(pred.probs[label], kProbFloor));
}

}  // namespace qcmm
