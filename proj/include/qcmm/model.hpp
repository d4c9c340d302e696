#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcmm/classical.hpp"
#include "qcmm/qcnn.hpp"
#include "qcmm/types.hpp"

namespace qcmm {

// Strategies: "qcmm" (bit-wise evidential fusion into a mixed state),
// "circuit-block" / "all-to-all" (entangling CNOT baselines on pure states),
// "classical" (affine fusion head before encoding). Ablations modify the
// fused model only.
struct ModelConfig {
  std::string strategy = "qcmm";
  std::string ablation = "none";
  std::string kernel = "SO4";
  int feature_dim = 8;
  int hidden_dim = 64;
};

void validate_model(const ModelConfig& cfg);
QcnnConfig qcnn_config(const ModelConfig& cfg);
int model_class_count(const ModelConfig& cfg);

// How a flat parameter behaves under differentiation: ordinary classical
// weight, plain single-qubit rotation angle, or controlled-rotation angle
// (two-term shift rule invalid).
enum class ParamClass { kClassical, kRotation, kControlled };

// Every trainable parameter of one model. The flat layout is canonical and
// is what optimizers and checkpoints see: mlp_h (w1 rows, b1, w2 rows, b2),
// mlp_l, classical fusion head (w rows, b), fusion thetas, then per-block
// qcnn angles (kernel parameters, pool theta1, pool theta2).
struct ParamStore {
  ModelConfig config;
  std::optional<MlpParams> mlp_h;
  std::optional<MlpParams> mlp_l;
  std::optional<ClassicalFusionParams> cls_fusion;
  RVec fusion_thetas;
  RVec qcnn;

  int total() const;
  RVec to_flat() const;
  void from_flat(const RVec& flat);
  std::vector<ParamClass> param_classes() const;
  // 1 for trainable entries, 0 for entries frozen by the ablation.
  RVec gradient_mask() const;
};

// Deterministic initialization: independent derived streams for mlp_h,
// mlp_l, the classical fusion head and the qcnn angles, so strategies that
// share a component shape share its initial values for a given seed.
// Fusion thetas start at pi (fully passing evidence).
ParamStore init_params(const ModelConfig& cfg, uint64_t seed);

Prediction model_forward(const ParamStore& params, const RVec& x_h,
                         const RVec& x_l);

// One labelled observation; unimodal ablations ignore the unused modality.
struct Sample {
  RVec x_h;
  RVec x_l;
  int label = 0;
};

inline constexpr double kProbFloor = 1e-12;
double cross_entropy(const Prediction& pred, int label);

}  // namespace qcmm
