#pragma once

#include "qcmm/rng.hpp"
#include "qcmm/types.hpp"

namespace qcmm {

// Two-layer perceptron: v = W2 ReLU(W1 x + b1) + b2. Outputs feed rotation
// gates directly, so there is no output activation.
struct MlpParams {
  RMat w1;
  RVec b1;
  RMat w2;
  RVec b2;
  int in_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int out_dim() const { return static_cast<int>(w2.rows()); }
  int param_count() const {
    return static_cast<int>(w1.size() + b1.size() + w2.size() + b2.size());
  }
};

// Uniform init in [-sqrt(1/fan_in), +sqrt(1/fan_in)] per layer, weights in
// row-major draw order then biases, so checkpoints are reproducible.
MlpParams mlp_init(int in, int hidden, int out, SplitMix64& rng);

RVec mlp_forward(const RVec& x, const MlpParams& p);

struct MlpGrads {
  RMat w1;
  RVec b1;
  RMat w2;
  RVec b2;
  RVec x;
};
// Exact reverse-mode gradients of upstream . mlp_forward(x). The ReLU
// subgradient at exactly zero is taken as zero.
MlpGrads mlp_backward(const RVec& x, const MlpParams& p, const RVec& upstream);

// Projection onto the leading eigenvectors of the sample covariance,
// eigenvalue-descending, each row signed so its largest-magnitude entry is
// positive.
struct PcaModel {
  RVec mean;
  RMat components;  // d x B, orthonormal rows
};
PcaModel pca_fit(const RMat& data, int d);
RVec pca_transform(const PcaModel& model, const RVec& x);

// Single affine layer fusing both aligned modalities: ReLU(W [v_h; v_l] + b).
struct ClassicalFusionParams {
  RMat w;  // 8 x 16
  RVec b;  // 8
  int param_count() const { return static_cast<int>(w.size() + b.size()); }
};
ClassicalFusionParams classical_fusion_init(SplitMix64& rng);
RVec classical_fusion(const RVec& v_h, const RVec& v_l,
                      const ClassicalFusionParams& p);

struct ClassicalFusionGrads {
  RMat w;
  RVec b;
  RVec v_h;
  RVec v_l;
};
ClassicalFusionGrads classical_fusion_backward(const RVec& v_h, const RVec& v_l,
                                               const ClassicalFusionParams& p,
                                               const RVec& upstream);

}  // namespace qcmm
