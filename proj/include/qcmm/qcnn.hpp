#pragma once

#include <string>

#include "qcmm/fusion.hpp"
#include "qcmm/qtensor.hpp"
#include "qcmm/types.hpp"

namespace qcmm {

// Hierarchical convolution + pooling classifier. Each block halves the
// qubit count; after the last block the two lowest-index survivors are
// measured, so the default 8-qubit, 2-block network reads original qubits
// 0 and 4 as the class register.
struct QcnnConfig {
  int n_qubits_in = 8;
  int blocks = 2;
  std::string kernel = "SO4";
};

void validate_config(const QcnnConfig& cfg);

// Trainable angles: per block, kernel parameters then the two pool angles.
int qcnn_param_count(const QcnnConfig& cfg);

// Qubits measured at the end (at most 2).
int qcnn_final_qubits(const QcnnConfig& cfg);

struct Prediction {
  RVec probs;
};

struct ParamCounts {
  int fusion;
  int qcnn;
  int total_quantum;
};
ParamCounts count_parameters(const QcnnConfig& cfg, int d);

Prediction qcnn_forward(const DensityMatrix& in, const QcnnConfig& cfg,
                        const RVec& params);
// Pure inputs stay state-vector until the first pool trace.
Prediction qcnn_forward(const PureState& in, const QcnnConfig& cfg,
                        const RVec& params);
Prediction qcnn_forward(const FusedState& in, const QcnnConfig& cfg,
                        const RVec& params);

}  // namespace qcmm
