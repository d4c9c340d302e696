#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcmm/data.hpp"
#include "qcmm/model.hpp"
#include "qcmm/types.hpp"

namespace qcmm {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 16;
  int epochs = 25;
  uint64_t seed = 998244353;
  ModelConfig model;
};
void validate_train(const TrainConfig& cfg);

struct TrainResult {
  ParamStore params;
  std::vector<double> history;  // mean loss per epoch
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the mean batch cross-entropy.
// Epoch order reshuffles on a stream derived from (seed, epoch), batches are
// consecutive chunks (last one may be short), and frozen parameters never
// move. Deterministic: (config, bundle, seed) fix the result bit for bit.
TrainResult train(const TrainConfig& cfg, const DatasetBundle& bundle);

struct MetricsReport {
  Eigen::MatrixXi confusion;  // row = true class, column = prediction
  RVec per_class_recall;
  double oa = 0.0;
  double aa = 0.0;
  double kappa = 0.0;
  double f1_macro = 0.0;
};

// Scalar scores from a confusion matrix: OA = trace/N, AA = mean recall over
// classes present in the test split, Cohen's kappa against the marginal
// chance rate, and the unweighted macro F1.
MetricsReport metrics_from_confusion(const Eigen::MatrixXi& confusion);

// Argmax predictions over the bundle's test split.
MetricsReport evaluate(const ParamStore& params, const DatasetBundle& bundle);

// Applies any feature preparation an ablation needs before encoding: the
// MLP-free mode sees raw features, so they are rescaled into [0, pi] using
// train-split statistics. Other modes pass through untouched.
DatasetBundle prepare_features(const ModelConfig& cfg,
                               const DatasetBundle& bundle);

// Sets the ablation mode, trains, and scores the test split.
MetricsReport ablate(const TrainConfig& cfg, const std::string& mode,
                     const DatasetBundle& bundle);

// Checkpoint file: one JSON header line (model config echo + parameter
// count), then the flat parameter vector as little-endian float64.
void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

void write_metrics_json(const MetricsReport& m, const std::string& path);
void write_history_csv(const std::vector<double>& history,
                       const std::string& path);

}  // namespace qcmm
