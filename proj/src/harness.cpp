#include "qcmm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcmm/grad.hpp"
#include "qcmm/rng.hpp"

namespace qcmm {

using nlohmann::json;

namespace {

// Stream 4; init_params consumes streams 0-3 of the same run seed.
constexpr uint64_t kShuffleStream = 4;

void check_compatible(const ModelConfig& cfg, const DatasetBundle& bundle) {
  bundle.validate();
  if (bundle.spec.d_h != cfg.feature_dim || bundle.spec.d_l != cfg.feature_dim)
    throw std::invalid_argument(
        "dataset features are " + std::to_string(bundle.spec.d_h) + "/" +
        std::to_string(bundle.spec.d_l) + "-dimensional but the model expects " +
        std::to_string(cfg.feature_dim));
  int classes = model_class_count(cfg);
  if (bundle.spec.n_classes != classes)
    throw std::invalid_argument("model reads out " + std::to_string(classes) +
                                " classes but the dataset has " +
                                std::to_string(bundle.spec.n_classes));
}

}  // namespace

void validate_train(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("learning rate must be positive");
  if (cfg.batch_size < 1)
    throw std::invalid_argument("batch size must be positive");
  if (cfg.epochs < 0)
    throw std::invalid_argument("epoch count must be nonnegative");
  validate_model(cfg.model);
}

TrainResult train(const TrainConfig& cfg, const DatasetBundle& bundle) {
  validate_train(cfg);
  check_compatible(cfg.model, bundle);

  TrainResult result;
  result.params = init_params(cfg.model, cfg.seed);
  std::vector<int> order =
      bundle.has_split()
          ? bundle.train_idx
          : [&] {
              std::vector<int> all(bundle.samples.size());
              for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
              return all;
            }();
  const int n_train = static_cast<int>(order.size());

  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  RVec flat = result.params.to_flat();
  RVec m = RVec::Zero(flat.size());
  RVec v = RVec::Zero(flat.size());
  long step = 0;
  const uint64_t shuffle_root = derive_stream(cfg.seed, kShuffleStream);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    SplitMix64 rng(derive_stream(shuffle_root, static_cast<uint64_t>(epoch)));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int start = 0, batch_id = 0; start < n_train;
         start += cfg.batch_size, ++batch_id) {
      const int count = std::min(cfg.batch_size, n_train - start);
      std::vector<Sample> batch;
      batch.reserve(count);
      for (int k = 0; k < count; ++k)
        batch.push_back(bundle.samples[order[start + k]]);
      BackwardResult back;
      try {
        back = backward(batch, result.params);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("training aborted at epoch " +
                                 std::to_string(epoch + 1) + ", batch " +
                                 std::to_string(batch_id + 1) + ": " + e.what());
      }
      if (!std::isfinite(back.mean_loss))
        throw std::runtime_error("training aborted at epoch " +
                                 std::to_string(epoch + 1) + ", batch " +
                                 std::to_string(batch_id + 1) +
                                 ": loss is not finite");
      epoch_loss += back.mean_loss * count;

      ++step;
      m = beta1 * m + (1.0 - beta1) * back.grad;
      v = beta2 * v + (1.0 - beta2) * back.grad.cwiseProduct(back.grad);
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (long i = 0; i < flat.size(); ++i)
        flat[i] -= cfg.learning_rate * (m[i] / c1) /
                   (std::sqrt(v[i] / c2) + eps);
      result.params.from_flat(flat);
    }
    result.history.push_back(epoch_loss / n_train);
  }
  return result;
}

MetricsReport metrics_from_confusion(const Eigen::MatrixXi& confusion) {
  const int c = static_cast<int>(confusion.rows());
  if (c < 2 || confusion.cols() != c)
    throw std::invalid_argument("confusion matrix must be square, >= 2 classes");
  if (confusion.minCoeff() < 0)
    throw std::invalid_argument("confusion counts must be nonnegative");
  const double n = confusion.sum();
  if (n <= 0) throw std::invalid_argument("confusion matrix is empty");

  MetricsReport m;
  m.confusion = confusion;
  m.oa = confusion.diagonal().sum() / n;
  m.per_class_recall = RVec::Zero(c);
  double recall_sum = 0.0;
  int present = 0;
  double expected = 0.0;
  double f1_sum = 0.0;
  for (int i = 0; i < c; ++i) {
    const double row = confusion.row(i).sum();
    const double col = confusion.col(i).sum();
    const double hit = confusion(i, i);
    if (row > 0) {
      m.per_class_recall[i] = hit / row;
      recall_sum += m.per_class_recall[i];
      ++present;
    }
    expected += (row / n) * (col / n);
    const double denom = row + col;  // 2 TP + FP + FN
    f1_sum += denom > 0 ? 2.0 * hit / denom : 0.0;
  }
  if (present == 0) throw std::invalid_argument("no test samples");
  m.aa = recall_sum / present;
  m.kappa = expected < 1.0 ? (m.oa - expected) / (1.0 - expected)
                           : (m.oa == 1.0 ? 1.0 : 0.0);
  m.f1_macro = f1_sum / c;
  return m;
}

MetricsReport evaluate(const ParamStore& params, const DatasetBundle& bundle) {
  check_compatible(params.config, bundle);
  if (bundle.test_idx.empty())
    throw std::invalid_argument("evaluation needs a nonempty test split");
  const int classes = model_class_count(params.config);
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(classes, classes);
  for (int i : bundle.test_idx) {
    const Sample& s = bundle.samples[i];
    Prediction pred = model_forward(params, s.x_h, s.x_l);
    int best = 0;
    for (long k = 1; k < pred.probs.size(); ++k)
      if (pred.probs[k] > pred.probs[best]) best = static_cast<int>(k);
    confusion(s.label, best) += 1;
  }
  return metrics_from_confusion(confusion);
}

DatasetBundle prepare_features(const ModelConfig& cfg,
                               const DatasetBundle& bundle) {
  if (cfg.ablation == "no-mlp") return scale_to_angle_range(bundle);
  return bundle;
}

MetricsReport ablate(const TrainConfig& cfg, const std::string& mode,
                     const DatasetBundle& bundle) {
  TrainConfig run = cfg;
  run.model.ablation = mode;
  validate_train(run);
  DatasetBundle prepared = prepare_features(run.model, bundle);
  TrainResult trained = train(run, prepared);
  return evaluate(trained.params, prepared);
}

void save_checkpoint(const ParamStore& params, const std::string& path) {
  const RVec flat = params.to_flat();
  json header;
  header["format"] = "qcmm-checkpoint";
  header["version"] = 1;
  header["strategy"] = params.config.strategy;
  header["ablation"] = params.config.ablation;
  header["kernel"] = params.config.kernel;
  header["feature_dim"] = params.config.feature_dim;
  header["hidden_dim"] = params.config.hidden_dim;
  header["param_count"] = flat.size();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: failed writing " + path);
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("checkpoint: missing header in " + path);
  json header;
  try {
    header = json::parse(line);
    if (header.at("format").get<std::string>() != "qcmm-checkpoint")
      throw std::runtime_error("checkpoint: " + path +
                               " is not a qcmm checkpoint");
    ModelConfig cfg;
    cfg.strategy = header.at("strategy").get<std::string>();
    cfg.ablation = header.at("ablation").get<std::string>();
    cfg.kernel = header.at("kernel").get<std::string>();
    cfg.feature_dim = header.at("feature_dim").get<int>();
    cfg.hidden_dim = header.at("hidden_dim").get<int>();
    validate_model(cfg);
    ParamStore params = init_params(cfg, 0);
    const long count = header.at("param_count").get<long>();
    if (count != params.total())
      throw std::runtime_error("checkpoint: " + path + " declares " +
                               std::to_string(count) + " parameters, model has " +
                               std::to_string(params.total()));
    RVec flat(count);
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
      throw std::runtime_error("checkpoint: " + path + " blob is truncated");
    params.from_flat(flat);
    return params;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: " + path + ": " + e.what());
  }
}

void write_metrics_json(const MetricsReport& m, const std::string& path) {
  json j;
  j["oa"] = m.oa;
  j["aa"] = m.aa;
  j["kappa"] = m.kappa;
  j["f1_macro"] = m.f1_macro;
  j["per_class_recall"] = std::vector<double>(
      m.per_class_recall.data(), m.per_class_recall.data() + m.per_class_recall.size());
  std::vector<std::vector<int>> confusion(m.confusion.rows());
  for (int i = 0; i < m.confusion.rows(); ++i)
    for (int k = 0; k < m.confusion.cols(); ++k)
      confusion[i].push_back(m.confusion(i, k));
  j["confusion"] = confusion;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

void write_history_csv(const std::vector<double>& history,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,mean_loss\n";
  char buf[64];
  for (size_t e = 0; e < history.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%.17g", history[e]);
    out << (e + 1) << "," << buf << "\n";
  }
}

}  // namespace qcmm
