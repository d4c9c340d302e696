#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qcmm/data.hpp"
#include "qcmm/fusion.hpp"
#include "qcmm/grad.hpp"
#include "qcmm/harness.hpp"
#include "qcmm/model.hpp"
#include "qcmm/qcnn.hpp"
#include "qcmm/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qcmm;

namespace {

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

TrainConfig config_from_file(const std::string& path) {
  TrainConfig cfg;
  if (path.empty()) return cfg;
  json j = parse_json_file(path);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.model.strategy = j.value("strategy", cfg.model.strategy);
  cfg.model.ablation = j.value("ablation", cfg.model.ablation);
  cfg.model.kernel = j.value("kernel", cfg.model.kernel);
  cfg.model.feature_dim = j.value("feature_dim", cfg.model.feature_dim);
  cfg.model.hidden_dim = j.value("hidden_dim", cfg.model.hidden_dim);
  return cfg;
}

DatasetBundle dataset_from_flags(const std::string& manifest,
                                 const std::string& synthetic) {
  if (manifest.empty() == synthetic.empty())
    throw std::runtime_error("give exactly one of --manifest and --synthetic");
  if (!manifest.empty()) return load_dataset(manifest);
  json j = parse_json_file(synthetic);
  SynthSpec spec;
  spec.n_per_class = j.value("n_per_class", spec.n_per_class);
  spec.d = j.value("d", spec.d);
  spec.separation = j.value("separation", spec.separation);
  spec.complementarity = j.value("complementarity", spec.complementarity);
  uint64_t seed = j.value("seed", uint64_t{998244353});
  double fraction = j.value("train_fraction", 0.8);
  return split_dataset(synth_generate(spec, seed), fraction, seed);
}

// Shared by `train` and `ablate`: fit, score the test split, write the
// three artifacts into the output directory.
int run_training(const TrainConfig& cfg, const DatasetBundle& raw,
                 const std::string& out_dir) {
  DatasetBundle bundle = prepare_features(cfg.model, raw);
  TrainResult result = train(cfg, bundle);
  MetricsReport report = evaluate(result.params, bundle);
  fs::create_directories(out_dir);
  fs::path out(out_dir);
  save_checkpoint(result.params, (out / "checkpoint.qcmm").string());
  write_metrics_json(report, (out / "metrics.json").string());
  write_history_csv(result.history, (out / "history.csv").string());
  if (!result.history.empty())
    std::printf("trained %d epochs: mean loss %.6f -> %.6f\n",
                static_cast<int>(result.history.size()), result.history.front(),
                result.history.back());
  std::printf("test OA %.4f  AA %.4f  kappa %.4f  F1 %.4f\n", report.oa,
              report.aa, report.kappa, report.f1_macro);
  std::printf("wrote %s, %s, %s\n", (out / "checkpoint.qcmm").c_str(),
              (out / "metrics.json").c_str(), (out / "history.csv").c_str());
  return 0;
}

int run_eval(const std::string& checkpoint, const DatasetBundle& raw,
             const std::string& out_dir) {
  ParamStore params = load_checkpoint(checkpoint);
  DatasetBundle bundle = prepare_features(params.config, raw);
  MetricsReport report = evaluate(params, bundle);
  fs::create_directories(out_dir);
  fs::path out(out_dir);
  write_metrics_json(report, (out / "metrics.json").string());
  std::printf("test OA %.4f  AA %.4f  kappa %.4f  F1 %.4f\n", report.oa,
              report.aa, report.kappa, report.f1_macro);
  std::printf("wrote %s\n", (out / "metrics.json").c_str());
  return 0;
}

// Full finite-difference audit of the analytic gradient on a seeded
// two-feature toy model.
int run_gradcheck(uint64_t seed) {
  ModelConfig mc;
  mc.kernel = "TTN";
  mc.feature_dim = 2;
  mc.hidden_dim = 8;
  ParamStore params = init_params(mc, seed);
  SplitMix64 rng(derive_stream(seed, 17));
  std::vector<Sample> batch;
  for (int i = 0; i < 3; ++i) {
    Sample s;
    s.x_h = RVec(2);
    s.x_l = RVec(2);
    for (int j = 0; j < 2; ++j) {
      s.x_h[j] = rng.uniform(-2.0, 2.0);
      s.x_l[j] = rng.uniform(-2.0, 2.0);
    }
    s.label = static_cast<int>(rng.next() % 2);
    batch.push_back(s);
  }
  BackwardResult analytic = backward(batch, params);
  RVec fd = fd_gradient(
      [&](const RVec& flat) {
        ParamStore probe = params;
        probe.from_flat(flat);
        return batch_loss(batch, probe);
      },
      params.to_flat(), 1e-4);
  double dev = (analytic.grad - fd).cwiseAbs().maxCoeff();
  std::printf(
      "gradient check over %d parameters: max |analytic - finite difference| "
      "= %.3e (tolerance 1e-5)\n",
      params.total(), dev);
  std::printf(dev <= 1e-5 ? "PASS\n" : "FAIL\n");
  return dev <= 1e-5 ? 0 : 1;
}

// Belief masses of a fusion layer plus a randomized audit that the fused
// readout population matches sin^2(v_h/2) sin^2(v_l/2) sin^2(theta/2).
int run_fuse_demo(const std::string& checkpoint, uint64_t seed) {
  RVec thetas;
  if (checkpoint.empty()) {
    thetas = RVec::Constant(8, kPi);
    std::printf("no checkpoint given; showing a fresh fusion layer\n");
  } else {
    ParamStore params = load_checkpoint(checkpoint);
    if (params.fusion_thetas.size() == 0)
      throw std::runtime_error("checkpoint " + checkpoint +
                               " has no fusion layer (strategy " +
                               params.config.strategy + ")");
    thetas = params.fusion_thetas;
  }
  std::printf("feature   theta      belief mass sin^2(theta/2)\n");
  for (long j = 0; j < thetas.size(); ++j)
    std::printf("%7ld   %8.5f   %.6f\n", j, thetas[j], belief_mass(thetas[j]));

  SplitMix64 rng(seed);
  double max_dev = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double v_h = rng.uniform(0.0, 2.0 * kPi);
    double v_l = rng.uniform(0.0, 2.0 * kPi);
    double theta = rng.uniform(0.0, 2.0 * kPi);
    double quantum = fuse_triplet_reference(v_h, v_l, theta)(1, 1).real();
    double closed = triplet_excitation(v_h, v_l) * belief_mass(theta);
    max_dev = std::max(max_dev, std::abs(quantum - closed));
  }
  std::printf(
      "correspondence over 1000 random triples: max |simulated mass - "
      "closed form| = %.3e (tolerance 1e-12)\n",
      max_dev);
  return max_dev <= 1e-12 ? 0 : 1;
}

int run_paramcount(const std::string& kernel, int d, int hidden) {
  ModelConfig mc;
  mc.kernel = kernel;
  mc.feature_dim = d;
  mc.hidden_dim = hidden;
  validate_model(mc);
  ParamCounts counts = count_parameters(qcnn_config(mc), d);
  ParamStore params = init_params(mc, 0);
  int mlp = params.mlp_h->param_count() + params.mlp_l->param_count();
  std::printf("kernel %s, %d features per modality\n", kernel.c_str(), d);
  std::printf("fusion parameters %d\n", counts.fusion);
  std::printf("fusion gates %d\n", d);
  std::printf("qcnn parameters %d\n", counts.qcnn);
  std::printf("quantum total %d\n", counts.total_quantum);
  std::printf("mlp parameters %d (hidden width %d)\n", mlp, hidden);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qcmm: quantum multimodal fusion classifier"};
  app.require_subcommand(1);

  std::string config_path, manifest, synthetic, out_dir = ".", checkpoint;
  std::string kernel, strategy, mode;
  uint64_t seed = 998244353;
  int d = 8, hidden = 64;

  auto add_data_flags = [&](CLI::App* sub) {
    sub->add_option("--manifest", manifest, "dataset manifest JSON");
    sub->add_option("--synthetic", synthetic, "synthetic dataset spec JSON");
    sub->add_option("--out", out_dir, "output directory");
  };
  auto add_model_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "training config JSON");
    sub->add_option("--kernel", kernel, "convolution kernel name");
    sub->add_option("--strategy", strategy, "fusion strategy");
    sub->add_option("--seed", seed, "run seed");
  };

  CLI::App* cmd_train = app.add_subcommand("train", "fit a model");
  add_data_flags(cmd_train);
  add_model_flags(cmd_train);
  cmd_train->add_option("--mode", mode, "ablation mode");

  CLI::App* cmd_eval = app.add_subcommand("eval", "score a checkpoint");
  add_data_flags(cmd_eval);
  cmd_eval->add_option("--checkpoint", checkpoint, "checkpoint file")
      ->required();

  CLI::App* cmd_ablate =
      app.add_subcommand("ablate", "fit and score one ablation");
  add_data_flags(cmd_ablate);
  add_model_flags(cmd_ablate);
  cmd_ablate->add_option("--mode", mode, "ablation mode")->required();

  CLI::App* cmd_gradcheck = app.add_subcommand(
      "gradcheck", "compare analytic gradients against finite differences");
  cmd_gradcheck->add_option("--seed", seed, "fixture seed");

  CLI::App* cmd_fuse = app.add_subcommand(
      "fuse-demo", "print belief masses and the correspondence audit");
  cmd_fuse->add_option("--checkpoint", checkpoint, "checkpoint file");
  cmd_fuse->add_option("--seed", seed, "audit seed");

  CLI::App* cmd_count =
      app.add_subcommand("paramcount", "parameter budget breakdown");
  cmd_count->add_option("--kernel", kernel, "convolution kernel name");
  cmd_count->add_option("--d", d, "features per modality");
  cmd_count->add_option("--hidden", hidden, "mlp hidden width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (cmd_train->parsed() || cmd_ablate->parsed()) {
      TrainConfig cfg = config_from_file(config_path);
      if (!kernel.empty()) cfg.model.kernel = kernel;
      if (!strategy.empty()) cfg.model.strategy = strategy;
      if (!mode.empty()) cfg.model.ablation = mode;
      CLI::App* sub = cmd_train->parsed() ? cmd_train : cmd_ablate;
      if (sub->count("--seed")) cfg.seed = seed;
      return run_training(cfg, dataset_from_flags(manifest, synthetic), out_dir);
    }
    if (cmd_eval->parsed())
      return run_eval(checkpoint, dataset_from_flags(manifest, synthetic),
                      out_dir);
    if (cmd_gradcheck->parsed()) return run_gradcheck(seed);
    if (cmd_fuse->parsed()) return run_fuse_demo(checkpoint, seed);
    if (cmd_count->parsed())
      return run_paramcount(kernel.empty() ? "SO4" : kernel, d, hidden);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
