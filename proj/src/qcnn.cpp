#include "qcmm/qcnn.hpp"

#include <stdexcept>

#include "qcmm/ansatz.hpp"

namespace qcmm {
namespace {

void check_params(const QcnnConfig& cfg, const RVec& params) {
  if (params.size() != qcnn_param_count(cfg))
    throw std::invalid_argument("qcnn expects " +
                                std::to_string(qcnn_param_count(cfg)) +
                                " parameters, got " +
                                std::to_string(params.size()));
}

template <typename State>
void apply_conv(State& state, const QcnnConfig& cfg, const RVec& kernel_params) {
  LayerPlan plan = make_layer_plan(state.qubits(), cfg.kernel);
  GateMatrix kern = instantiate_kernel(cfg.kernel, kernel_params);
  for (const auto& [top, bottom] : plan.sublayer_a)
    apply_unitary(state, kern, {top, bottom});
  for (const auto& [top, bottom] : plan.sublayer_b)
    apply_unitary(state, kern, {top, bottom});
}

Prediction read_out(DensityMatrix state) {
  if (state.qubits() > 2) {
    std::vector<int> extras;
    for (int q = 2; q < state.qubits(); ++q) extras.push_back(q);
    state = partial_trace(state, extras);
  }
  Prediction pred;
  pred.probs.resize(1 << state.qubits());
  for (int c = 0; c < pred.probs.size(); ++c)
    pred.probs[c] = projector_expectation(state, c);
  return pred;
}

// Runs blocks [first, cfg.blocks) on a density matrix, then measures.
Prediction run_density_blocks(DensityMatrix state, const QcnnConfig& cfg,
                              const RVec& params, int first) {
  const int k = kernel_param_count(cfg.kernel);
  int at = first * (k + 2);
  for (int b = first; b < cfg.blocks; ++b) {
    apply_conv(state, cfg, params.segment(at, k));
    at += k;
    double t1 = params[at++], t2 = params[at++];
    state = pool_layer(state, t1, t2);
  }
  return read_out(std::move(state));
}

}  // namespace

void validate_config(const QcnnConfig& cfg) {
  if (cfg.blocks < 1) throw std::invalid_argument("qcnn needs at least 1 block");
  kernel_param_count(cfg.kernel);  // throws on unknown kernels
  int n = cfg.n_qubits_in;
  if (n < 2 || n > kMaxQubits)
    throw std::invalid_argument("qcnn input width out of range");
  for (int b = 0; b < cfg.blocks; ++b) {
    if (n < 2 || n % 2 != 0)
      throw std::invalid_argument("each block needs an even qubit count");
    n /= 2;
  }
}

int qcnn_param_count(const QcnnConfig& cfg) {
  validate_config(cfg);
  return cfg.blocks * (kernel_param_count(cfg.kernel) + 2);
}

int qcnn_final_qubits(const QcnnConfig& cfg) {
  validate_config(cfg);
  int n = cfg.n_qubits_in >> cfg.blocks;
  return n > 2 ? 2 : n;
}

ParamCounts count_parameters(const QcnnConfig& cfg, int d) {
  if (d < 1) throw std::invalid_argument("feature dimension must be positive");
  ParamCounts c;
  c.fusion = d;
  c.qcnn = qcnn_param_count(cfg);
  c.total_quantum = c.fusion + c.qcnn;
  return c;
}

Prediction qcnn_forward(const DensityMatrix& in, const QcnnConfig& cfg,
                        const RVec& params) {
  validate_config(cfg);
  check_params(cfg, params);
  if (in.qubits() != cfg.n_qubits_in)
    throw std::invalid_argument("qcnn input width does not match config");
  return run_density_blocks(in, cfg, params, 0);
}

Prediction qcnn_forward(const PureState& in, const QcnnConfig& cfg,
                        const RVec& params) {
  validate_config(cfg);
  check_params(cfg, params);
  if (in.qubits() != cfg.n_qubits_in)
    throw std::invalid_argument("qcnn input width does not match config");
  PureState psi = in;
  const int k = kernel_param_count(cfg.kernel);
  apply_conv(psi, cfg, params.segment(0, k));
  DensityMatrix state = pool_layer(psi, params[k], params[k + 1]);
  return run_density_blocks(std::move(state), cfg, params, 1);
}

Prediction qcnn_forward(const FusedState& in, const QcnnConfig& cfg,
                        const RVec& params) {
  return qcnn_forward(in.materialize(), cfg, params);
}

}  // namespace qcmm
