#pragma once

#include <functional>
#include <vector>

#include "qcmm/model.hpp"
#include "qcmm/types.hpp"

namespace qcmm {

// Central-difference gradient of an arbitrary scalar loss. Probes every
// coordinate twice; throws if the loss returns a non-finite value.
RVec fd_gradient(const std::function<double(const RVec&)>& loss,
                 const RVec& params, double eps);

// Two-term parameter-shift rule (f(x + pi/2) - f(x - pi/2)) / 2. Exact for
// an output that is a Born probability of a circuit where x feeds a single
// one-qubit rotation.
double shift_gradient(const std::function<double(double)>& prob, double x);

// Shift-rule derivative of one class probability of an arbitrary model
// function. Exact when the parameter enters the circuit as the angle of
// exactly one placed single-qubit rotation (an angle shared across several
// placements needs one shift per placement instead). Classical weights and
// controlled rotations break the two-eigenvalue assumption and are rejected
// via `kinds`, which is indexed like `params`.
double shift_gradient(const std::function<RVec(const RVec&)>& model_fn,
                      const RVec& params, const std::vector<ParamClass>& kinds,
                      int param_index, int class_index);

// Mean cross-entropy of the batch, samples reduced in order.
double batch_loss(const std::vector<Sample>& batch, const ParamStore& params);

struct BackwardResult {
  RVec grad;  // d mean_loss / d flat parameters, frozen entries zeroed
  double mean_loss = 0.0;
};

// Exact reverse-mode gradient of the mean batch loss through the full
// pipeline: perceptrons, fusion, circuit blocks, pooling traces and the
// readout. Matches fd_gradient to truncation error at a fraction of the
// cost of probing parameters one by one.
BackwardResult backward(const std::vector<Sample>& batch,
                        const ParamStore& params);

}  // namespace qcmm
