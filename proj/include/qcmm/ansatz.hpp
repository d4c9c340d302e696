#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qcmm/qtensor.hpp"
#include "qcmm/types.hpp"

namespace qcmm {

// Two-qubit convolution kernels. Each kernel is a fixed gate sequence over a
// (top, bottom) wire pair; parameters are rotation angles in sequence order.
// The top wire is the more significant qubit of wherever the kernel lands.
const std::vector<std::string>& kernel_names();
int kernel_param_count(const std::string& name);
GateMatrix instantiate_kernel(const std::string& name, const RVec& params);

// Whether a parameter drives a plain single-qubit rotation or a controlled
// rotation. The two-term shift rule is only exact for the former.
enum class ParamKind { kRotation, kControlled };
std::vector<ParamKind> kernel_param_kinds(const std::string& name);

// Kernel matrix together with du/dp for every parameter.
struct KernelWithGrad {
  Mat u;
  std::vector<Mat> du;
};
KernelWithGrad kernel_with_grad(const std::string& name, const RVec& params);

// One convolution layer on n qubits: the shared kernel is applied to the
// even-start pairs (0,1),(2,3),... first, then to the odd-start circular
// pairs (1,2),(3,4),...,(n-1,0).
struct LayerPlan {
  int n_qubits = 0;
  std::string kernel;
  std::vector<std::pair<int, int>> sublayer_a;
  std::vector<std::pair<int, int>> sublayer_b;
};
LayerPlan make_layer_plan(int n_qubits, const std::string& kernel);

// Dense unitary of the whole layer, all pair placements multiplied out.
GateMatrix conv_layer(const LayerPlan& plan, const RVec& params);

// Pooling primitive on (source, target) with source as the more significant
// wire: u = |1><1| (x) Rz(theta1) + |0><0| (x) Rx(theta2).
GateMatrix pooling_unit(double theta1, double theta2);
Mat pooling_unit_derivative(int which, double theta1, double theta2);

// Source qubits 1,3,5,... each pool into the even neighbour below them.
std::vector<std::pair<int, int>> pool_pairs(int n_qubits);

// Applies the shared pooling unit to every pair, then traces out the sources.
// Surviving qubits keep their relative order.
DensityMatrix pool_layer(const DensityMatrix& in, double theta1, double theta2);
DensityMatrix pool_layer(const PureState& in, double theta1, double theta2);

}  // namespace qcmm
