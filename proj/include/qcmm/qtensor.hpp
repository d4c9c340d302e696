#pragma once

// Dense quantum register primitives. Basis labels are big-endian: qubit 0 is
// the most significant bit of the label, so |01> on two qubits is index 1.
// Registers are capped at kMaxQubits (dense storage only).

#include <stdexcept>
#include <vector>

#include "qcmm/types.hpp"

namespace qcmm {

// A unitary over `arity` qubits. make_gate checks unitarity within 1e-10.
struct GateMatrix {
  Mat m;
  int arity = 0;
};

GateMatrix make_gate(const Mat& m);

class PureState {
 public:
  explicit PureState(int n_qubits);  // |0...0>
  static PureState from_amplitudes(Vec amplitudes);

  int qubits() const { return n_; }
  const Vec& amplitudes() const { return amp_; }
  Vec& amplitudes() { return amp_; }

 private:
  PureState() = default;
  int n_ = 0;
  Vec amp_;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(int n_qubits);  // |0...0><0...0|
  static DensityMatrix from_matrix(Mat rho);
  static DensityMatrix from_pure(const PureState& psi);

  int qubits() const { return n_; }
  const Mat& matrix() const { return rho_; }
  Mat& matrix() { return rho_; }

  // Hermiticity and unit trace within `tol`; eigenvalues above -1e-9.
  void validate(double tol = 1e-10) const;

 private:
  DensityMatrix() = default;
  int n_ = 0;
  Mat rho_;
};

Mat kron(const Mat& a, const Mat& b);

// targets[0] addresses the gate's most significant qubit. Targets must be
// distinct, in range, and match the gate arity.
void apply_unitary(DensityMatrix& state, const GateMatrix& g,
                   const std::vector<int>& targets);
void apply_unitary(PureState& state, const GateMatrix& g,
                   const std::vector<int>& targets);

DensityMatrix partial_trace(const DensityMatrix& state,
                            const std::vector<int>& discard);
DensityMatrix partial_trace(const PureState& state,
                            const std::vector<int>& discard);

// Born probability of the basis projector |k><k|; roundoff clamped to [0,1].
double projector_expectation(const DensityMatrix& state, int basis_index);
double projector_expectation(const PureState& state, int basis_index);

// Placement plumbing shared with the gradient engine. These accept arbitrary
// (non-unitary) small matrices: m <- placed(g) * m, m <- m * placed(g), etc.
void left_mult_placed(Mat& m, const Mat& g, int n_qubits,
                      const std::vector<int>& targets);
void right_mult_placed(Mat& m, const Mat& g, int n_qubits,
                       const std::vector<int>& targets);
void left_mult_placed_vec(Vec& v, const Mat& g, int n_qubits,
                          const std::vector<int>& targets);
Mat embed(const Mat& g, int n_qubits, const std::vector<int>& targets);

// Basis bookkeeping for an operator placed on `targets`: global label =
// bases[r] + offsets[a] where `a` spells the target bits (targets[0] most
// significant) and `r` runs over the remaining qubits.
struct Placement {
  std::vector<int> offsets;
  std::vector<int> bases;
};

Placement make_placement(int n_qubits, const std::vector<int>& targets);

}  // namespace qcmm
