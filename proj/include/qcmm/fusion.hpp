#pragma once

#include <string>
#include <vector>

#include "qcmm/qtensor.hpp"
#include "qcmm/types.hpp"

namespace qcmm {

// Probability that both evidence qubits of a triplet read |1>:
// sin^2(v_h/2) sin^2(v_l/2).
double triplet_excitation(double v_h, double v_l);

// Partial derivative of the excitation wrt its first argument. The function
// is symmetric, so swap arguments for the other slot.
double triplet_excitation_dv(double v_h, double v_l);

// Readout qubit of one fusion triplet after discarding the evidence pair:
// rho = (1 - p) |0><0| + p Ry(theta) |0><0| Ry(theta)^dagger.
Mat fuse_triplet(double v_h, double v_l, double theta);

// Same channel evaluated the expensive way, by simulating all three qubits
// densely and tracing. Kept as a cross-check for the closed form.
Mat fuse_triplet_reference(double v_h, double v_l, double theta);

Mat fuse_triplet_dtheta(double v_h, double v_l, double theta);
// d rho / d p at fixed theta; chain with triplet_excitation_dv for angles.
Mat fuse_triplet_dexcitation(double theta);

// Belief the triplet assigns to its bit when fully excited: sin^2(theta/2).
double belief_mass(double theta);

// Product of independent single-qubit readout densities, one per bit.
// Factor j is qubit j (most significant first) when materialized.
struct FusedState {
  std::vector<Mat> factors;
  int qubits() const { return static_cast<int>(factors.size()); }
  DensityMatrix materialize() const;
};

FusedState fuse(const RVec& v_h, const RVec& v_l, const RVec& thetas);

// Separable angle encoding: qubit j carries Ry(v[j]) |0>.
PureState angle_encode(const RVec& angles);
Vec angle_encode_derivative(const RVec& angles, int j);

// Entangling baselines on 8 qubits: v_h encodes qubits 0..3, v_l qubits
// 4..7, then a fixed CNOT pattern. "circuit-block" wires every h qubit to
// every l qubit (16 gates); "all-to-all" applies rings of stride 1, 2 and 4
// (24 gates).
PureState fuse_baseline(const RVec& v_h, const RVec& v_l,
                        const std::string& topology);
int baseline_gate_count(const std::string& topology);

// CNOT list (control, target) for a baseline topology, in application order.
std::vector<std::pair<int, int>> baseline_topology(const std::string& topology);

}  // namespace qcmm
