#pragma once

#include <map>
#include <utility>

#include "qcmm/types.hpp"

namespace qcmm {

// Belief assignment over subsets of a finite frame of discernment. Subsets
// are bitmasks over the frame elements; only positive masses are stored.
class MassFunction {
 public:
  explicit MassFunction(int frame_size);
  static MassFunction vacuous(int frame_size);

  int frame_size() const { return frame_size_; }
  int full_set() const { return (1 << frame_size_) - 1; }

  // Assigns mass to a nonempty subset; zero removes the entry.
  void set(int subset, double mass);
  double mass(int subset) const;
  const std::map<int, double>& masses() const { return masses_; }

  // Masses must lie in [0,1] and sum to 1.
  void validate(double tol = 1e-12) const;

 private:
  int frame_size_;
  std::map<int, double> masses_;
};

// Conjunctive (orthogonal-sum) combination. Returns the normalized mass
// function and the conflict coefficient K, the total mass both sources put
// on disjoint subsets. Contributions to each output subset are summed in
// value order, which makes the result bit-exactly commutative.
std::pair<MassFunction, double> combine_conjunctive(const MassFunction& m1,
                                                    const MassFunction& m2);

// Compares the fusion triplet, simulated densely on all three qubits,
// against the evidential product sin^2(v_h/2) sin^2(v_l/2) sin^2(theta/2).
struct CorrespondenceReport {
  double quantum_mass;
  double evidential_mass;
  double abs_diff;
};
CorrespondenceReport verify_fusion_correspondence(double v_h, double v_l,
                                                  double theta);

}  // namespace qcmm
