#include "qcmm/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcmm/fusion.hpp"

namespace qcmm {
namespace {

double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0;
  for (double t : terms) total += t;
  return total;
}

}  // namespace

MassFunction::MassFunction(int frame_size) : frame_size_(frame_size) {
  if (frame_size < 1 || frame_size > kMaxQubits)
    throw std::invalid_argument("frame size must lie in [1, 16]");
}

MassFunction MassFunction::vacuous(int frame_size) {
  MassFunction m(frame_size);
  m.set(m.full_set(), 1.0);
  return m;
}

void MassFunction::set(int subset, double mass) {
  if (subset == 0 && mass != 0.0)
    throw std::invalid_argument("the empty set cannot carry mass");
  if (subset < 0 || subset > full_set())
    throw std::out_of_range("subset outside the frame");
  if (mass < 0.0 || mass > 1.0)
    throw std::invalid_argument("mass must lie in [0, 1]");
  if (mass == 0.0)
    masses_.erase(subset);
  else
    masses_[subset] = mass;
}

double MassFunction::mass(int subset) const {
  auto it = masses_.find(subset);
  return it == masses_.end() ? 0.0 : it->second;
}

void MassFunction::validate(double tol) const {
  double total = 0;
  for (const auto& [subset, m] : masses_) {
    if (m < 0.0 || m > 1.0 + tol)
      throw std::runtime_error("mass outside [0, 1]");
    total += m;
  }
  if (std::abs(total - 1.0) > tol)
    throw std::runtime_error("masses sum to " + std::to_string(total) +
                             ", expected 1");
}

std::pair<MassFunction, double> combine_conjunctive(const MassFunction& m1,
                                                    const MassFunction& m2) {
  if (m1.frame_size() != m2.frame_size())
    throw std::invalid_argument("mass functions live on different frames");
  std::map<int, std::vector<double>> contributions;
  std::vector<double> conflicting;
  for (const auto& [a, ma] : m1.masses())
    for (const auto& [b, mb] : m2.masses()) {
      int c = a & b;
      double product = ma * mb;
      if (c == 0)
        conflicting.push_back(product);
      else
        contributions[c].push_back(product);
    }
  double conflict = sorted_sum(conflicting);
  if (!(conflict < 1.0))
    throw std::domain_error("total conflict: sources share no support");
  MassFunction out(m1.frame_size());
  for (auto& [subset, terms] : contributions) {
    // Normalization can overshoot 1 by a few ulps; the true value cannot.
    double normalized = sorted_sum(terms) / (1.0 - conflict);
    out.set(subset, std::min(normalized, 1.0));
  }
  out.validate(1e-12);
  return {out, conflict};
}

CorrespondenceReport verify_fusion_correspondence(double v_h, double v_l,
                                                  double theta) {
  CorrespondenceReport r;
  r.quantum_mass = fuse_triplet_reference(v_h, v_l, theta)(1, 1).real();
  r.evidential_mass = triplet_excitation(v_h, v_l) * belief_mass(theta);
  r.abs_diff = std::abs(r.quantum_mass - r.evidential_mass);
  return r;
}

}  // namespace qcmm
