#include "qcmm/classical.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qcmm {
namespace {

void fill_uniform(RMat& m, double bound, SplitMix64& rng) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-bound, bound);
}

void fill_uniform(RVec& v, double bound, SplitMix64& rng) {
  for (int i = 0; i < v.size(); ++i) v[i] = rng.uniform(-bound, bound);
}

}  // namespace

MlpParams mlp_init(int in, int hidden, int out, SplitMix64& rng) {
  if (in < 1 || hidden < 1 || out < 1)
    throw std::invalid_argument("mlp dimensions must be positive");
  MlpParams p;
  p.w1.resize(hidden, in);
  p.b1.resize(hidden);
  p.w2.resize(out, hidden);
  p.b2.resize(out);
  double bound1 = std::sqrt(1.0 / in), bound2 = std::sqrt(1.0 / hidden);
  fill_uniform(p.w1, bound1, rng);
  fill_uniform(p.b1, bound1, rng);
  fill_uniform(p.w2, bound2, rng);
  fill_uniform(p.b2, bound2, rng);
  return p;
}

RVec mlp_forward(const RVec& x, const MlpParams& p) {
  if (x.size() != p.in_dim())
    throw std::invalid_argument("mlp input has wrong dimension");
  RVec h = (p.w1 * x + p.b1).cwiseMax(0.0);
  return p.w2 * h + p.b2;
}

MlpGrads mlp_backward(const RVec& x, const MlpParams& p, const RVec& upstream) {
  if (x.size() != p.in_dim() || upstream.size() != p.out_dim())
    throw std::invalid_argument("mlp backward shapes do not match");
  RVec z = p.w1 * x + p.b1;
  RVec h = z.cwiseMax(0.0);
  MlpGrads g;
  g.w2 = upstream * h.transpose();
  g.b2 = upstream;
  RVec dh = p.w2.transpose() * upstream;
  RVec dz = (z.array() > 0).select(dh, RVec::Zero(dh.size()));
  g.w1 = dz * x.transpose();
  g.b1 = dz;
  g.x = p.w1.transpose() * dz;
  return g;
}

PcaModel pca_fit(const RMat& data, int d) {
  const int n = static_cast<int>(data.rows());
  const int b = static_cast<int>(data.cols());
  if (d < 1 || n <= d || b < d)
    throw std::invalid_argument("pca needs more samples than components");
  PcaModel model;
  model.mean = data.colwise().mean();
  RMat centered = data.rowwise() - model.mean.transpose();
  RMat cov = centered.transpose() * centered / (n - 1);
  Eigen::SelfAdjointEigenSolver<RMat> es(cov);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("pca eigendecomposition failed");
  const RVec& evals = es.eigenvalues();  // ascending
  double floor = evals[b - 1] * 1e-10;
  for (int k = 0; k < d; ++k)
    if (evals[b - 1 - k] <= floor)
      throw std::runtime_error(
          "pca rank deficiency: fewer nonzero eigenvalues than components");
  model.components.resize(d, b);
  for (int k = 0; k < d; ++k) {
    RVec comp = es.eigenvectors().col(b - 1 - k);
    int peak = 0;
    for (int i = 1; i < b; ++i)
      if (std::abs(comp[i]) > std::abs(comp[peak])) peak = i;
    if (comp[peak] < 0) comp = -comp;
    model.components.row(k) = comp.transpose();
  }
  return model;
}

RVec pca_transform(const PcaModel& model, const RVec& x) {
  if (x.size() != model.mean.size())
    throw std::invalid_argument("pca input has wrong dimension");
  return model.components * (x - model.mean);
}

ClassicalFusionParams classical_fusion_init(SplitMix64& rng) {
  ClassicalFusionParams p;
  p.w.resize(8, 16);
  p.b.resize(8);
  double bound = std::sqrt(1.0 / 16);
  fill_uniform(p.w, bound, rng);
  fill_uniform(p.b, bound, rng);
  return p;
}

RVec classical_fusion(const RVec& v_h, const RVec& v_l,
                      const ClassicalFusionParams& p) {
  if (v_h.size() + v_l.size() != p.w.cols())
    throw std::invalid_argument("fusion input has wrong width");
  RVec joint(v_h.size() + v_l.size());
  joint << v_h, v_l;
  return (p.w * joint + p.b).cwiseMax(0.0);
}

ClassicalFusionGrads classical_fusion_backward(const RVec& v_h, const RVec& v_l,
                                               const ClassicalFusionParams& p,
                                               const RVec& upstream) {
  RVec joint(v_h.size() + v_l.size());
  joint << v_h, v_l;
  RVec z = p.w * joint + p.b;
  RVec dz = (z.array() > 0).select(upstream, RVec::Zero(upstream.size()));
  ClassicalFusionGrads g;
  g.w = dz * joint.transpose();
  g.b = dz;
  RVec dj = p.w.transpose() * dz;
  g.v_h = dj.head(v_h.size());
  g.v_l = dj.tail(v_l.size());
  return g;
}

}  // namespace qcmm
