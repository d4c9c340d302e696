#include "qcmm/ansatz.hpp"

#include <map>
#include <stdexcept>

#include "qcmm/gates.hpp"

namespace qcmm {
namespace {

// One gate in a kernel sequence. `wire` is the wire carrying the rotation
// (or the CNOT target); controlled gates are controlled from the other wire.
struct Step {
  enum class Op { kRot, kU3, kCRot, kCnot, kCz, kHad };
  Op op;
  Axis axis = Axis::X;
  int wire = 0;
  int first_param = -1;
};

int step_param_count(const Step& s) {
  switch (s.op) {
    case Step::Op::kRot:
    case Step::Op::kCRot:
      return 1;
    case Step::Op::kU3:
      return 3;
    default:
      return 0;
  }
}

struct Kernel {
  std::vector<Step> steps;
  int param_count = 0;
};

Kernel seal(std::vector<Step> steps) {
  Kernel k;
  int next = 0;
  for (Step& s : steps) {
    int c = step_param_count(s);
    s.first_param = c > 0 ? next : -1;
    next += c;
  }
  k.steps = std::move(steps);
  k.param_count = next;
  return k;
}

Step rot(Axis a, int wire) { return {Step::Op::kRot, a, wire, -1}; }
Step u3g(int wire) { return {Step::Op::kU3, Axis::X, wire, -1}; }
Step crot(Axis a, int target) { return {Step::Op::kCRot, a, target, -1}; }
Step cnot(int target) { return {Step::Op::kCnot, Axis::X, target, -1}; }
Step cz() { return {Step::Op::kCz, Axis::X, 0, -1}; }
Step had(int wire) { return {Step::Op::kHad, Axis::X, wire, -1}; }

std::vector<Step> rot_wall(Axis a) { return {rot(a, 0), rot(a, 1)}; }

std::vector<Step> chain(std::initializer_list<std::vector<Step>> parts) {
  std::vector<Step> all;
  for (const auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  return all;
}

const std::map<std::string, Kernel>& registry() {
  static const std::map<std::string, Kernel> table = [] {
    std::map<std::string, Kernel> t;
    t["TTN"] = seal(chain({rot_wall(Axis::Y), {cnot(1)}}));
    t["SO4"] = seal(chain({rot_wall(Axis::Y),
                           {cnot(1)},
                           rot_wall(Axis::Y),
                           {cnot(1)},
                           rot_wall(Axis::Y)}));
    t["U15"] = seal(chain({rot_wall(Axis::Y), {cnot(0)}, rot_wall(Axis::Y),
                           {cnot(1)}}));
    t["SU4"] = seal({u3g(0), u3g(1), cnot(1), rot(Axis::Y, 0), rot(Axis::Z, 1),
                     cnot(0), rot(Axis::Y, 0), cnot(1), u3g(0), u3g(1)});
    t["U5"] = seal(chain({rot_wall(Axis::X), rot_wall(Axis::Z),
                          {crot(Axis::Z, 0), crot(Axis::Z, 1)},
                          rot_wall(Axis::X), rot_wall(Axis::Z)}));
    t["U6"] = seal(chain({rot_wall(Axis::X), rot_wall(Axis::Z),
                          {crot(Axis::X, 0), crot(Axis::X, 1)},
                          rot_wall(Axis::X), rot_wall(Axis::Z)}));
    t["U9"] = seal(chain({{had(0), had(1), cz()}, rot_wall(Axis::X)}));
    t["U13"] = seal(chain({rot_wall(Axis::Y),
                           {crot(Axis::Z, 0)},
                           rot_wall(Axis::Y),
                           {crot(Axis::Z, 1)}}));
    t["U14"] = seal(chain({rot_wall(Axis::Y),
                           {crot(Axis::X, 0)},
                           rot_wall(Axis::Y),
                           {crot(Axis::X, 1)}}));
    return t;
  }();
  return table;
}

const Kernel& lookup(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end())
    throw std::invalid_argument("unknown kernel: " + name);
  return it->second;
}

Mat place(const Mat& g, int wire) {
  return wire == 0 ? kron(g, Mat::Identity(2, 2)) : kron(Mat::Identity(2, 2), g);
}

// Controlled single-qubit gate with the control on the wire opposite `target`.
Mat place_controlled(const Mat& g, int target) {
  Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
  p0(0, 0) = 1;
  p1(1, 1) = 1;
  Mat eye = Mat::Identity(2, 2);
  return target == 1 ? kron(p0, eye) + kron(p1, g)
                     : kron(eye, p0) + kron(g, p1);
}

Mat step_matrix(const Step& s, const RVec& p) {
  switch (s.op) {
    case Step::Op::kRot:
      return place(rotation_matrix(s.axis, p[s.first_param]), s.wire);
    case Step::Op::kU3:
      return place(
          u3_matrix(p[s.first_param], p[s.first_param + 1], p[s.first_param + 2]),
          s.wire);
    case Step::Op::kCRot:
      return place_controlled(rotation_matrix(s.axis, p[s.first_param]), s.wire);
    case Step::Op::kCnot:
      return place_controlled(pauli_x_gate().m, s.wire);
    case Step::Op::kCz: {
      Mat m = Mat::Identity(4, 4);
      m(3, 3) = -1;
      return m;
    }
    case Step::Op::kHad:
      return place(hadamard().m, s.wire);
  }
  throw std::logic_error("unreachable");
}

// Derivative of the step's 4x4 matrix wrt its (first_param + which) angle.
// Controlled rotations differentiate only inside the control-on block.
Mat step_derivative(const Step& s, const RVec& p, int which) {
  switch (s.op) {
    case Step::Op::kRot:
      return place(rotation_derivative(s.axis, p[s.first_param]), s.wire);
    case Step::Op::kU3:
      return place(u3_derivative(which, p[s.first_param], p[s.first_param + 1],
                                 p[s.first_param + 2]),
                   s.wire);
    case Step::Op::kCRot: {
      Mat p1 = Mat::Zero(2, 2);
      p1(1, 1) = 1;
      Mat d = rotation_derivative(s.axis, p[s.first_param]);
      return s.wire == 1 ? kron(p1, d) : kron(d, p1);
    }
    default:
      throw std::logic_error("step has no parameters");
  }
}

void check_params(const Kernel& k, const RVec& params, const std::string& name) {
  if (params.size() != k.param_count)
    throw std::invalid_argument("kernel " + name + " expects " +
                                std::to_string(k.param_count) + " parameters, got " +
                                std::to_string(params.size()));
}

}  // namespace

const std::vector<std::string>& kernel_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, k] : registry()) v.push_back(name);
    return v;
  }();
  return names;
}

int kernel_param_count(const std::string& name) {
  return lookup(name).param_count;
}

GateMatrix instantiate_kernel(const std::string& name, const RVec& params) {
  const Kernel& k = lookup(name);
  check_params(k, params, name);
  Mat u = Mat::Identity(4, 4);
  for (const Step& s : k.steps) u = step_matrix(s, params) * u;
  return {u, 2};
}

std::vector<ParamKind> kernel_param_kinds(const std::string& name) {
  const Kernel& k = lookup(name);
  std::vector<ParamKind> kinds;
  kinds.reserve(k.param_count);
  for (const Step& s : k.steps)
    for (int i = 0; i < step_param_count(s); ++i)
      kinds.push_back(s.op == Step::Op::kCRot ? ParamKind::kControlled
                                              : ParamKind::kRotation);
  return kinds;
}

KernelWithGrad kernel_with_grad(const std::string& name, const RVec& params) {
  const Kernel& k = lookup(name);
  check_params(k, params, name);
  const int m = static_cast<int>(k.steps.size());
  std::vector<Mat> mats(m), pre(m), post(m);
  for (int i = 0; i < m; ++i) mats[i] = step_matrix(k.steps[i], params);
  Mat acc = Mat::Identity(4, 4);
  for (int i = 0; i < m; ++i) {
    pre[i] = acc;  // product of steps before i
    acc = mats[i] * acc;
  }
  KernelWithGrad out;
  out.u = acc;
  acc = Mat::Identity(4, 4);
  for (int i = m - 1; i >= 0; --i) {
    post[i] = acc;  // product of steps after i
    acc = acc * mats[i];
  }
  out.du.resize(k.param_count);
  for (int i = 0; i < m; ++i)
    for (int w = 0; w < step_param_count(k.steps[i]); ++w)
      out.du[k.steps[i].first_param + w] =
          post[i] * step_derivative(k.steps[i], params, w) * pre[i];
  return out;
}

LayerPlan make_layer_plan(int n_qubits, const std::string& kernel) {
  if (n_qubits < 2 || n_qubits % 2 != 0 || n_qubits > kMaxQubits)
    throw std::invalid_argument("layer needs an even qubit count in [2, 16]");
  lookup(kernel);
  LayerPlan plan;
  plan.n_qubits = n_qubits;
  plan.kernel = kernel;
  for (int q = 0; q + 1 < n_qubits; q += 2) plan.sublayer_a.emplace_back(q, q + 1);
  for (int q = 1; q < n_qubits; q += 2)
    plan.sublayer_b.emplace_back(q, (q + 1) % n_qubits);
  return plan;
}

GateMatrix conv_layer(const LayerPlan& plan, const RVec& params) {
  GateMatrix k = instantiate_kernel(plan.kernel, params);
  const int dim = 1 << plan.n_qubits;
  Mat u = Mat::Identity(dim, dim);
  for (const auto& [top, bottom] : plan.sublayer_a)
    left_mult_placed(u, k.m, plan.n_qubits, {top, bottom});
  for (const auto& [top, bottom] : plan.sublayer_b)
    left_mult_placed(u, k.m, plan.n_qubits, {top, bottom});
  return {u, plan.n_qubits};
}

GateMatrix pooling_unit(double theta1, double theta2) {
  Mat m = Mat::Zero(4, 4);
  m.topLeftCorner(2, 2) = rotation_matrix(Axis::X, theta2);
  m.bottomRightCorner(2, 2) = rotation_matrix(Axis::Z, theta1);
  return {m, 2};
}

Mat pooling_unit_derivative(int which, double theta1, double theta2) {
  Mat m = Mat::Zero(4, 4);
  if (which == 0)
    m.bottomRightCorner(2, 2) = rotation_derivative(Axis::Z, theta1);
  else if (which == 1)
    m.topLeftCorner(2, 2) = rotation_derivative(Axis::X, theta2);
  else
    throw std::invalid_argument("pooling unit has two parameters");
  return m;
}

std::vector<std::pair<int, int>> pool_pairs(int n_qubits) {
  if (n_qubits < 2 || n_qubits % 2 != 0)
    throw std::invalid_argument("pooling needs an even qubit count");
  std::vector<std::pair<int, int>> pairs;
  for (int q = 1; q < n_qubits; q += 2) pairs.emplace_back(q, q - 1);
  return pairs;
}

DensityMatrix pool_layer(const DensityMatrix& in, double theta1, double theta2) {
  DensityMatrix state = in;
  GateMatrix unit = pooling_unit(theta1, theta2);
  std::vector<int> sources;
  for (const auto& [source, target] : pool_pairs(in.qubits())) {
    apply_unitary(state, unit, {source, target});
    sources.push_back(source);
  }
  return partial_trace(state, sources);
}

DensityMatrix pool_layer(const PureState& in, double theta1, double theta2) {
  PureState state = in;
  GateMatrix unit = pooling_unit(theta1, theta2);
  std::vector<int> sources;
  for (const auto& [source, target] : pool_pairs(in.qubits())) {
    apply_unitary(state, unit, {source, target});
    sources.push_back(source);
  }
  return partial_trace(state, sources);
}

}  // namespace qcmm
