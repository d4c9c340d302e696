#include "qcmm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcmm/classical.hpp"
#include "qcmm/rng.hpp"

namespace qcmm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<char> read_blob(const fs::path& path, size_t expected_bytes) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("manifest: cannot open " + path.string());
  auto bytes = static_cast<size_t>(in.tellg());
  if (bytes != expected_bytes)
    throw std::runtime_error("manifest: " + path.string() + " holds " +
                             std::to_string(bytes) + " bytes, expected " +
                             std::to_string(expected_bytes));
  std::vector<char> raw(bytes);
  in.seekg(0);
  in.read(raw.data(), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("manifest: failed reading " + path.string());
  return raw;
}

std::vector<float> read_f32(const fs::path& path, size_t count) {
  std::vector<char> raw = read_blob(path, count * sizeof(float));
  std::vector<float> v(count);
  std::memcpy(v.data(), raw.data(), raw.size());
  return v;
}

std::vector<int32_t> read_i32(const fs::path& path, size_t count) {
  std::vector<char> raw = read_blob(path, count * sizeof(int32_t));
  std::vector<int32_t> v(count);
  std::memcpy(v.data(), raw.data(), raw.size());
  return v;
}

struct RawModality {
  std::vector<float> data;
  long rows = 0;
  long dim = 0;
};

RawModality read_modality(const json& j, const char* key, const fs::path& base) {
  const json& m = j.at(key);
  auto shape = m.at("shape").get<std::vector<long>>();
  if (shape.size() < 2)
    throw std::runtime_error(std::string("manifest: ") + key +
                             " shape must be [rows, features...]");
  RawModality out;
  out.rows = shape[0];
  out.dim = 1;
  for (size_t i = 1; i < shape.size(); ++i) out.dim *= shape[i];
  if (out.rows < 1 || out.dim < 1)
    throw std::runtime_error(std::string("manifest: ") + key +
                             " shape entries must be positive");
  out.data = read_f32(base / m.at("path").get<std::string>(),
                      static_cast<size_t>(out.rows * out.dim));
  return out;
}

RVec row_of(const RawModality& m, long i) {
  RVec v(m.dim);
  for (long j = 0; j < m.dim; ++j) v[j] = m.data[static_cast<size_t>(i * m.dim + j)];
  return v;
}

// Sorted per-class lists of sample positions, in order of appearance.
std::vector<std::vector<int>> class_rosters(const DatasetBundle& b) {
  std::vector<std::vector<int>> rosters(b.spec.n_classes);
  for (size_t i = 0; i < b.samples.size(); ++i)
    rosters[b.samples[i].label].push_back(static_cast<int>(i));
  return rosters;
}

void finish_split(DatasetBundle& b, std::vector<int> train) {
  std::vector<char> in_train(b.samples.size(), 0);
  for (int i : train) in_train[i] = 1;
  b.train_idx = std::move(train);
  std::sort(b.train_idx.begin(), b.train_idx.end());
  b.test_idx.clear();
  for (size_t i = 0; i < b.samples.size(); ++i)
    if (!in_train[i]) b.test_idx.push_back(static_cast<int>(i));
}

void apply_pca(DatasetBundle& b, int components) {
  auto project = [&](bool high) {
    const long n_train = static_cast<long>(b.train_idx.size());
    const long dim = high ? b.spec.d_h : b.spec.d_l;
    RMat train(n_train, dim);
    for (long r = 0; r < n_train; ++r) {
      const Sample& s = b.samples[b.train_idx[r]];
      train.row(r) = (high ? s.x_h : s.x_l).transpose();
    }
    PcaModel model = pca_fit(train, components);
    for (Sample& s : b.samples) {
      RVec& x = high ? s.x_h : s.x_l;
      x = pca_transform(model, x);
    }
  };
  project(true);
  project(false);
  b.spec.d_h = components;
  b.spec.d_l = components;
}

DatasetBundle load_parsed(const json& j, const fs::path& base) {
  RawModality h = read_modality(j, "h", base);
  RawModality l = read_modality(j, "l", base);
  const json& lbl = j.at("labels");
  long n = lbl.at("count").get<long>();
  if (n < 1) throw std::runtime_error("manifest: labels count must be positive");
  std::vector<int32_t> labels =
      read_i32(base / lbl.at("path").get<std::string>(), static_cast<size_t>(n));
  if (h.rows != n || l.rows != n)
    throw std::runtime_error("manifest: row counts disagree (h " +
                             std::to_string(h.rows) + ", l " +
                             std::to_string(l.rows) + ", labels " +
                             std::to_string(n) + ")");

  DatasetBundle b;
  if (j.contains("select_classes")) {
    auto select = j.at("select_classes").get<std::vector<int>>();
    if (select.size() < 2)
      throw std::runtime_error("manifest: select_classes needs two or more labels");
    std::vector<int> hits(select.size(), 0);
    for (long i = 0; i < n; ++i) {
      auto it = std::find(select.begin(), select.end(), labels[i]);
      if (it == select.end()) continue;
      Sample s;
      s.x_h = row_of(h, i);
      s.x_l = row_of(l, i);
      s.label = static_cast<int>(it - select.begin());
      ++hits[s.label];
      b.samples.push_back(std::move(s));
    }
    for (size_t c = 0; c < select.size(); ++c)
      if (hits[c] == 0)
        throw std::runtime_error("manifest: select_classes lists label " +
                                 std::to_string(select[c]) +
                                 " but no row carries it");
    b.spec.n_classes = static_cast<int>(select.size());
  } else {
    int max_label = 0;
    for (long i = 0; i < n; ++i) {
      if (labels[i] < 0)
        throw std::runtime_error("manifest: negative label at row " +
                                 std::to_string(i));
      max_label = std::max(max_label, static_cast<int>(labels[i]));
      Sample s;
      s.x_h = row_of(h, i);
      s.x_l = row_of(l, i);
      s.label = labels[i];
      b.samples.push_back(std::move(s));
    }
    if (max_label < 1)
      throw std::runtime_error("manifest: labels span fewer than two classes");
    b.spec.n_classes = max_label + 1;
  }
  b.spec.d_h = static_cast<int>(h.dim);
  b.spec.d_l = static_cast<int>(l.dim);

  int directives = (j.contains("train_indices") ? 1 : 0) +
                   (j.contains("train_counts") ? 1 : 0) +
                   (j.contains("train_fraction") ? 1 : 0);
  if (directives > 1)
    throw std::runtime_error(
        "manifest: give at most one of train_indices, train_counts, "
        "train_fraction");
  const int n_kept = static_cast<int>(b.samples.size());
  if (j.contains("train_indices")) {
    auto train = j.at("train_indices").get<std::vector<int>>();
    std::vector<char> seen(n_kept, 0);
    for (int i : train) {
      if (i < 0 || i >= n_kept || seen[i])
        throw std::runtime_error("manifest: train_indices entry " +
                                 std::to_string(i) + " is out of range or repeated");
      seen[i] = 1;
    }
    if (train.empty() || static_cast<int>(train.size()) == n_kept)
      throw std::runtime_error("manifest: train_indices must leave a test split");
    finish_split(b, std::move(train));
  } else if (j.contains("train_counts")) {
    auto counts = j.at("train_counts").get<std::vector<int>>();
    if (static_cast<int>(counts.size()) != b.spec.n_classes)
      throw std::runtime_error("manifest: train_counts needs one entry per class");
    std::vector<std::vector<int>> rosters = class_rosters(b);
    std::vector<int> train;
    for (int c = 0; c < b.spec.n_classes; ++c) {
      int size = static_cast<int>(rosters[c].size());
      if (counts[c] < 1 || counts[c] >= size)
        throw std::runtime_error("manifest: train_counts[" + std::to_string(c) +
                                 "] must lie in [1, " + std::to_string(size - 1) +
                                 "]");
      train.insert(train.end(), rosters[c].begin(),
                   rosters[c].begin() + counts[c]);
    }
    finish_split(b, std::move(train));
  } else {
    double fraction =
        j.contains("train_fraction") ? j.at("train_fraction").get<double>() : 0.8;
    uint64_t seed = j.value("seed", uint64_t{0});
    b = split_dataset(std::move(b), fraction, seed);
  }

  int pca_components = j.value("pca_components", 0);
  if (pca_components < 0)
    throw std::runtime_error("manifest: pca_components must be nonnegative");
  if (pca_components > 0) apply_pca(b, pca_components);
  b.validate();
  return b;
}

}  // namespace

std::vector<Sample> DatasetBundle::train_set() const {
  std::vector<Sample> out;
  out.reserve(train_idx.size());
  for (int i : train_idx) out.push_back(samples[i]);
  return out;
}

std::vector<Sample> DatasetBundle::test_set() const {
  std::vector<Sample> out;
  out.reserve(test_idx.size());
  for (int i : test_idx) out.push_back(samples[i]);
  return out;
}

void DatasetBundle::validate() const {
  if (spec.d_h < 1 || spec.d_l < 1 || spec.n_classes < 2)
    throw std::invalid_argument("dataset: spec dimensions are degenerate");
  if (samples.empty()) throw std::invalid_argument("dataset: no samples");
  for (const Sample& s : samples) {
    if (s.x_h.size() != spec.d_h || s.x_l.size() != spec.d_l)
      throw std::invalid_argument("dataset: sample feature size mismatch");
    if (s.label < 0 || s.label >= spec.n_classes)
      throw std::invalid_argument("dataset: label out of range");
  }
  if (!has_split()) return;
  if (train_idx.size() + test_idx.size() != samples.size())
    throw std::invalid_argument("dataset: split does not cover the samples");
  std::vector<char> seen(samples.size(), 0);
  for (const std::vector<int>* part : {&train_idx, &test_idx})
    for (int i : *part) {
      if (i < 0 || i >= static_cast<int>(samples.size()) || seen[i])
        throw std::invalid_argument("dataset: split index out of range or repeated");
      seen[i] = 1;
    }
}

DatasetBundle synth_generate(const SynthSpec& spec, uint64_t seed) {
  if (spec.n_per_class < 4)
    throw std::invalid_argument("synthetic dataset needs >= 4 samples per class");
  if (spec.d < 2)
    throw std::invalid_argument("synthetic dataset needs >= 2 features");
  if (spec.separation < 0)
    throw std::invalid_argument("synthetic separation must be nonnegative");
  const int d = spec.d;
  const double unit = 1.0 / std::sqrt(static_cast<double>(d));
  RVec axis_a(d), axis_b(d);
  for (int j = 0; j < d; ++j) {
    axis_a[j] = unit;
    axis_b[j] = (j % 2 == 0 ? unit : -unit);
  }
  SplitMix64 rng(seed);
  DatasetBundle b;
  b.spec = {d, d, 4};
  b.samples.reserve(static_cast<size_t>(4 * spec.n_per_class));
  for (int c = 0; c < 4; ++c) {
    const double bit_h = (((c >> 1) & 1) - 0.5) * spec.separation;
    const double bit_l = ((c & 1) - 0.5) * spec.separation;
    RVec mu_h = spec.complementarity ? RVec(bit_h * axis_a)
                                     : RVec(bit_h * axis_a + bit_l * axis_b);
    RVec mu_l = spec.complementarity ? RVec(bit_l * axis_a)
                                     : RVec(bit_h * axis_a + bit_l * axis_b);
    for (int i = 0; i < spec.n_per_class; ++i) {
      Sample s;
      s.label = c;
      s.x_h = mu_h;
      s.x_l = mu_l;
      for (int j = 0; j < d; ++j) s.x_h[j] += rng.gauss();
      for (int j = 0; j < d; ++j) s.x_l[j] += rng.gauss();
      b.samples.push_back(std::move(s));
    }
  }
  return b;
}

DatasetBundle split_dataset(DatasetBundle bundle, double train_fraction,
                            uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train fraction must lie strictly in (0, 1)");
  std::vector<std::vector<int>> rosters = class_rosters(bundle);
  std::vector<int> train;
  for (int c = 0; c < bundle.spec.n_classes; ++c) {
    const int size = static_cast<int>(rosters[c].size());
    if (size < 2)
      throw std::runtime_error("split: class " + std::to_string(c) + " has " +
                               std::to_string(size) +
                               " samples; need two or more");
    SplitMix64 rng(derive_stream(seed, static_cast<uint64_t>(c)));
    rng.shuffle(rosters[c]);
    int n_train = static_cast<int>(std::llround(train_fraction * size));
    n_train = std::clamp(n_train, 1, size - 1);
    train.insert(train.end(), rosters[c].begin(), rosters[c].begin() + n_train);
  }
  finish_split(bundle, std::move(train));
  return bundle;
}

double linear_probe_accuracy(const DatasetBundle& bundle,
                             const std::vector<int>& classes, bool use_h,
                             bool use_l) {
  bundle.validate();
  if (!bundle.has_split())
    throw std::invalid_argument("probe needs a train/test split");
  if (!use_h && !use_l)
    throw std::invalid_argument("probe needs at least one modality");
  auto keep = [&](int label) {
    return classes.empty() ||
           std::find(classes.begin(), classes.end(), label) != classes.end();
  };
  auto features = [&](const Sample& s) {
    if (use_h && use_l) {
      RVec v(s.x_h.size() + s.x_l.size());
      v << s.x_h, s.x_l;
      return v;
    }
    return use_h ? s.x_h : s.x_l;
  };
  const int n_classes = bundle.spec.n_classes;
  std::vector<RVec> sums(n_classes);
  std::vector<int> counts(n_classes, 0);
  for (int i : bundle.train_idx) {
    const Sample& s = bundle.samples[i];
    if (!keep(s.label)) continue;
    RVec v = features(s);
    if (counts[s.label] == 0)
      sums[s.label] = v;
    else
      sums[s.label] += v;
    ++counts[s.label];
  }
  int present = 0;
  for (int c = 0; c < n_classes; ++c) present += counts[c] > 0;
  if (present < 2)
    throw std::invalid_argument("probe needs two classes in the train split");
  int correct = 0;
  int total = 0;
  for (int i : bundle.test_idx) {
    const Sample& s = bundle.samples[i];
    if (!keep(s.label)) continue;
    RVec v = features(s);
    int best = -1;
    double best_dist = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      if (counts[c] == 0) continue;
      double dist = (v - sums[c] / counts[c]).squaredNorm();
      if (best < 0 || dist < best_dist) {
        best = c;
        best_dist = dist;
      }
    }
    correct += best == s.label;
    ++total;
  }
  if (total == 0)
    throw std::invalid_argument("probe found no test samples in the class set");
  return static_cast<double>(correct) / total;
}

DatasetBundle scale_to_angle_range(const DatasetBundle& bundle) {
  bundle.validate();
  if (!bundle.has_split())
    throw std::invalid_argument("angle scaling needs a train/test split");
  DatasetBundle out = bundle;
  auto rescale = [&](bool high) {
    const int dim = high ? bundle.spec.d_h : bundle.spec.d_l;
    RVec lo = RVec::Constant(dim, std::numeric_limits<double>::infinity());
    RVec hi = RVec::Constant(dim, -std::numeric_limits<double>::infinity());
    for (int i : bundle.train_idx) {
      const RVec& x = high ? bundle.samples[i].x_h : bundle.samples[i].x_l;
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
    for (Sample& s : out.samples) {
      RVec& x = high ? s.x_h : s.x_l;
      for (int j = 0; j < dim; ++j) {
        const double range = hi[j] - lo[j];
        x[j] = range > 0.0
                   ? std::clamp((x[j] - lo[j]) / range, 0.0, 1.0) * kPi
                   : kPi / 2;
      }
    }
  };
  rescale(true);
  rescale(false);
  return out;
}

DatasetBundle load_dataset(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in)
    throw std::runtime_error("manifest: cannot open " + manifest_path);
  json j;
  try {
    in >> j;
    return load_parsed(j, fs::path(manifest_path).parent_path());
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest: " + manifest_path + ": " + e.what());
  }
}

void save_manifest(const DatasetBundle& bundle, const std::string& dir,
                   const std::string& name) {
  bundle.validate();
  fs::path base(dir);
  fs::create_directories(base);
  const long n = static_cast<long>(bundle.samples.size());
  auto write_features = [&](const std::string& file, bool high) {
    std::ofstream out(base / file, std::ios::binary);
    if (!out) throw std::runtime_error("manifest: cannot write " + file);
    for (const Sample& s : bundle.samples) {
      const RVec& x = high ? s.x_h : s.x_l;
      for (long jf = 0; jf < x.size(); ++jf) {
        float f = static_cast<float>(x[jf]);
        out.write(reinterpret_cast<const char*>(&f), sizeof(f));
      }
    }
  };
  write_features(name + "_h.f32", true);
  write_features(name + "_l.f32", false);
  {
    std::ofstream out(base / (name + "_labels.i32"), std::ios::binary);
    for (const Sample& s : bundle.samples) {
      int32_t v = s.label;
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  json j;
  j["h"] = {{"path", name + "_h.f32"}, {"shape", {n, bundle.spec.d_h}}};
  j["l"] = {{"path", name + "_l.f32"}, {"shape", {n, bundle.spec.d_l}}};
  j["labels"] = {{"path", name + "_labels.i32"}, {"count", n}};
  j["pca_components"] = 0;
  if (bundle.has_split()) j["train_indices"] = bundle.train_idx;
  std::ofstream out(base / (name + ".json"));
  if (!out)
    throw std::runtime_error("manifest: cannot write " + name + ".json");
  out << j.dump(2) << "\n";
}

}  // namespace qcmm
