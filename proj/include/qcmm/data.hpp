#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcmm/model.hpp"
#include "qcmm/types.hpp"

namespace qcmm {

struct DatasetSpec {
  int d_h = 0;
  int d_l = 0;
  int n_classes = 0;
};

// Samples plus an optional train/test split stored as indices into `samples`.
// When a split is present the two index lists are disjoint, sorted, and cover
// every sample.
struct DatasetBundle {
  std::vector<Sample> samples;
  std::vector<int> train_idx;
  std::vector<int> test_idx;
  DatasetSpec spec;

  bool has_split() const { return !train_idx.empty() || !test_idx.empty(); }
  std::vector<Sample> train_set() const;
  std::vector<Sample> test_set() const;
  void validate() const;
};

struct SynthSpec {
  int n_per_class = 200;
  int d = 8;
  double separation = 6.0;
  bool complementarity = true;
};

// Four Gaussian-blob classes indexed by two bits. With complementarity on,
// modality h shifts along the high bit only and modality l along the low bit
// only, so neither modality alone can separate all four classes; with it off
// both modalities carry both bits. Deterministic in the seed.
DatasetBundle synth_generate(const SynthSpec& spec, uint64_t seed);

// Stratified split: each class is shuffled on its own derived stream and cut
// at round(fraction * class_size), clamped so both sides stay nonempty.
DatasetBundle split_dataset(DatasetBundle bundle, double train_fraction,
                            uint64_t seed);

// Nearest-centroid accuracy over the test split, with centroids fit on the
// train split. `classes` restricts the problem to a subset of labels (empty
// means all); the modality flags choose which features the probe sees.
double linear_probe_accuracy(const DatasetBundle& bundle,
                             const std::vector<int>& classes, bool use_h,
                             bool use_l);

// Min-max rescale of every feature into [0, pi]. Statistics come from the
// train split only; held-out values clamp into range, and a constant train
// column maps to pi/2.
DatasetBundle scale_to_angle_range(const DatasetBundle& bundle);

// Dataset manifests are a JSON document naming, per modality, a row-major
// little-endian float32 blob with its shape, plus an int32 label blob.
// Optional keys: select_classes (filter + relabel in list order), exactly one
// of train_indices / train_counts / train_fraction (default fraction 0.8),
// seed (for the fraction split), pca_components (0 keeps raw features;
// otherwise a projection is fit on the train rows only).
DatasetBundle load_dataset(const std::string& manifest_path);

// Writes <name>.json plus <name>_h.f32, <name>_l.f32, <name>_labels.i32 into
// `dir`. An existing split is pinned via explicit train_indices so a reload
// reproduces it exactly.
void save_manifest(const DatasetBundle& bundle, const std::string& dir,
                   const std::string& name);

}  // namespace qcmm
