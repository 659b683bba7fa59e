#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "albench/matrix.hpp"
#include "albench/rng.hpp"

namespace albench {

/// Features with their labels, detached from any dataset.
struct Examples {
  Matrix x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

/// Feature matrix, integer labels in [0, n_classes) and the index partition.
/// train_idx and test_idx are fixed per dataset; val_idx is drawn per run.
struct SplitDataset {
  std::string name;
  Matrix features;
  std::vector<int> labels;
  int n_classes = 0;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  std::vector<std::size_t> val_idx;

  std::size_t input_dim() const { return features.cols(); }
  /// train_idx minus val_idx, ascending. This is the active learning pool.
  std::vector<std::size_t> pool_idx() const;
  Examples examples(std::span<const std::size_t> indices) const;
  Examples test_set() const { return examples(test_idx); }
  Examples validation_set() const { return examples(val_idx); }
  /// Throws std::logic_error if the partition invariants are violated.
  void check_invariants() const;
};

/// Labeled / unlabeled bookkeeping of one active learning run.
class PoolState {
 public:
  PoolState(std::vector<std::size_t> labeled, std::vector<std::size_t> unlabeled);

  /// Acquisition order: seed set first, then one index per iteration.
  const std::vector<std::size_t>& labeled() const { return labeled_; }
  /// Ascending.
  const std::vector<std::size_t>& unlabeled() const { return unlabeled_; }
  std::size_t seed_size() const { return seed_size_; }
  std::size_t acquired() const { return labeled_.size() - seed_size_; }
  bool is_unlabeled(std::size_t index) const;

  /// Moves one index from the unlabeled to the labeled set.
  void acquire(std::size_t index);

 private:
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
  std::size_t seed_size_;
};

// ---------------------------------------------------------------------------
// Synthetic data

/// Two classes with two isotropic Gaussian clusters each. One cluster per class
/// is clean and sits on its side of the boundary x = 0; the other two share
/// the same center on that boundary, so their labels carry no information.
struct ThreeClustParams {
  std::size_t n_per_cluster = 150;
  double clean_offset = 1.5;     // clean centers at (-offset, 0) and (+offset, 0)
  double poisoned_height = 3.0;  // poisoned center at (0, height)
  double cluster_std = 1.0;
};

/// y = sin(psi * x) + s * (delta * x + noise), noise ~ N(0, sigma), s = +1 for
/// class 1 and -1 for class 0. x is uniform on [x_min, x_max].
struct DivergingSinParams {
  std::size_t n_per_class = 300;
  double psi = 2.0;
  double delta = 0.5;
  double sigma = 0.3;
  double x_min = 0.0;
  double x_max = 10.0;
};

/// Raw draw from a generator, before shuffling and normalization.
struct RawSample {
  Matrix points;
  std::vector<int> labels;
};

RawSample sample_three_clust(Stream& rng, const ThreeClustParams& params);
RawSample sample_diverging_sin(Stream& rng, const DivergingSinParams& params);

/// Noise-free or noisy branch value of the DivergingSin curve.
double diverging_sin_value(double x, int sign, double noise, const DivergingSinParams& params);

/// Train and test sets come from independent children of the data stream;
/// the test set has the same size as the train set. Features are min-max
/// normalized with train statistics.
SplitDataset generate_three_clust(const Stream& data_stream, const ThreeClustParams& params = {});
SplitDataset generate_diverging_sin(const Stream& data_stream, const DivergingSinParams& params = {});

// ---------------------------------------------------------------------------
// Tabular data

enum class TabularFormat { DenseCsv, SparseLibsvm };

struct TabularOptions {
  /// Pre-defined test file in the same format. Takes precedence over the
  /// index file.
  std::optional<std::filesystem::path> test_path;
  /// Newline-separated test row indices. Read if it exists, written otherwise.
  std::optional<std::filesystem::path> test_index_path;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  /// Every class needs at least this many train rows.
  std::size_t min_per_class = 1;
  /// Sparse format only; 0 means "largest index seen".
  std::size_t n_features = 0;
};

SplitDataset load_tabular(const std::filesystem::path& path, TabularFormat format, const TabularOptions& options = {});

/// Per-feature min-max scaling fitted on `fit_rows`. Constant features map to 0.
/// With `clip`, values outside the fitted range are clamped to [0, 1].
void minmax_normalize(Matrix& m, std::span<const std::size_t> fit_rows, bool clip);

std::vector<std::size_t> read_index_file(const std::filesystem::path& path);
void write_index_file(const std::filesystem::path& path, std::span<const std::size_t> indices);

// ---------------------------------------------------------------------------
// Partitioning

/// Draws round(fraction * |train|) validation rows from the train split.
/// `min_pool` is the smallest acceptable remaining pool (budget + seed set).
SplitDataset split_validation(SplitDataset ds, double fraction, const Stream& data_stream, std::size_t min_pool = 0);

/// Draws `per_class` pool points of every class as the initial labeled set.
PoolState seed_labeled_set(const SplitDataset& ds, std::size_t per_class, const Stream& data_stream);

}  // namespace albench
