#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "albench/data.hpp"
#include "albench/matrix.hpp"
#include "albench/model.hpp"
#include "albench/rng.hpp"

namespace albench {

/// Features of the active learning pool only, addressed by dataset index.
/// Rows of the validation and test splits are never copied in, so an
/// acquisition function cannot reach them.
class PoolFeatures {
 public:
  explicit PoolFeatures(const SplitDataset& ds);

  std::size_t dim() const { return rows_.cols(); }
  std::span<const double> row(std::size_t dataset_index) const;
  Matrix gather(std::span<const std::size_t> dataset_indices) const;

 private:
  Matrix rows_;
  std::vector<std::size_t> position_;  // dataset index -> row, npos if not in pool
};

/// Everything an acquisition function may read at iteration i.
struct AcquisitionContext {
  const PoolFeatures& features;
  std::span<const std::size_t> labeled;
  std::span<const int> labeled_labels;  // revealed labels, aligned with `labeled`
  std::span<const std::size_t> unlabeled;
  std::size_t budget = 0;
  std::size_t acquired = 0;  // |L(i)| - |L(1)|
  double accuracy_current = 0.0;
  double accuracy_initial = 0.0;
  const Classifier& model;
  const OptimizerState& optimizer;
};

/// One acquisition decision. `fallback` and `probe_accuracy` are only used by
/// the oracle.
struct Selection {
  std::size_t index = 0;
  double score = 0.0;
  bool fallback = false;
  double probe_accuracy = std::numeric_limits<double>::quiet_NaN();
};

class AcquisitionFunction {
 public:
  virtual ~AcquisitionFunction() = default;
  virtual std::string_view name() const = 0;
  /// Returns exactly one member of ctx.unlabeled. `rng` is the algorithm stream.
  virtual Selection select(const AcquisitionContext& ctx, Stream& rng) = 0;
};

struct StrategyParams {
  std::size_t subsample = 0;  // 0 picks the per-strategy default
  std::size_t dropout_trials = 5;
  std::size_t min_cluster_size = 5;
  std::size_t max_clusters = 500;
  std::size_t knn = 20;
  std::size_t kmeans_restarts = 10;
  std::size_t oracle_tau = 20;
};

inline constexpr std::size_t kMarginSubsample = 8000;
inline constexpr std::size_t kEntropySubsample = 8000;
inline constexpr std::size_t kBaldSubsample = 100;
inline constexpr std::size_t kBadgeSubsample = 100;
inline constexpr std::size_t kCoresetSubsample = 8000;
inline constexpr std::size_t kTypiclustSubsample = 10000;

/// Candidate cap used when StrategyParams::subsample is 0 (0 for strategies
/// that do not subsample).
std::size_t default_subsample(std::string_view name);

/// Names accepted by make_strategy (the oracle is built separately).
const std::vector<std::string>& strategy_names();
bool is_known_strategy(std::string_view name);

/// random, margin, entropy, bald, badge, coreset, typiclust.
std::unique_ptr<AcquisitionFunction> make_strategy(std::string_view name, const StrategyParams& params);

// ---------------------------------------------------------------------------
// Building blocks, exposed for testing.

/// The whole unlabeled set if it fits under `cap`, otherwise `cap` distinct
/// members drawn from `rng`. Always returned in ascending order.
std::vector<std::size_t> candidate_subsample(std::span<const std::size_t> unlabeled, std::size_t cap, Stream& rng);

/// p_top1 - p_top2 per row.
std::vector<double> margin_scores(const Matrix& probs);
/// Shannon entropy (nats) per row, with 0 log 0 = 0.
std::vector<double> entropy_scores(const Matrix& probs);
/// Mutual information between prediction and parameters from stochastic
/// passes: H(mean prediction) - mean H(prediction). Rows whose passes are
/// identical score exactly 0.
std::vector<double> bald_scores(std::span<const Matrix> passes);
/// Gradient of the cross-entropy at the predicted label w.r.t. the output
/// layer weights: (p - onehot(argmax p)) (x) penultimate(x), class-major.
std::vector<double> gradient_embedding(const Classifier& model, std::span<const double> x);

/// Position of the smallest / largest score; the first one wins ties.
std::size_t argmin_first(std::span<const double> scores);
std::size_t argmax_first(std::span<const double> scores);

/// Typicality of every row of `cluster`: 1 / mean distance to its `knn`
/// nearest other rows (knn is capped at size - 1). A singleton scores +inf.
std::vector<double> typicality(const Matrix& cluster, std::size_t knn);

/// min(|L| + 1, max_clusters), capped by the number of embedded points.
std::size_t typiclust_cluster_count(std::size_t n_labeled, std::size_t max_clusters, std::size_t n_points);

Selection acquire_random(const AcquisitionContext& ctx, Stream& rng);
Selection acquire_margin(const AcquisitionContext& ctx, Stream& rng, std::size_t subsample = kMarginSubsample);
Selection acquire_entropy(const AcquisitionContext& ctx, Stream& rng, std::size_t subsample = kEntropySubsample);
Selection acquire_bald(const AcquisitionContext& ctx, Stream& rng, std::size_t trials = 5,
                       std::size_t subsample = kBaldSubsample);
Selection acquire_badge(const AcquisitionContext& ctx, Stream& rng, std::size_t subsample = kBadgeSubsample);
Selection acquire_coreset(const AcquisitionContext& ctx, Stream& rng, std::size_t subsample = kCoresetSubsample);

struct TypiclustParams {
  std::size_t subsample = kTypiclustSubsample;
  std::size_t min_cluster_size = 5;
  std::size_t max_clusters = 500;
  std::size_t knn = 20;
  std::size_t kmeans_restarts = 10;
};
Selection acquire_typiclust(const AcquisitionContext& ctx, Stream& rng, const TypiclustParams& params = {});

}  // namespace albench
