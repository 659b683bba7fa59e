#include "albench/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "albench/errors.hpp"
#include "albench/kmeans.hpp"

namespace albench {

namespace {
constexpr std::size_t kNotInPool = static_cast<std::size_t>(-1);

void require_unlabeled(const AcquisitionContext& ctx) {
  if (ctx.unlabeled.empty()) throw std::invalid_argument("acquisition: unlabeled pool is empty");
}

std::size_t pick_cap(std::size_t requested, std::size_t fallback) { return requested == 0 ? fallback : requested; }
}  // namespace

PoolFeatures::PoolFeatures(const SplitDataset& ds) {
  auto pool = ds.pool_idx();
  rows_ = ds.features.select_rows(pool);
  position_.assign(ds.features.rows(), kNotInPool);
  for (std::size_t r = 0; r < pool.size(); ++r) position_[pool[r]] = r;
}

std::span<const double> PoolFeatures::row(std::size_t dataset_index) const {
  if (dataset_index >= position_.size() || position_[dataset_index] == kNotInPool)
    throw std::out_of_range("PoolFeatures: index " + std::to_string(dataset_index) + " is not in the pool");
  return rows_.row(position_[dataset_index]);
}

Matrix PoolFeatures::gather(std::span<const std::size_t> dataset_indices) const {
  Matrix out(dataset_indices.size(), dim());
  for (std::size_t i = 0; i < dataset_indices.size(); ++i) {
    auto src = row(dataset_indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> candidate_subsample(std::span<const std::size_t> unlabeled, std::size_t cap, Stream& rng) {
  std::vector<std::size_t> out;
  if (unlabeled.size() <= cap) {
    out.assign(unlabeled.begin(), unlabeled.end());
  } else {
    for (std::size_t p : rng.sample_without_replacement(unlabeled.size(), cap)) out.push_back(unlabeled[p]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t argmin_first(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmin_first: empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  return best;
}

std::size_t argmax_first(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax_first: empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::vector<double> margin_scores(const Matrix& probs) {
  std::vector<double> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double top1 = -INFINITY;
    double top2 = -INFINITY;
    for (double p : probs.row(r)) {
      if (p > top1) {
        top2 = top1;
        top1 = p;
      } else if (p > top2) {
        top2 = p;
      }
    }
    out[r] = probs.cols() == 1 ? top1 : top1 - top2;
  }
  return out;
}

namespace {
double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}
}  // namespace

std::vector<double> entropy_scores(const Matrix& probs) {
  std::vector<double> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) out[r] = entropy(probs.row(r));
  return out;
}

std::vector<double> bald_scores(std::span<const Matrix> passes) {
  if (passes.empty()) throw std::invalid_argument("bald_scores: no passes");
  const std::size_t n = passes[0].rows();
  const std::size_t c = passes[0].cols();
  const auto t = static_cast<double>(passes.size());
  std::vector<double> out(n, 0.0);
  std::vector<double> mean(c);
  for (std::size_t r = 0; r < n; ++r) {
    bool identical = true;
    for (std::size_t k = 1; k < passes.size() && identical; ++k) {
      auto a = passes[0].row(r);
      auto b = passes[k].row(r);
      identical = std::equal(a.begin(), a.end(), b.begin());
    }
    if (identical) continue;
    std::fill(mean.begin(), mean.end(), 0.0);
    double mean_entropy = 0.0;
    for (const Matrix& pass : passes) {
      auto row = pass.row(r);
      for (std::size_t j = 0; j < c; ++j) mean[j] += row[j] / t;
      mean_entropy += entropy(row) / t;
    }
    out[r] = std::max(0.0, entropy(mean) - mean_entropy);
  }
  return out;
}

std::vector<double> gradient_embedding(const Classifier& model, std::span<const double> x) {
  Matrix in(1, x.size(), std::vector<double>(x.begin(), x.end()));
  Matrix p = forward(model, in);
  Matrix h = penultimate(model, in);
  auto prow = p.row(0);
  auto top = static_cast<std::size_t>(std::max_element(prow.begin(), prow.end()) - prow.begin());
  std::vector<double> emb;
  emb.reserve(p.cols() * h.cols());
  for (std::size_t c = 0; c < p.cols(); ++c) {
    double residual = prow[c] - (c == top ? 1.0 : 0.0);
    for (double v : h.row(0)) emb.push_back(residual * v);
  }
  return emb;
}

std::vector<double> typicality(const Matrix& cluster, std::size_t knn) {
  const std::size_t n = cluster.rows();
  const std::size_t k = std::min(knn, n == 0 ? 0 : n - 1);
  std::vector<double> out(n, INFINITY);
  if (k == 0) return out;
  std::vector<double> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist.push_back(std::sqrt(squared_distance(cluster.row(i), cluster.row(j))));
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    double sum = 0.0;
    for (std::size_t m = 0; m < k; ++m) sum += dist[m];
    double mean = sum / static_cast<double>(k);
    out[i] = mean > 0.0 ? 1.0 / mean : INFINITY;
  }
  return out;
}

std::size_t typiclust_cluster_count(std::size_t n_labeled, std::size_t max_clusters, std::size_t n_points) {
  return std::min({n_labeled + 1, max_clusters, n_points});
}

// ---------------------------------------------------------------------------

Selection acquire_random(const AcquisitionContext& ctx, Stream& rng) {
  require_unlabeled(ctx);
  return Selection{ctx.unlabeled[rng.below(ctx.unlabeled.size())], 0.0};
}

Selection acquire_margin(const AcquisitionContext& ctx, Stream& rng, std::size_t subsample) {
  require_unlabeled(ctx);
  auto cand = candidate_subsample(ctx.unlabeled, subsample, rng);
  auto scores = margin_scores(forward(ctx.model, ctx.features.gather(cand)));
  std::size_t best = argmin_first(scores);
  return Selection{cand[best], scores[best]};
}

Selection acquire_entropy(const AcquisitionContext& ctx, Stream& rng, std::size_t subsample) {
  require_unlabeled(ctx);
  auto cand = candidate_subsample(ctx.unlabeled, subsample, rng);
  auto scores = entropy_scores(forward(ctx.model, ctx.features.gather(cand)));
  std::size_t best = argmax_first(scores);
  return Selection{cand[best], scores[best]};
}

Selection acquire_bald(const AcquisitionContext& ctx, Stream& rng, std::size_t trials, std::size_t subsample) {
  require_unlabeled(ctx);
  if (trials == 0) throw ConfigError("bald: dropout trials must be >= 1");
  auto cand = candidate_subsample(ctx.unlabeled, subsample, rng);
  Matrix x = ctx.features.gather(cand);
  Stream masks = rng.split("bald_masks");
  std::vector<Matrix> passes;
  passes.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) passes.push_back(forward(ctx.model, x, ForwardMode::StochasticEval, &masks));
  auto scores = bald_scores(passes);
  std::size_t best = argmax_first(scores);
  return Selection{cand[best], scores[best]};
}

Selection acquire_badge(const AcquisitionContext& ctx, Stream& rng, std::size_t subsample) {
  require_unlabeled(ctx);
  auto cand = candidate_subsample(ctx.unlabeled, subsample, rng);
  Matrix x = ctx.features.gather(cand);
  Matrix p = forward(ctx.model, x);
  Matrix h = penultimate(ctx.model, x);
  // |(p - e) (x) h| = |p - e| * |h|.
  std::vector<double> scores(cand.size());
  for (std::size_t r = 0; r < cand.size(); ++r) {
    auto prow = p.row(r);
    auto top = static_cast<std::size_t>(std::max_element(prow.begin(), prow.end()) - prow.begin());
    double res2 = 0.0;
    for (std::size_t c = 0; c < p.cols(); ++c) {
      double d = prow[c] - (c == top ? 1.0 : 0.0);
      res2 += d * d;
    }
    double h2 = 0.0;
    for (double v : h.row(r)) h2 += v * v;
    scores[r] = std::sqrt(res2 * h2);
  }
  std::size_t best = argmax_first(scores);
  return Selection{cand[best], scores[best]};
}

Selection acquire_coreset(const AcquisitionContext& ctx, Stream& rng, std::size_t subsample) {
  require_unlabeled(ctx);
  if (ctx.labeled.empty()) throw std::invalid_argument("coreset: labeled set is empty");
  auto cand = candidate_subsample(ctx.unlabeled, subsample, rng);
  Matrix lab = penultimate(ctx.model, ctx.features.gather(ctx.labeled));
  Matrix un = penultimate(ctx.model, ctx.features.gather(cand));
  std::vector<double> scores(cand.size(), INFINITY);
  for (std::size_t r = 0; r < cand.size(); ++r) {
    for (std::size_t l = 0; l < lab.rows(); ++l) scores[r] = std::min(scores[r], squared_distance(un.row(r), lab.row(l)));
    scores[r] = std::sqrt(scores[r]);
  }
  std::size_t best = argmax_first(scores);
  return Selection{cand[best], scores[best]};
}

Selection acquire_typiclust(const AcquisitionContext& ctx, Stream& rng, const TypiclustParams& params) {
  require_unlabeled(ctx);
  auto cand = candidate_subsample(ctx.unlabeled, params.subsample, rng);
  const std::size_t n_lab = ctx.labeled.size();
  std::vector<std::size_t> all(ctx.labeled.begin(), ctx.labeled.end());
  all.insert(all.end(), cand.begin(), cand.end());
  Matrix emb = penultimate(ctx.model, ctx.features.gather(all));

  const std::size_t k = typiclust_cluster_count(n_lab, params.max_clusters, emb.rows());
  KMeansResult km = kmeans(emb, k, rng, params.kmeans_restarts);

  std::vector<std::size_t> size(k, 0);
  std::vector<std::size_t> labeled_count(k, 0);
  for (std::size_t i = 0; i < all.size(); ++i) {
    ++size[km.assignment[i]];
    if (i < n_lab) ++labeled_count[km.assignment[i]];
  }

  // Largest cluster among the first non-empty tier:
  // uncovered and big enough, then any uncovered, then any with an unlabeled member.
  auto largest = [&](auto&& eligible) {
    std::size_t best = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (eligible(c) && (best == k || size[c] > size[best])) best = c;
    }
    return best;
  };
  std::size_t chosen = largest([&](std::size_t c) { return labeled_count[c] == 0 && size[c] >= params.min_cluster_size; });
  if (chosen == k) chosen = largest([&](std::size_t c) { return labeled_count[c] == 0 && size[c] > 0; });
  if (chosen == k) chosen = largest([&](std::size_t c) { return size[c] > labeled_count[c]; });

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (km.assignment[i] == chosen) members.push_back(i);
  }
  Matrix cluster = emb.select_rows(members);
  auto typ = typicality(cluster, params.knn);

  std::size_t best_member = members.size();
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (members[m] < n_lab) continue;
    if (best_member == members.size() || typ[m] > typ[best_member]) best_member = m;
  }
  return Selection{all[members[best_member]], typ[best_member]};
}

// ---------------------------------------------------------------------------

namespace {

class RandomStrategy final : public AcquisitionFunction {
 public:
  std::string_view name() const override { return "random"; }
  Selection select(const AcquisitionContext& ctx, Stream& rng) override { return acquire_random(ctx, rng); }
};

class MarginStrategy final : public AcquisitionFunction {
 public:
  explicit MarginStrategy(std::size_t cap) : cap_(cap) {}
  std::string_view name() const override { return "margin"; }
  Selection select(const AcquisitionContext& ctx, Stream& rng) override { return acquire_margin(ctx, rng, cap_); }

 private:
  std::size_t cap_;
};

class EntropyStrategy final : public AcquisitionFunction {
 public:
  explicit EntropyStrategy(std::size_t cap) : cap_(cap) {}
  std::string_view name() const override { return "entropy"; }
  Selection select(const AcquisitionContext& ctx, Stream& rng) override { return acquire_entropy(ctx, rng, cap_); }

 private:
  std::size_t cap_;
};

class BaldStrategy final : public AcquisitionFunction {
 public:
  BaldStrategy(std::size_t trials, std::size_t cap) : trials_(trials), cap_(cap) {}
  std::string_view name() const override { return "bald"; }
  Selection select(const AcquisitionContext& ctx, Stream& rng) override {
    return acquire_bald(ctx, rng, trials_, cap_);
  }

 private:
  std::size_t trials_;
  std::size_t cap_;
};

class BadgeStrategy final : public AcquisitionFunction {
 public:
  explicit BadgeStrategy(std::size_t cap) : cap_(cap) {}
  std::string_view name() const override { return "badge"; }
  Selection select(const AcquisitionContext& ctx, Stream& rng) override { return acquire_badge(ctx, rng, cap_); }

 private:
  std::size_t cap_;
};

class CoresetStrategy final : public AcquisitionFunction {
 public:
  explicit CoresetStrategy(std::size_t cap) : cap_(cap) {}
  std::string_view name() const override { return "coreset"; }
  Selection select(const AcquisitionContext& ctx, Stream& rng) override { return acquire_coreset(ctx, rng, cap_); }

 private:
  std::size_t cap_;
};

class TypiclustStrategy final : public AcquisitionFunction {
 public:
  explicit TypiclustStrategy(TypiclustParams p) : params_(p) {}
  std::string_view name() const override { return "typiclust"; }
  Selection select(const AcquisitionContext& ctx, Stream& rng) override {
    return acquire_typiclust(ctx, rng, params_);
  }

 private:
  TypiclustParams params_;
};

}  // namespace

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = {"random", "margin",  "entropy",   "bald",
                                                 "badge",  "coreset", "typiclust", "oracle"};
  return names;
}

std::size_t default_subsample(std::string_view name) {
  if (name == "margin") return kMarginSubsample;
  if (name == "entropy") return kEntropySubsample;
  if (name == "bald") return kBaldSubsample;
  if (name == "badge") return kBadgeSubsample;
  if (name == "coreset") return kCoresetSubsample;
  if (name == "typiclust") return kTypiclustSubsample;
  return 0;
}

bool is_known_strategy(std::string_view name) {
  const auto& names = strategy_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::unique_ptr<AcquisitionFunction> make_strategy(std::string_view name, const StrategyParams& p) {
  if (name == "random") return std::make_unique<RandomStrategy>();
  if (name == "margin") return std::make_unique<MarginStrategy>(pick_cap(p.subsample, kMarginSubsample));
  if (name == "entropy") return std::make_unique<EntropyStrategy>(pick_cap(p.subsample, kEntropySubsample));
  if (name == "bald") return std::make_unique<BaldStrategy>(p.dropout_trials, pick_cap(p.subsample, kBaldSubsample));
  if (name == "badge") return std::make_unique<BadgeStrategy>(pick_cap(p.subsample, kBadgeSubsample));
  if (name == "coreset") return std::make_unique<CoresetStrategy>(pick_cap(p.subsample, kCoresetSubsample));
  if (name == "typiclust") {
    return std::make_unique<TypiclustStrategy>(TypiclustParams{pick_cap(p.subsample, kTypiclustSubsample),
                                                               p.min_cluster_size, p.max_clusters, p.knn,
                                                               p.kmeans_restarts});
  }
  throw ConfigError("unknown acquisition function '" + std::string(name) + "'");
}

}  // namespace albench
