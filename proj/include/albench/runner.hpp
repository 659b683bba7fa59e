#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "albench/acquisition.hpp"
#include "albench/config.hpp"
#include "albench/data.hpp"
#include "albench/rng.hpp"

namespace albench {

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  std::size_t chosen = 0;     // dataset index moved into the labeled set
  double score = 0.0;
  double accuracy = 0.0;  // test accuracy of the model trained before this acquisition
  bool fallback = false;
  double probe_accuracy = 0.0;
};

/// Test accuracy per iteration of one run plus its provenance.
struct RunCurve {
  std::string dataset;
  std::string domain;
  std::string algorithm;
  std::size_t restart = 0;
  std::uint64_t seed_omega = 0;
  std::uint64_t seed_data = 0;
  std::uint64_t seed_model = 0;
  std::vector<double> accuracies;
  std::vector<IterationRecord> iterations;
  std::size_t final_labeled = 0;
  double wall_seconds = 0.0;

  bool same_results(const RunCurve& other) const {
    return accuracies == other.accuracies && final_labeled == other.final_labeled &&
           std::equal(iterations.begin(), iterations.end(), other.iterations.begin(), other.iterations.end(),
                      [](const IterationRecord& a, const IterationRecord& b) {
                        return a.iteration == b.iteration && a.chosen == b.chosen && a.accuracy == b.accuracy &&
                               a.fallback == b.fallback;
                      });
  }
};

/// The dataset for one run: synthetic sources are generated from the data
/// stream; tabular files are loaded once per process and shared.
SplitDataset materialize_dataset(const DatasetConfig& cfg, const Stream& data_stream);

/// What run_al_loop sees at the start of a run: the dataset after the
/// validation split and the initial pool. Exposed for seed-isolation checks.
struct RunSetup {
  SplitDataset dataset;
  PoolState pool;
};
RunSetup prepare_run(const DatasetConfig& cfg, std::size_t budget, const RngBundle& bundle);

/// Classifier parameters right after initialization for this run.
Classifier initial_classifier(const DatasetConfig& cfg, const SplitDataset& ds, const RngBundle& bundle);

/// Observer invoked after every iteration (e.g. for invariant checks).
using IterationHook = std::function<void(const PoolState&, const IterationRecord&)>;

/// Active learning loop: seed the labeled set, then `budget` times retrain,
/// record test accuracy and acquire one point. `budget` 0 uses cfg.budget.
RunCurve run_al_loop(const DatasetConfig& cfg, const std::string& algorithm, const StrategyParams& params,
                     const RngBundle& bundle, std::size_t budget = 0, const IterationHook& hook = {});

/// R runs with bundles restart_bundle(base, r), r = 0..R-1, on `workers`
/// threads (0 = hardware concurrency). Results are ordered by restart.
std::vector<RunCurve> run_restarts(const DatasetConfig& cfg, const std::string& algorithm, const StrategyParams& params,
                                   const RngBundle& base, std::size_t restarts, std::size_t workers = 0,
                                   std::size_t budget = 0);

/// Test accuracy with every pool label revealed, for the dataset instance of
/// this bundle.
double run_full_accuracy(const DatasetConfig& cfg, const RngBundle& bundle);

/// Median of run_full_accuracy over the first `restarts` restart bundles.
double median_full_accuracy(const DatasetConfig& cfg, const RngBundle& base, std::size_t restarts,
                            std::size_t workers = 0);

/// The first `budget` iterations of a run. Runs are prefix-consistent: no
/// strategy reads the budget, so this equals a run made with that budget.
RunCurve truncate_curve(const RunCurve& curve, std::size_t budget);

/// Mean of the curve's accuracies. Throws on an empty curve.
double auc(std::span<const double> accuracies);
inline double auc(const RunCurve& curve) { return auc(curve.accuracies); }

/// Pointwise median over runs (all must have equal length).
std::vector<double> median_curve(std::span<const RunCurve> runs);

struct BudgetDecision {
  std::size_t budget = 0;
  std::string reason;  // "target", "stagnation" or "exhausted"
};

/// First iteration at which (i) some non-oracle curve reaches target * full_acc
/// or (ii) the pointwise best non-oracle curve gained less than improve_eps
/// over the trailing ceil(check_window * i) iterations (checked once that
/// window spans at least min_window iterations). Curves named "oracle" are
/// ignored. Returns the curve length when neither fires.
BudgetDecision determine_budget(const std::map<std::string, std::vector<double>>& curves, double full_acc,
                                const BudgetRule& rule = {});

/// Parallel map over [0, n) on `workers` threads; exceptions are rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

std::size_t resolve_workers(std::size_t requested);

}  // namespace albench
