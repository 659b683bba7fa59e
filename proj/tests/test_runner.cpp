#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>

#include "albench/config.hpp"
#include "albench/errors.hpp"
#include "albench/runner.hpp"
#include "doctest.h"

using namespace albench;

namespace {

DatasetConfig small_three_clust(std::size_t budget = 5) {
  DatasetConfig d;
  d.name = "ThreeClust";
  d.domain = "synthetic";
  d.source.kind = DatasetSource::Kind::ThreeClust;
  d.source.three_clust.n_per_cluster = 20;
  d.source.three_clust.cluster_std = 0.5;
  d.budget = budget;
  d.dropout = 0.05;
  d.training.max_epochs = 30;
  d.training.batch_size = 16;
  d.training.optimizer.learning_rate = 0.05;
  return d;
}

std::vector<double> ramp(std::size_t n, double start, double step) {
  std::vector<double> v;
  for (std::size_t i = 1; i <= n; ++i) v.push_back(start + step * static_cast<double>(i));
  return v;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}) == 0.5);
  CHECK(auc(std::vector<double>{0.2, 0.4, 0.6}) == doctest::Approx(0.4));
  CHECK(auc(std::vector<double>{0.6, 0.2, 0.4}) == doctest::Approx(0.4));
  CHECK(auc(std::vector<double>{1.0, 1.0}) == 1.0);
  CHECK_THROWS(auc(std::vector<double>{}));
}

TEST_CASE("median curve is pointwise") {
  std::vector<RunCurve> runs(4);
  runs[0].accuracies = {0.1, 0.9};
  runs[1].accuracies = {0.3, 0.5};
  runs[2].accuracies = {0.2, 0.7};
  runs[3].accuracies = {0.4, 0.6};
  auto m = median_curve(runs);
  CHECK(m[0] == doctest::Approx(0.25));
  CHECK(m[1] == doctest::Approx(0.65));
  runs[3].accuracies.pop_back();
  CHECK_THROWS(median_curve(runs));
}

TEST_CASE("budget: target threshold") {
  // Rises 0.01 per step, so stagnation never fires; 0.99 * 0.8 = 0.792 is reached at i = 37.
  std::map<std::string, std::vector<double>> curves{{"margin", ramp(100, 0.422, 0.01)},
                                                    {"random", ramp(100, 0.3, 0.005)}};
  BudgetDecision b = determine_budget(curves, 0.8);
  CHECK(b.budget == 37);
  CHECK(b.reason == "target");
}

TEST_CASE("budget: flat curve stagnates once the window spans five steps") {
  std::map<std::string, std::vector<double>> curves{{"random", std::vector<double>(100, 0.6)}};
  BudgetDecision b = determine_budget(curves, 0.9);
  // ceil(0.2 * 21) = 5 is the first window of at least five iterations.
  CHECK(b.budget == 21);
  CHECK(b.reason == "stagnation");
}

TEST_CASE("budget: the earlier condition wins") {
  // Fast learner saturates at iteration 12, slow one keeps improving.
  std::vector<double> fast;
  for (std::size_t i = 1; i <= 100; ++i) fast.push_back(i <= 12 ? 0.5 + 0.02 * static_cast<double>(i) : 0.74);
  std::map<std::string, std::vector<double>> curves{{"fast", fast}, {"slow", ramp(100, 0.2, 0.005)}};
  // 0.99 * 0.75 = 0.7425 is never reached. The best curve is flat from i = 12,
  // so the first five-step window (i = 21) shows no gain.
  BudgetDecision b = determine_budget(curves, 0.75);
  CHECK(b.budget == 21);
  CHECK(b.reason == "stagnation");

  // Lower full accuracy: the target fires first, at i = 11 (0.72 >= 0.99 * 0.72 = 0.7128).
  BudgetDecision t = determine_budget(curves, 0.72);
  CHECK(t.budget == 11);
  CHECK(t.reason == "target");
}

TEST_CASE("budget: oracle curves are ignored") {
  std::map<std::string, std::vector<double>> curves{{"oracle", std::vector<double>(30, 1.0)},
                                                    {"margin", ramp(30, 0.0, 0.03)}};
  BudgetDecision b = determine_budget(curves, 0.5);
  CHECK(b.budget == 17);  // 0.51 >= 0.495
  std::map<std::string, std::vector<double>> only{{"oracle", std::vector<double>(30, 1.0)}};
  CHECK_THROWS_AS(determine_budget(only, 0.5), ConfigError);
}

TEST_CASE("budget: rule overrides and exhaustion") {
  std::map<std::string, std::vector<double>> curves{{"margin", ramp(10, 0.0, 0.05)}};
  CHECK(determine_budget(curves, 1.0).reason == "exhausted");
  CHECK(determine_budget(curves, 1.0).budget == 10);
  BudgetRule loose;
  loose.target = 0.3;
  CHECK(determine_budget(curves, 1.0, loose).budget == 6);
  BudgetRule strict;
  strict.improve_eps = 0.5;
  strict.min_window = 1;
  strict.check_window = 0.5;
  // Window ceil(0.5 * 2) = 1 at i = 2: gain 0.05 < 0.5.
  CHECK(determine_budget(curves, 1.0, strict).budget == 2);
}

TEST_CASE("one iteration means one retrain, one accuracy and one acquisition") {
  DatasetConfig d = small_three_clust(1);
  int calls = 0;
  RunCurve c = run_al_loop(d, "margin", {}, make_bundle(1, 1, 1), 0,
                           [&](const PoolState&, const IterationRecord&) { ++calls; });
  CHECK(calls == 1);
  CHECK(c.accuracies.size() == 1);
  CHECK(c.iterations.size() == 1);
  CHECK(c.final_labeled == 3);
}

TEST_CASE("labeled set bookkeeping over a run") {
  DatasetConfig d = small_three_clust(6);
  RngBundle b = make_bundle(2, 3, 4);
  RunSetup setup = prepare_run(d, 6, b);
  std::set<std::size_t> hidden(setup.dataset.val_idx.begin(), setup.dataset.val_idx.end());
  hidden.insert(setup.dataset.test_idx.begin(), setup.dataset.test_idx.end());
  std::size_t expected = setup.pool.seed_size();
  RunCurve c = run_al_loop(d, "coreset", {}, b, 0, [&](const PoolState& pool, const IterationRecord& rec) {
    ++expected;
    CHECK(pool.labeled().size() == expected);
    CHECK(hidden.count(rec.chosen) == 0);
    CHECK(pool.labeled().back() == rec.chosen);
  });
  CHECK(c.final_labeled == setup.pool.seed_size() + 6);
  for (double a : c.accuracies) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
  for (std::size_t i = 0; i < c.iterations.size(); ++i) CHECK(c.iterations[i].accuracy == c.accuracies[i]);
}

TEST_CASE("every strategy is deterministic") {
  DatasetConfig d = small_three_clust(4);
  for (const auto& name : strategy_names()) {
    INFO(name);
    RunCurve a = run_al_loop(d, name, {}, make_bundle(1, 1, 1));
    RunCurve b = run_al_loop(d, name, {}, make_bundle(1, 1, 1));
    CHECK(a.same_results(b));
    CHECK(a.accuracies.size() == 4);
  }
}

TEST_CASE("restarts are independent of how many run") {
  DatasetConfig d = small_three_clust(4);
  RngBundle base = make_bundle(1, 1, 1);
  auto one = run_restarts(d, "entropy", {}, base, 1, 1);
  auto three = run_restarts(d, "entropy", {}, base, 3, 3);
  CHECK(one[0].same_results(three[0]));
  CHECK(one[0].same_results(run_al_loop(d, "entropy", {}, base)));
  RunCurve replay = run_al_loop(d, "entropy", {}, restart_bundle(base, 2));
  CHECK(replay.same_results(three[2]));
  CHECK(three[2].restart == 2);
  CHECK(three[2].seed_data == 3);
  CHECK(three[2].seed_omega == 1);
  CHECK_FALSE(three[0].same_results(three[1]));
  auto serial = run_restarts(d, "entropy", {}, base, 3, 1);
  for (std::size_t r = 0; r < 3; ++r) CHECK(serial[r].same_results(three[r]));
}

TEST_CASE("seed isolation") {
  DatasetConfig d = small_three_clust(4);
  RunSetup a = prepare_run(d, 4, make_bundle(1, 5, 9));
  RunSetup b = prepare_run(d, 4, make_bundle(77, 5, 9));
  CHECK(a.dataset.val_idx == b.dataset.val_idx);
  CHECK(a.pool.labeled() == b.pool.labeled());
  CHECK(a.dataset.features == b.dataset.features);
  CHECK(initial_classifier(d, a.dataset, make_bundle(1, 5, 9)) ==
        initial_classifier(d, b.dataset, make_bundle(77, 5, 9)));

  RunSetup c = prepare_run(d, 4, make_bundle(1, 6, 9));
  CHECK_FALSE(c.dataset.features == a.dataset.features);
  CHECK(initial_classifier(d, c.dataset, make_bundle(1, 6, 9)) ==
        initial_classifier(d, a.dataset, make_bundle(1, 5, 9)));
}

TEST_CASE("prefix consistency") {
  DatasetConfig d = small_three_clust(7);
  for (const char* name : {"random", "bald", "typiclust", "oracle"}) {
    INFO(name);
    RunCurve long_run = run_al_loop(d, name, {}, make_bundle(3, 3, 3), 7);
    RunCurve short_run = run_al_loop(d, name, {}, make_bundle(3, 3, 3), 3);
    RunCurve cut = truncate_curve(long_run, 3);
    CHECK(cut.same_results(short_run));
    CHECK(cut.final_labeled == short_run.final_labeled);
  }
  RunCurve c = run_al_loop(d, "random", {}, make_bundle(1, 1, 1), 2);
  CHECK_THROWS(truncate_curve(c, 0));
  CHECK_THROWS(truncate_curve(c, 3));
}

TEST_CASE("a budget larger than the pool is a config error") {
  DatasetConfig d = small_three_clust(1000);
  CHECK_THROWS_AS(run_al_loop(d, "random", {}, make_bundle(1, 1, 1)), ConfigError);
  CHECK_THROWS_AS(run_al_loop(d, "no_such", {}, make_bundle(1, 1, 1), 2), ConfigError);
}

TEST_CASE("full accuracy and its median") {
  DatasetConfig d = small_three_clust(4);
  RngBundle base = make_bundle(1, 1, 1);
  double a0 = run_full_accuracy(d, base);
  double a1 = run_full_accuracy(d, restart_bundle(base, 1));
  double a2 = run_full_accuracy(d, restart_bundle(base, 2));
  CHECK(a0 == run_full_accuracy(d, base));
  CHECK(median_full_accuracy(d, base, 1) == a0);
  CHECK(median_full_accuracy(d, base, 2, 2) == doctest::Approx(0.5 * (a0 + a1)));
  std::vector<double> v{a0, a1, a2};
  std::sort(v.begin(), v.end());
  CHECK(median_full_accuracy(d, base, 3) == v[1]);
}

TEST_CASE("tabular datasets load through the config") {
  ExperimentConfig cfg = load_config(std::filesystem::path(ALBENCH_SOURCE_DIR) / "configs" / "tabular_small.json");
  const DatasetConfig& wine = cfg.dataset("Wine");
  SplitDataset ds = materialize_dataset(wine, Stream(1));
  CHECK(ds.n_classes == 3);
  CHECK(ds.train_idx.size() + ds.test_idx.size() == 178);
  CHECK(ds.input_dim() == 13);
  // The split is fixed by the index file, not by the data stream.
  CHECK(materialize_dataset(wine, Stream(2)).test_idx == ds.test_idx);
  RunCurve c = run_al_loop(wine, "margin", {}, make_bundle(1, 1, 1), 2);
  CHECK(c.accuracies.size() == 2);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(50, 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  CHECK(resolve_workers(3) == 3);
  CHECK(resolve_workers(0) >= 1);
}
