#include "albench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "albench/errors.hpp"
#include "albench/model.hpp"
#include "albench/oracle.hpp"

namespace albench {

namespace {

std::mutex g_tabular_mutex;
std::map<std::string, std::shared_ptr<const SplitDataset>> g_tabular_cache;

std::shared_ptr<const SplitDataset> load_cached(const DatasetConfig& cfg) {
  const std::string key = cfg.source.path.string() + "|" + std::to_string(cfg.source.tabular.split_seed);
  std::lock_guard lock(g_tabular_mutex);
  auto it = g_tabular_cache.find(key);
  if (it != g_tabular_cache.end()) return it->second;
  auto ds = std::make_shared<const SplitDataset>(load_tabular(cfg.source.path, cfg.source.format, cfg.source.tabular));
  g_tabular_cache.emplace(key, ds);
  return ds;
}

ClassifierSpec spec_for(const DatasetConfig& cfg, const SplitDataset& ds) {
  return ClassifierSpec{ds.input_dim(), static_cast<std::size_t>(ds.n_classes), cfg.hidden, cfg.dropout};
}

}  // namespace

SplitDataset materialize_dataset(const DatasetConfig& cfg, const Stream& data_stream) {
  SplitDataset ds;
  switch (cfg.source.kind) {
    case DatasetSource::Kind::ThreeClust:
      ds = generate_three_clust(data_stream, cfg.source.three_clust);
      break;
    case DatasetSource::Kind::DivergingSin:
      ds = generate_diverging_sin(data_stream, cfg.source.diverging_sin);
      break;
    case DatasetSource::Kind::Tabular:
      ds = *load_cached(cfg);
      break;
  }
  ds.name = cfg.name;
  return ds;
}

RunSetup prepare_run(const DatasetConfig& cfg, std::size_t budget, const RngBundle& bundle) {
  const Stream& data = bundle.data;
  SplitDataset ds = materialize_dataset(cfg, data.derive("dataset"));
  const std::size_t seed_total = cfg.seed_per_class * static_cast<std::size_t>(ds.n_classes);
  ds = split_validation(std::move(ds), cfg.val_fraction, data.derive("validation"), budget + seed_total);
  PoolState pool = seed_labeled_set(ds, cfg.seed_per_class, data.derive("seed_set"));
  return RunSetup{std::move(ds), std::move(pool)};
}

Classifier initial_classifier(const DatasetConfig& cfg, const SplitDataset& ds, const RngBundle& bundle) {
  Stream model_rng = bundle.model;
  return init_classifier(spec_for(cfg, ds), cfg.training.optimizer, model_rng).model;
}

RunCurve run_al_loop(const DatasetConfig& cfg, const std::string& algorithm, const StrategyParams& params,
                     const RngBundle& bundle, std::size_t budget, const IterationHook& hook) {
  const auto start = std::chrono::steady_clock::now();
  if (budget == 0) budget = cfg.budget;
  if (budget == 0) throw ConfigError(cfg.name + ": budget must be >= 1");

  auto [ds, pool] = prepare_run(cfg, budget, bundle);
  const Examples test = ds.test_set();
  const Examples val = ds.validation_set();
  const PoolFeatures features(ds);

  // Streams owned by this run. Minibatch order and dropout masks are drawn
  // sequentially; the dataset, split and seed set used derived children above.
  Stream minibatch = bundle.data.derive("minibatch");
  Stream model_rng = bundle.model;
  Stream omega = bundle.omega;

  auto [model, opt] = init_classifier(spec_for(cfg, ds), cfg.training.optimizer, model_rng);

  std::unique_ptr<AcquisitionFunction> strategy;
  if (algorithm == "oracle") {
    strategy = std::make_unique<GreedyOracle>(OracleConfig{params.oracle_tau},
                                              OracleAccess{ds, test, val, cfg.training, minibatch, model_rng});
  } else {
    strategy = make_strategy(algorithm, params);
  }

  RunCurve curve;
  curve.dataset = cfg.name;
  curve.domain = cfg.domain;
  curve.algorithm = algorithm;
  curve.seed_omega = bundle.seed_omega;
  curve.seed_data = bundle.seed_data;
  curve.seed_model = bundle.seed_model;
  curve.accuracies.reserve(budget);

  double acc_initial = 0.0;
  std::vector<int> labeled_labels;
  for (std::size_t i = 1; i <= budget; ++i) {
    const Examples labeled = ds.examples(pool.labeled());
    retrain(cfg.training, model, opt, labeled, val, minibatch, model_rng);
    const double acc = evaluate(model, test);
    if (i == 1) acc_initial = acc;
    curve.accuracies.push_back(acc);

    labeled_labels.assign(labeled.y.begin(), labeled.y.end());
    const AcquisitionContext ctx{features,  pool.labeled(), labeled_labels, pool.unlabeled(), budget,
                                 pool.acquired(), acc,     acc_initial,    model,            opt};
    Selection sel = strategy->select(ctx, omega);
    pool.acquire(sel.index);

    IterationRecord rec{i, sel.index, sel.score, acc, sel.fallback, sel.probe_accuracy};
    curve.iterations.push_back(rec);
    if (hook) hook(pool, rec);
  }
  curve.final_labeled = pool.labeled().size();
  curve.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return curve;
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body) {
  workers = std::min(resolve_workers(workers), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<RunCurve> run_restarts(const DatasetConfig& cfg, const std::string& algorithm, const StrategyParams& params,
                                   const RngBundle& base, std::size_t restarts, std::size_t workers,
                                   std::size_t budget) {
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  std::vector<RunCurve> out(restarts);
  parallel_for(restarts, workers, [&](std::size_t r) {
    out[r] = run_al_loop(cfg, algorithm, params, restart_bundle(base, r), budget);
    out[r].restart = r;
  });
  return out;
}

double run_full_accuracy(const DatasetConfig& cfg, const RngBundle& bundle) {
  auto setup = prepare_run(cfg, 0, bundle);
  return full_dataset_accuracy(spec_for(cfg, setup.dataset), setup.dataset, cfg.training, bundle.data, bundle.model);
}

double median_full_accuracy(const DatasetConfig& cfg, const RngBundle& base, std::size_t restarts,
                            std::size_t workers) {
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  std::vector<double> acc(restarts);
  parallel_for(restarts, workers, [&](std::size_t r) { acc[r] = run_full_accuracy(cfg, restart_bundle(base, r)); });
  std::sort(acc.begin(), acc.end());
  const std::size_t m = restarts / 2;
  return restarts % 2 == 1 ? acc[m] : 0.5 * (acc[m - 1] + acc[m]);
}

RunCurve truncate_curve(const RunCurve& curve, std::size_t budget) {
  if (budget < 1 || budget > curve.accuracies.size()) {
    throw std::invalid_argument("truncate_curve: budget " + std::to_string(budget) + " outside [1, " +
                                std::to_string(curve.accuracies.size()) + "]");
  }
  RunCurve out = curve;
  const std::size_t dropped = curve.accuracies.size() - budget;
  out.accuracies.resize(budget);
  out.iterations.resize(budget);
  out.final_labeled = curve.final_labeled - dropped;
  return out;
}

double auc(std::span<const double> accuracies) {
  if (accuracies.empty()) throw std::invalid_argument("auc: empty curve");
  double sum = 0.0;
  for (double a : accuracies) sum += a;
  return sum / static_cast<double>(accuracies.size());
}

std::vector<double> median_curve(std::span<const RunCurve> runs) {
  if (runs.empty()) throw std::invalid_argument("median_curve: no runs");
  const std::size_t len = runs[0].accuracies.size();
  std::vector<double> out(len);
  std::vector<double> column(runs.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t r = 0; r < runs.size(); ++r) {
      if (runs[r].accuracies.size() != len) throw std::invalid_argument("median_curve: curves differ in length");
      column[r] = runs[r].accuracies[i];
    }
    std::sort(column.begin(), column.end());
    const std::size_t m = column.size() / 2;
    out[i] = column.size() % 2 == 1 ? column[m] : 0.5 * (column[m - 1] + column[m]);
  }
  return out;
}

BudgetDecision determine_budget(const std::map<std::string, std::vector<double>>& curves, double full_acc,
                                const BudgetRule& rule) {
  std::vector<const std::vector<double>*> eligible;
  for (const auto& [name, curve] : curves) {
    if (name != "oracle" && !curve.empty()) eligible.push_back(&curve);
  }
  if (eligible.empty()) throw ConfigError("budget: no non-oracle curves to determine the budget from");
  std::size_t length = 0;
  for (const auto* c : eligible) length = std::max(length, c->size());

  // Pointwise best over the algorithms that have reached iteration i.
  std::vector<double> best(length, -INFINITY);
  for (const auto* c : eligible) {
    for (std::size_t i = 0; i < c->size(); ++i) best[i] = std::max(best[i], (*c)[i]);
  }

  const double threshold = rule.target * full_acc;
  constexpr double kSlack = 1e-12;  // absorbs rounding in target * full_acc
  for (std::size_t i = 1; i <= length; ++i) {
    if (best[i - 1] >= threshold - kSlack) return {i, "target"};
    const auto window = static_cast<std::size_t>(std::ceil(rule.check_window * static_cast<double>(i) - kSlack));
    if (window >= std::max<std::size_t>(rule.min_window, 1) && window < i) {
      const double gain = best[i - 1] - best[i - 1 - window];
      if (gain < rule.improve_eps - kSlack) return {i, "stagnation"};
    }
  }
  return {length, "exhausted"};
}

}  // namespace albench
