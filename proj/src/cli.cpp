#include "albench/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "albench/config.hpp"
#include "albench/errors.hpp"
#include "albench/report.hpp"
#include "albench/runner.hpp"

namespace albench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::size_t workers = 0;
  bool workers_set = false;
  std::vector<std::string> datasets;
  std::vector<std::string> algorithms;
  std::size_t restarts = 0;
};

fs::path output_root(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return "results";
}

std::string command_line(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) s += ' ';
    s += argv[i];
  }
  return s;
}

/// Loads the config and applies --dataset/--algorithm/--restarts/--workers.
ExperimentConfig load_filtered(const Common& c) {
  if (c.config.empty()) throw ConfigError("--config is required");
  if (!fs::exists(c.config)) throw ConfigError("--config: file not found: " + c.config);
  ExperimentConfig cfg = load_config(c.config);
  if (!c.datasets.empty()) {
    std::vector<DatasetConfig> kept;
    for (const auto& name : c.datasets) kept.push_back(cfg.dataset(name));
    cfg.datasets = std::move(kept);
  }
  if (!c.algorithms.empty()) {
    for (const auto& a : c.algorithms) {
      if (!is_known_strategy(a)) throw ConfigError("--algorithm: unknown algorithm \"" + a + "\"");
    }
    cfg.algorithms = c.algorithms;
  }
  if (c.restarts > 0) cfg.restarts = c.restarts;
  if (c.workers_set) cfg.workers = c.workers;
  return cfg;
}

RngBundle base_bundle(const ExperimentConfig& cfg) {
  return make_bundle(cfg.seeds.omega, cfg.seeds.data, cfg.seeds.model);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Runs every restart of one (dataset, algorithm) pair and writes a record as
/// soon as each run finishes, so a later failure leaves earlier records intact.
std::vector<RunCurve> run_and_record(const ExperimentConfig& cfg, const DatasetConfig& d, const std::string& algo,
                                     std::size_t budget, const fs::path& records, std::vector<fs::path>& files,
                                     std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const RngBundle base = base_bundle(cfg);
  const StrategyParams params = cfg.params_for(algo);
  std::vector<RunCurve> runs(cfg.restarts);
  std::mutex mu;
  parallel_for(cfg.restarts, cfg.workers, [&](std::size_t r) {
    RunCurve c = run_al_loop(d, algo, params, restart_bundle(base, r), budget);
    c.restart = r;
    const fs::path p = run_record_path(records, c);
    write_run_record(p, c);
    std::lock_guard lock(mu);
    files.push_back(p);
    runs[r] = std::move(c);
  });
  char msg[160];
  std::snprintf(msg, sizeof msg, "%.1fs", seconds_since(t0));
  err << d.name << '/' << algo << ": " << cfg.restarts << " restarts, budget " << budget << ", " << msg << '\n';
  return runs;
}

int cmd_run(const Common& c, std::optional<std::size_t> budget, const std::string& cmdline, std::ostream& out,
            std::ostream& err) {
  const ExperimentConfig cfg = load_filtered(c);
  const fs::path root = output_root(c);
  const fs::path records = root / "records";
  std::vector<fs::path> files;
  int status = kExitOk;
  try {
    for (const auto& d : cfg.datasets) {
      for (const auto& algo : cfg.algorithms) {
        run_and_record(cfg, d, algo, budget.value_or(d.budget), records, files, err);
      }
    }
  } catch (const ConfigError&) {
    write_manifest(records / "manifest.json", records, files, cmdline + " [failed]", to_json(cfg), config_hash(cfg));
    throw;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    status = kExitFailure;
  }
  write_manifest(records / "manifest.json", records, files, status == kExitOk ? cmdline : cmdline + " [failed]",
                 to_json(cfg), config_hash(cfg));
  if (status == kExitOk) out << "wrote " << files.size() << " run records to " << records.string() << '\n';
  return status;
}

struct BudgetOptions {
  std::string records;
  std::optional<double> target, improve_eps, window, full_accuracy;
  std::optional<std::size_t> min_window;
};

int cmd_budget(const Common& c, const BudgetOptions& b, const std::string& cmdline, std::ostream& out,
               std::ostream& err) {
  ExperimentConfig cfg = load_filtered(c);
  if (b.target) cfg.budget_rule.target = *b.target;
  if (b.improve_eps) cfg.budget_rule.improve_eps = *b.improve_eps;
  if (b.window) cfg.budget_rule.check_window = *b.window;
  if (b.min_window) cfg.budget_rule.min_window = *b.min_window;
  if (!(cfg.budget_rule.check_window > 0.0 && cfg.budget_rule.check_window <= 1.0)) {
    throw ConfigError("--window: must lie in (0, 1]");
  }
  const fs::path root = output_root(c);
  std::vector<fs::path> files;

  std::map<std::string, std::map<std::string, std::vector<RunCurve>>> stored;  // dataset -> algorithm -> runs
  if (!b.records.empty()) {
    for (auto& run : read_run_records(b.records)) stored[run.dataset][run.algorithm].push_back(std::move(run));
  }

  std::ostringstream table;
  table << "dataset\tbudget\treason\tfull_accuracy\n";
  for (const auto& d : cfg.datasets) {
    std::map<std::string, std::vector<double>> medians;
    if (!b.records.empty()) {
      auto it = stored.find(d.name);
      if (it == stored.end()) throw ConfigError("--records: no run records for dataset " + d.name);
      for (const auto& [algo, runs] : it->second) medians[algo] = median_curve(runs);
    } else {
      const std::size_t length = d.pilot_budget > 0 ? d.pilot_budget : d.budget;
      for (const auto& algo : cfg.algorithms) {
        if (algo == "oracle") continue;
        medians[algo] = median_curve(run_and_record(cfg, d, algo, length, root / "pilot", files, err));
      }
    }
    const double full = b.full_accuracy ? *b.full_accuracy
                                        : median_full_accuracy(d, base_bundle(cfg), cfg.restarts, cfg.workers);
    const BudgetDecision dec = determine_budget(medians, full, cfg.budget_rule);
    char line[256];
    std::snprintf(line, sizeof line, "%s\t%zu\t%s\t%.17g\n", d.name.c_str(), dec.budget, dec.reason.c_str(), full);
    table << line;
    out << line;
  }
  const fs::path tsv = root / "budget.tsv";
  write_text(tsv, table.str());
  files.push_back(tsv);
  write_manifest(root / "budget_manifest.json", root, files, cmdline, to_json(cfg), config_hash(cfg));
  return kExitOk;
}

/// Config and hash of the run that produced `records`, if its manifest exists.
std::pair<std::optional<json>, std::string> records_provenance(const fs::path& records) {
  const fs::path m = records / "manifest.json";
  if (!fs::exists(m)) return {std::nullopt, ""};
  std::ifstream in(m);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return {std::nullopt, ""};
  std::optional<json> cfg;
  if (doc.contains("config") && !doc["config"].is_null()) cfg = doc["config"];
  std::string hash = doc.contains("config_hash") && doc["config_hash"].is_string() ? doc["config_hash"].get<std::string>() : "";
  return {cfg, hash};
}

std::string file_stem(const std::string& name) {
  std::string s;
  for (char ch : name) s += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
  return s;
}

int cmd_report(const Common& c, const std::string& records_opt, const std::string& cmdline, std::ostream& out) {
  const fs::path root = output_root(c);
  const fs::path records = records_opt.empty() ? root / "records" : fs::path(records_opt);
  std::vector<RunCurve> runs = read_run_records(records);
  if (runs.empty()) throw std::runtime_error("no run records found in " + records.string());

  const fs::path dir = root / "report";
  std::vector<fs::path> files;
  auto emit = [&](const fs::path& p) { files.push_back(p); };

  const ScoreTable table = score_table(runs);
  write_score_table(dir / "scores.tsv", table);
  emit(dir / "scores.tsv");

  std::map<std::string, std::map<std::string, std::vector<RunCurve>>> by_dataset;
  for (auto& r : runs) by_dataset[r.dataset][r.algorithm].push_back(std::move(r));
  for (const auto& [ds, algos] : by_dataset) {
    const fs::path p = dir / ("curves_" + file_stem(ds) + ".svg");
    write_text(p, curves_svg(ds, algos));
    emit(p);
  }

  const ScoreTable normalized = normalize_vs_random(table);
  write_score_table(dir / "normalized.tsv", normalized);
  emit(dir / "normalized.tsv");
  const auto domains = domain_summary(normalized);
  write_domain_table(dir / "domains.tsv", domains);
  emit(dir / "domains.tsv");
  const RankSummary ranks = rank_algorithms(table);
  write_rank_table(dir / "ranks.tsv", ranks);
  emit(dir / "ranks.tsv");
  write_text(dir / "ranks.svg", rank_svg(ranks));
  emit(dir / "ranks.svg");

  auto [cfg, hash] = records_provenance(records);
  write_manifest(dir / "manifest.json", dir, files, cmdline, cfg, hash);

  char buf[256];
  out << "dataset\talgorithm\tmedian_auc\tspread\tnormalized\n";
  for (const auto& r : normalized.rows) {
    std::snprintf(buf, sizeof buf, "%s\t%s\t%.4f\t%.4f\t%.3f\n", r.dataset.c_str(), r.algorithm.c_str(), r.median_auc,
                  r.spread, r.normalized);
    out << buf;
  }
  return kExitOk;
}

struct VarianceOptions {
  std::string records;
  std::vector<std::size_t> sizes{1, 3, 5, 10, 20, 42, 50};
  std::size_t draws = 50;
  std::uint64_t seed = 1;
};

int cmd_variance(const Common& c, const VarianceOptions& v, const std::string& cmdline, std::ostream& out) {
  const fs::path root = output_root(c);
  const fs::path records = v.records.empty() ? root / "records" : fs::path(v.records);
  const std::vector<RunCurve> runs = read_run_records(records);
  if (runs.empty()) throw std::runtime_error("no run records found in " + records.string());

  std::map<std::pair<std::string, std::string>, std::vector<double>> pools;
  for (const auto& r : runs) {
    const bool ds_ok = c.datasets.empty() || std::count(c.datasets.begin(), c.datasets.end(), r.dataset) > 0;
    const bool algo_ok = c.algorithms.empty() ? r.algorithm != "random"
                                              : std::count(c.algorithms.begin(), c.algorithms.end(), r.algorithm) > 0;
    if (ds_ok && algo_ok) pools[{r.dataset, r.algorithm}].push_back(auc(r));
  }
  if (pools.empty()) throw ConfigError("variance: no records match the --dataset/--algorithm filters");

  const fs::path dir = root / "variance";
  std::vector<fs::path> files;
  Stream rng(v.seed);
  out << "dataset\talgorithm\tsubset_size\tiqr\tq1\tmedian\tq3\n";
  for (const auto& [key, pool] : pools) {
    std::vector<std::size_t> sizes;
    for (std::size_t k : v.sizes) {
      if (k <= pool.size()) sizes.push_back(k);
    }
    const auto stats = restart_variance_analysis(pool, sizes, v.draws, rng);
    const std::string stem = file_stem(key.first) + "_" + file_stem(key.second);
    write_variance_table(dir / (stem + ".tsv"), stats);
    write_text(dir / (stem + ".svg"), variance_svg(key.first + " / " + key.second, stats));
    files.push_back(dir / (stem + ".tsv"));
    files.push_back(dir / (stem + ".svg"));
    for (const auto& s : stats) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s\t%s\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\n", key.first.c_str(), key.second.c_str(),
                    s.size, s.box.iqr, s.box.q1, s.box.median, s.box.q3);
      out << buf;
    }
  }
  auto [cfg, hash] = records_provenance(records);
  write_manifest(dir / "manifest.json", dir, files, cmdline, cfg, hash);
  return kExitOk;
}

std::string describe_source(const DatasetSource& s) {
  switch (s.kind) {
    case DatasetSource::Kind::ThreeClust: return "three_clust";
    case DatasetSource::Kind::DivergingSin: return "diverging_sin";
    case DatasetSource::Kind::Tabular: return "tabular:" + s.path.string();
  }
  return "?";
}

int cmd_list(const Common& c, std::ostream& out) {
  out << "generators:\n"
         "  three_clust    2-D, 2 classes, two clean clusters and a poisoned pair on the decision boundary\n"
         "  diverging_sin  2-D, 2 classes, sin(psi x) +/- (delta x + noise)\n"
         "  tabular        dense CSV or libsvm file, features scaled to [0, 1]\n";
  if (c.config.empty()) return kExitOk;
  const ExperimentConfig cfg = load_filtered(c);
  out << "datasets in " << c.config << ":\n";
  out << "name\tdomain\tsource\tseed_per_class\tbudget\tval_fraction\n";
  for (const auto& d : cfg.datasets) {
    out << d.name << '\t' << d.domain << '\t' << describe_source(d.source) << '\t' << d.seed_per_class << '\t'
        << d.budget << '\t' << d.val_fraction << '\n';
  }
  return kExitOk;
}

void add_common(CLI::App* sub, Common& c, bool with_config, bool config_required) {
  if (with_config) {
    auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)");
    if (config_required) opt->required();
  }
  sub->add_option("--out", c.out, std::string("output root (default: $") + kOutputRootEnv + " or ./results)");
  sub->add_option("--dataset", c.datasets, "only these datasets (repeatable)");
  sub->add_option("--algorithm", c.algorithms, "only these algorithms (repeatable)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pool-based active learning benchmark", "albench"};
  app.require_subcommand(1);
  Common common;
  std::optional<std::size_t> budget;
  BudgetOptions bopts;
  std::string report_records;
  VarianceOptions vopts;

  auto add_run_opts = [&](CLI::App* sub) {
    sub->add_option("--workers", common.workers, "worker threads (0 = all processors)")
        ->each([&](const std::string&) { common.workers_set = true; });
    sub->add_option("--restarts", common.restarts, "override the restart count")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "run every (dataset, algorithm) pair and write run records");
  add_common(run, common, true, true);
  add_run_opts(run);
  run->add_option("--budget", budget, "override every dataset's budget")->check(CLI::PositiveNumber);

  auto* bud = app.add_subcommand("budget", "determine budgets from pilot curves");
  add_common(bud, common, true, true);
  add_run_opts(bud);
  bud->add_option("--records", bopts.records, "use stored pilot records instead of running a sweep");
  bud->add_option("--target", bopts.target, "fraction of full-dataset accuracy (default 0.99)");
  bud->add_option("--improve-eps", bopts.improve_eps, "minimum gain over the window (default 0.02)");
  bud->add_option("--window", bopts.window, "trailing window as a fraction of iterations (default 0.2)");
  bud->add_option("--min-window", bopts.min_window, "smallest window that is checked (default 5)");
  bud->add_option("--full-accuracy", bopts.full_accuracy, "skip the full-dataset runs and use this accuracy");

  auto* rep = app.add_subcommand("report", "aggregate run records into tables and plots");
  add_common(rep, common, false, false);
  rep->add_option("--records", report_records, "records directory (default: <out>/records)");

  auto* var = app.add_subcommand("variance", "restart-count analysis of per-run AUCs");
  add_common(var, common, false, false);
  var->add_option("--records", vopts.records, "records directory (default: <out>/records)");
  var->add_option("--sizes", vopts.sizes, "subset sizes")->delimiter(',');
  var->add_option("--draws", vopts.draws, "subsets drawn per size")->check(CLI::PositiveNumber);
  var->add_option("--seed", vopts.seed, "seed for subset draws");

  auto* list = app.add_subcommand("list-datasets", "list generators and configured datasets");
  list->add_option("--config", common.config, "experiment config (JSON)");
  list->add_option("--dataset", common.datasets, "only these datasets (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  const std::string cmdline = command_line(argc, argv);
  try {
    if (*run) return cmd_run(common, budget, cmdline, out, err);
    if (*bud) return cmd_budget(common, bopts, cmdline, out, err);
    if (*rep) return cmd_report(common, report_records, cmdline, out);
    if (*var) return cmd_variance(common, vopts, cmdline, out);
    if (*list) return cmd_list(common, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace albench
