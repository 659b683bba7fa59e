#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "albench/acquisition.hpp"
#include "albench/data.hpp"
#include "albench/model.hpp"
#include "json.hpp"

namespace albench {

struct DatasetSource {
  enum class Kind { ThreeClust, DivergingSin, Tabular };
  Kind kind = Kind::ThreeClust;
  ThreeClustParams three_clust;
  DivergingSinParams diverging_sin;
  std::filesystem::path path;
  TabularFormat format = TabularFormat::DenseCsv;
  TabularOptions tabular;
};

/// One dataset section: the fields of the per-dataset seed set / budget /
/// validation split and classifier / optimizer tables.
struct DatasetConfig {
  std::string name;
  std::string domain;
  DatasetSource source;
  std::size_t seed_per_class = 1;
  std::size_t budget = 0;
  std::size_t pilot_budget = 0;  // 0 falls back to `budget`
  double val_fraction = 0.2;
  std::vector<std::size_t> hidden;
  double dropout = 0.0;
  TrainingConfig training;
};

struct SeedTriple {
  std::uint64_t omega = 1;
  std::uint64_t data = 1;
  std::uint64_t model = 1;
};

/// Rules that fix the budget from pilot curves.
struct BudgetRule {
  double target = 0.99;        // fraction of full-dataset accuracy
  double improve_eps = 0.02;   // absolute accuracy gain
  double check_window = 0.2;   // trailing fraction of iterations
  std::size_t min_window = 5;  // stagnation is only checked once the window spans this many steps
};

struct ExperimentConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<std::string> algorithms;
  std::map<std::string, StrategyParams> algorithm_params;
  std::size_t restarts = 50;
  SeedTriple seeds;
  std::size_t workers = 0;  // 0 = hardware concurrency
  BudgetRule budget_rule;

  StrategyParams params_for(const std::string& algorithm) const;
  const DatasetConfig& dataset(const std::string& name) const;
};

/// Parses and validates a config document. Relative tabular paths resolve
/// against `base_dir`. Errors name the offending field (ConfigError).
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config, defaults included.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

std::string to_string(TrainingProtocol p);
std::string to_string(OptimizerKind k);

}  // namespace albench
