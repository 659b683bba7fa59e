#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "albench/rng.hpp"
#include "albench/runner.hpp"
#include "json.hpp"

namespace albench {

/// Aggregation over records that cannot be carried out (missing baseline,
/// incomplete grid, reapplied normalization).
class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Median of a sample; an even count uses the midpoint of the central pair.
double median(std::vector<double> values);

/// Population standard deviation (0 for a single value).
double stddev(std::span<const double> values);

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

struct AucSummary {
  double median = 0.0;
  double spread = 0.0;  // standard deviation across runs
  std::size_t runs = 0;
};

AucSummary median_auc(std::span<const double> aucs);
AucSummary median_auc(std::span<const RunCurve> curves);

struct ScoreRow {
  std::string dataset;
  std::string domain;
  std::string algorithm;
  std::size_t runs = 0;
  double median_auc = 0.0;
  double spread = 0.0;
  double normalized = 0.0;         // set by normalize_vs_random
  double normalized_spread = 0.0;  // spread / random median
};

/// One row per (dataset, algorithm), sorted by dataset then algorithm.
struct ScoreTable {
  std::vector<ScoreRow> rows;
  bool normalized = false;

  const ScoreRow* find(const std::string& dataset, const std::string& algorithm) const;
  std::vector<std::string> datasets() const;
  std::vector<std::string> algorithms() const;
};

/// Groups runs by (dataset, algorithm) and summarizes their AUCs. The result
/// does not depend on the order of `runs`.
ScoreTable score_table(std::span<const RunCurve> runs);

/// Divides every median AUC by the random median of the same dataset. Throws
/// ReportError if a dataset lacks a random row or the table is already
/// normalized.
ScoreTable normalize_vs_random(const ScoreTable& table);

/// Ranks of `values` sorted descending, 1-based; ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct RankSummary {
  std::vector<std::string> algorithms;
  std::map<std::string, std::map<std::string, double>> per_dataset;  // dataset -> algorithm -> rank
  std::map<std::string, std::map<std::string, double>> per_domain;   // domain -> algorithm -> mean rank
  std::map<std::string, double> overall;                             // mean over all datasets
};

/// Ranks algorithms by median AUC on every dataset. Throws ReportError unless
/// every algorithm has a row on every dataset.
RankSummary rank_algorithms(const ScoreTable& table);

/// Mean normalized score of one algorithm over the datasets of a domain.
struct DomainScore {
  std::string domain;
  std::string algorithm;
  std::size_t datasets = 0;
  double mean = 0.0;
  double spread_datasets = 0.0;  // std of per-dataset normalized medians
  double spread_restarts = 0.0;  // mean of per-dataset normalized restart spreads
};

std::vector<DomainScore> domain_summary(const ScoreTable& normalized);

struct BoxStats {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double whisker_low = 0.0;   // smallest value >= q1 - 1.5 iqr
  double whisker_high = 0.0;  // largest value <= q3 + 1.5 iqr
  std::vector<double> outliers;
};

BoxStats box_stats(std::vector<double> values);

struct SubsetMedians {
  std::size_t size = 0;
  std::vector<double> medians;
  BoxStats box;
};

/// For each subset size k draws `draws` subsets of the pool (without
/// replacement inside a subset) and records their medians.
std::vector<SubsetMedians> restart_variance_analysis(std::span<const double> auc_pool,
                                                     std::span<const std::size_t> subset_sizes,
                                                     std::size_t draws, Stream& rng);

// ---- files ----

/// Tab-separated run record, one line per iteration. Doubles use 17
/// significant digits so a round trip is exact.
void write_run_record(const std::filesystem::path& path, const RunCurve& curve);
RunCurve read_run_record(const std::filesystem::path& path);

/// All `*.tsv` run records below `dir`, in path order.
std::vector<RunCurve> read_run_records(const std::filesystem::path& dir);

/// `<dir>/<dataset>/<algorithm>/restart_<r>.tsv`
std::filesystem::path run_record_path(const std::filesystem::path& dir, const RunCurve& curve);

void write_score_table(const std::filesystem::path& path, const ScoreTable& table);
void write_domain_table(const std::filesystem::path& path, std::span<const DomainScore> rows);
void write_rank_table(const std::filesystem::path& path, const RankSummary& ranks);
void write_variance_table(const std::filesystem::path& path, std::span<const SubsetMedians> stats);

/// Median accuracy curve per algorithm with a shaded interquartile band.
std::string curves_svg(const std::string& title, const std::map<std::string, std::vector<RunCurve>>& by_algorithm);

/// One panel per domain plus a combined panel; lower rank is better.
std::string rank_svg(const RankSummary& ranks);

std::string variance_svg(const std::string& title, std::span<const SubsetMedians> stats);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Manifest listing every emitted file (relative to `root`) with the config
/// hash and the resolved config.
void write_manifest(const std::filesystem::path& path, const std::filesystem::path& root,
                    std::span<const std::filesystem::path> files, const std::string& command,
                    const std::optional<nlohmann::json>& config, const std::string& config_hash);

}  // namespace albench
