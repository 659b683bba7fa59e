#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "albench/errors.hpp"
#include "albench/report.hpp"
#include "doctest.h"

using namespace albench;
namespace fs = std::filesystem;

namespace {

RunCurve make_curve(const std::string& ds, const std::string& domain, const std::string& algo, std::size_t restart,
                    std::vector<double> acc) {
  RunCurve c;
  c.dataset = ds;
  c.domain = domain;
  c.algorithm = algo;
  c.restart = restart;
  c.seed_omega = 1;
  c.seed_data = 1 + restart;
  c.seed_model = 1 + restart;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    c.iterations.push_back(IterationRecord{i + 1, 100 + i, 0.1 * static_cast<double>(i), acc[i], false, NAN});
  }
  c.accuracies = std::move(acc);
  c.final_labeled = 2 + c.accuracies.size();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("albench_test_report_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("median fixtures") {
  CHECK(median_auc(std::vector<double>{0.1, 0.5, 0.9}).median == 0.5);
  AucSummary one = median_auc(std::vector<double>{0.7});
  CHECK(one.median == 0.7);
  CHECK(one.spread == 0.0);
  CHECK(median_auc(std::vector<double>{0.2, 0.4}).median == doctest::Approx(0.3));
  CHECK_THROWS(median_auc(std::vector<double>{}));
  CHECK(stddev(std::vector<double>{1.0, 3.0}) == 1.0);
}

TEST_CASE("quantiles interpolate linearly") {
  std::vector<double> v{4, 1, 3, 2};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK_THROWS(quantile(v, 1.5));
}

TEST_CASE("normalization fixtures") {
  std::vector<RunCurve> runs{make_curve("D", "syn", "random", 0, {0.5}), make_curve("D", "syn", "margin", 0, {0.52}),
                             make_curve("D", "syn", "bald", 0, {0.45})};
  ScoreTable t = score_table(runs);
  ScoreTable n = normalize_vs_random(t);
  CHECK(n.normalized);
  CHECK(n.find("D", "random")->normalized == 1.0);
  CHECK(n.find("D", "margin")->normalized == doctest::Approx(1.04));
  CHECK(n.find("D", "bald")->normalized < 1.0);
  CHECK_THROWS_AS(normalize_vs_random(n), ReportError);

  std::vector<RunCurve> no_random{make_curve("D", "syn", "margin", 0, {0.5})};
  try {
    normalize_vs_random(score_table(no_random));
    FAIL("expected a missing-baseline error");
  } catch (const ReportError& e) {
    CHECK(std::string(e.what()).find("random") != std::string::npos);
  }
}

TEST_CASE("rank fixtures") {
  CHECK(average_ranks(std::vector<double>{0.9, 0.7, 0.7}) == std::vector<double>{1.0, 2.5, 2.5});
  CHECK(average_ranks(std::vector<double>{0.1, 0.3, 0.2, 0.3}) == std::vector<double>{4.0, 1.5, 3.0, 1.5});
  auto r = average_ranks(std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.1});
  double sum = 0.0;
  for (double x : r) sum += x;
  CHECK(sum == 15.0);

  // Monotone transforms keep ranks.
  std::vector<double> v{0.3, 0.9, 0.1, 0.9};
  std::vector<double> w;
  for (double x : v) w.push_back(std::exp(5 * x) - 2);
  CHECK(average_ranks(v) == average_ranks(w));
}

TEST_CASE("rank summary over domains") {
  std::vector<RunCurve> runs;
  // "a" wins everywhere; "b" and "c" split.
  runs.push_back(make_curve("D1", "syn", "a", 0, {0.9}));
  runs.push_back(make_curve("D1", "syn", "b", 0, {0.5}));
  runs.push_back(make_curve("D1", "syn", "c", 0, {0.4}));
  runs.push_back(make_curve("D2", "tab", "a", 0, {0.8}));
  runs.push_back(make_curve("D2", "tab", "b", 0, {0.1}));
  runs.push_back(make_curve("D2", "tab", "c", 0, {0.2}));
  RankSummary r = rank_algorithms(score_table(runs));
  CHECK(r.overall["a"] == 1.0);
  CHECK(r.overall["b"] == 2.5);
  CHECK(r.per_domain["syn"]["b"] == 2.0);
  CHECK(r.per_domain["tab"]["b"] == 3.0);
  CHECK(r.per_dataset["D2"]["c"] == 2.0);

  runs.pop_back();
  CHECK_THROWS_AS(rank_algorithms(score_table(runs)), ReportError);

  std::string svg = rank_svg(r);
  CHECK(count(svg, "data-panel=\"syn\"") == 1);
  CHECK(count(svg, "data-panel=\"tab\"") == 1);
  CHECK(count(svg, "data-panel=\"all\"") == 1);
}

TEST_CASE("domain summary averages normalized scores") {
  std::vector<RunCurve> runs{make_curve("D1", "syn", "random", 0, {0.5}), make_curve("D1", "syn", "m", 0, {0.6}),
                             make_curve("D2", "syn", "random", 0, {0.4}), make_curve("D2", "syn", "m", 0, {0.4})};
  auto rows = domain_summary(normalize_vs_random(score_table(runs)));
  auto it = std::find_if(rows.begin(), rows.end(), [](const DomainScore& d) { return d.algorithm == "m"; });
  REQUIRE(it != rows.end());
  CHECK(it->datasets == 2);
  CHECK(it->mean == doctest::Approx(1.1));
  CHECK(it->spread_datasets == doctest::Approx(0.1));
  CHECK_THROWS_AS(domain_summary(score_table(runs)), ReportError);
}

TEST_CASE("score table ignores record order") {
  std::vector<RunCurve> runs;
  for (std::size_t r = 0; r < 7; ++r) {
    runs.push_back(make_curve("D", "syn", "random", r, {0.1 * r, 0.3}));
    runs.push_back(make_curve("D", "syn", "margin", r, {0.05 * r, 0.7}));
  }
  ScoreTable a = score_table(runs);
  std::reverse(runs.begin(), runs.end());
  std::swap(runs[2], runs[9]);
  ScoreTable b = score_table(runs);
  REQUIRE(a.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.rows[i].algorithm == b.rows[i].algorithm);
    CHECK(a.rows[i].median_auc == b.rows[i].median_auc);
    CHECK(a.rows[i].spread == b.rows[i].spread);
    CHECK(a.rows[i].runs == 7);
  }
}

TEST_CASE("box statistics") {
  BoxStats b = box_stats({1, 2, 3, 4, 5, 6, 7, 8, 100});
  CHECK(b.median == 5);
  CHECK(b.q1 == 3);
  CHECK(b.q3 == 7);
  CHECK(b.iqr == 4);
  CHECK(b.whisker_high == 8);
  CHECK(b.whisker_low == 1);
  CHECK(b.outliers == std::vector<double>{100});
}

TEST_CASE("restart variance analysis") {
  Stream gen(1);
  std::vector<double> pool;
  for (int i = 0; i < 50; ++i) pool.push_back(0.6 + 0.1 * gen.normal());
  std::vector<std::size_t> sizes{1, 5, 42, 50};
  Stream rng(2);
  auto stats = restart_variance_analysis(pool, sizes, 50, rng);
  REQUIRE(stats.size() == 4);
  for (double m : stats[3].medians) CHECK(m == median(pool));
  CHECK(stats[3].box.iqr == 0.0);
  for (double m : stats[0].medians) CHECK(std::find(pool.begin(), pool.end(), m) != pool.end());
  CHECK(stats[1].box.iqr > stats[2].box.iqr);

  std::vector<std::size_t> too_big{51};
  CHECK_THROWS(restart_variance_analysis(pool, too_big, 10, rng));
  std::vector<std::size_t> zero{0};
  CHECK_THROWS(restart_variance_analysis(pool, zero, 10, rng));
}

TEST_CASE("subset medians concentrate as the subset grows") {
  // Over 100 random pools, the spread of subset medians at k = 5 is at least that at k = 42.
  Stream gen(3);
  int holds = 0;
  for (int p = 0; p < 100; ++p) {
    std::vector<double> pool;
    for (int i = 0; i < 50; ++i) pool.push_back(gen.uniform());
    std::vector<std::size_t> sizes{5, 42};
    auto stats = restart_variance_analysis(pool, sizes, 50, gen);
    holds += stddev(stats[0].medians) >= stddev(stats[1].medians);
  }
  CHECK(holds == 100);
}

TEST_CASE("run records round trip and reproduce the score table") {
  fs::path dir = scratch("records");
  std::vector<RunCurve> runs;
  for (std::size_t r = 0; r < 3; ++r) {
    runs.push_back(make_curve("D", "syn", "random", r, {0.1 + 0.01 * r, 1.0 / 3.0, 0.7}));
    runs.push_back(make_curve("D", "syn", "oracle", r, {0.2, 0.4 + 0.02 * r, 0.9}));
  }
  runs[1].iterations[0].fallback = true;
  runs[1].iterations[0].probe_accuracy = 0.123456789012345678;
  runs[1].iterations[1].score = INFINITY;
  for (const auto& c : runs) write_run_record(run_record_path(dir, c), c);
  CHECK(fs::exists(dir / "D" / "random" / "restart_002.tsv"));

  RunCurve back = read_run_record(run_record_path(dir, runs[1]));
  CHECK(back.same_results(runs[1]));
  CHECK(back.iterations[0].probe_accuracy == runs[1].iterations[0].probe_accuracy);
  CHECK(std::isinf(back.iterations[1].score));
  CHECK(std::isnan(back.iterations[2].probe_accuracy));
  CHECK(back.seed_data == runs[1].seed_data);
  CHECK(back.final_labeled == runs[1].final_labeled);

  auto all = read_run_records(dir);
  CHECK(all.size() == 6);
  ScoreTable a = score_table(runs);
  ScoreTable b = score_table(all);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].median_auc == b.rows[i].median_auc);
    CHECK(a.rows[i].spread == b.rows[i].spread);
  }
}

TEST_CASE("malformed run records name the line") {
  fs::path dir = scratch("bad");
  RunCurve c = make_curve("D", "syn", "random", 0, {0.5, 0.6});
  write_run_record(dir / "r.tsv", c);
  std::string text = slurp(dir / "r.tsv");
  auto pos = text.find("0.59999");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 7, "zzzzzzz");
  write_text(dir / "r.tsv", text);
  try {
    read_run_record(dir / "r.tsv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  write_text(dir / "empty.tsv", "");
  CHECK_THROWS_AS(read_run_record(dir / "empty.tsv"), ParseError);
  CHECK_THROWS(read_run_records(dir / "missing"));
  RunCurve tabbed = c;
  tabbed.dataset = "a\tb";
  CHECK_THROWS(write_run_record(dir / "t.tsv", tabbed));
}

TEST_CASE("empty inputs give header-only tables") {
  fs::path dir = scratch("empty");
  write_score_table(dir / "scores.tsv", ScoreTable{});
  write_domain_table(dir / "domains.tsv", std::vector<DomainScore>{});
  write_variance_table(dir / "variance.tsv", std::vector<SubsetMedians>{});
  CHECK(slurp(dir / "scores.tsv") == "dataset\tdomain\talgorithm\truns\tmedian_auc\tspread_restarts\n");
  CHECK(count(slurp(dir / "domains.tsv"), "\n") == 1);
  CHECK(count(slurp(dir / "variance.tsv"), "\n") == 1);
}

TEST_CASE("curve plot has one polyline per algorithm") {
  std::map<std::string, std::vector<RunCurve>> by;
  for (const char* a : {"random", "margin", "oracle"}) {
    for (std::size_t r = 0; r < 3; ++r) by[a].push_back(make_curve("D", "syn", a, r, {0.5, 0.6 + 0.01 * r, 0.7}));
  }
  std::string svg = curves_svg("D", by);
  CHECK(count(svg, "<polyline") == 3);
  CHECK(count(svg, "data-algorithm=\"margin\"") == 1);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("variance plot has a group per subset size") {
  std::vector<double> pool{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::size_t> sizes{1, 3, 5};
  Stream rng(4);
  auto stats = restart_variance_analysis(pool, sizes, 10, rng);
  std::string svg = variance_svg("v", stats);
  CHECK(count(svg, "data-subset-size=") == 3);
}

TEST_CASE("manifest lists files relative to the root") {
  fs::path dir = scratch("manifest");
  write_text(dir / "a" / "x.tsv", "abc");
  write_text(dir / "y.svg", "hello");
  std::vector<fs::path> files{dir / "y.svg", dir / "a" / "x.tsv"};
  write_manifest(dir / "manifest.json", dir, files, "albench report", nlohmann::json{{"k", 1}}, "00ff");
  auto doc = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(doc["config_hash"] == "00ff");
  CHECK(doc["config"]["k"] == 1);
  REQUIRE(doc["files"].size() == 2);
  CHECK(doc["files"][0]["path"] == "a/x.tsv");
  CHECK(doc["files"][0]["bytes"] == 3);
  CHECK(doc["files"][1]["path"] == "y.svg");
}
