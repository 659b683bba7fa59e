#include "albench/report.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "albench/errors.hpp"

namespace albench {

namespace fs = std::filesystem;

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

double stddev(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("stddev: empty input");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

AucSummary median_auc(std::span<const double> aucs) {
  if (aucs.empty()) throw std::invalid_argument("median_auc: no runs");
  return {median({aucs.begin(), aucs.end()}), stddev(aucs), aucs.size()};
}

AucSummary median_auc(std::span<const RunCurve> curves) {
  std::vector<double> aucs;
  aucs.reserve(curves.size());
  for (const auto& c : curves) aucs.push_back(auc(c));
  return median_auc(aucs);
}

const ScoreRow* ScoreTable::find(const std::string& dataset, const std::string& algorithm) const {
  for (const auto& r : rows) {
    if (r.dataset == dataset && r.algorithm == algorithm) return &r;
  }
  return nullptr;
}

std::vector<std::string> ScoreTable::datasets() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.dataset);
  return {s.begin(), s.end()};
}

std::vector<std::string> ScoreTable::algorithms() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.algorithm);
  return {s.begin(), s.end()};
}

ScoreTable score_table(std::span<const RunCurve> runs) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> aucs;
  std::map<std::string, std::string> domains;
  for (const auto& c : runs) {
    aucs[{c.dataset, c.algorithm}].push_back(auc(c));
    auto [it, inserted] = domains.emplace(c.dataset, c.domain);
    if (!inserted && it->second != c.domain) {
      throw ReportError("dataset " + c.dataset + " appears with domains " + it->second + " and " + c.domain);
    }
  }
  ScoreTable table;
  for (auto& [key, values] : aucs) {
    // Sorting first makes the std sum independent of record order.
    std::sort(values.begin(), values.end());
    const AucSummary s = median_auc(values);
    table.rows.push_back(ScoreRow{key.first, domains[key.first], key.second, s.runs, s.median, s.spread, 0.0, 0.0});
  }
  return table;
}

ScoreTable normalize_vs_random(const ScoreTable& table) {
  if (table.normalized) throw ReportError("score table is already normalized");
  ScoreTable out = table;
  for (auto& row : out.rows) {
    const ScoreRow* base = table.find(row.dataset, "random");
    if (base == nullptr) {
      throw ReportError("dataset " + row.dataset +
                        " has no random runs; normalized scores are relative to random sampling");
    }
    if (!(base->median_auc > 0.0)) throw ReportError("dataset " + row.dataset + ": random median AUC is not positive");
    row.normalized = row.algorithm == "random" ? 1.0 : row.median_auc / base->median_auc;
    row.normalized_spread = row.spread / base->median_auc;
  }
  out.normalized = true;
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

RankSummary rank_algorithms(const ScoreTable& table) {
  RankSummary out;
  out.algorithms = table.algorithms();
  if (out.algorithms.empty()) throw ReportError("rank: empty score table");
  std::map<std::string, std::string> domain_of;
  for (const auto& r : table.rows) domain_of[r.dataset] = r.domain;

  std::map<std::string, std::map<std::string, std::vector<double>>> domain_ranks;
  std::map<std::string, std::vector<double>> all_ranks;
  for (const auto& ds : table.datasets()) {
    std::vector<double> medians;
    for (const auto& a : out.algorithms) {
      const ScoreRow* row = table.find(ds, a);
      if (row == nullptr) throw ReportError("rank: algorithm " + a + " has no runs on dataset " + ds);
      medians.push_back(row->median_auc);
    }
    const auto ranks = average_ranks(medians);
    for (std::size_t k = 0; k < ranks.size(); ++k) {
      out.per_dataset[ds][out.algorithms[k]] = ranks[k];
      domain_ranks[domain_of[ds]][out.algorithms[k]].push_back(ranks[k]);
      all_ranks[out.algorithms[k]].push_back(ranks[k]);
    }
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  for (const auto& [domain, per_algo] : domain_ranks) {
    for (const auto& [algo, ranks] : per_algo) out.per_domain[domain][algo] = mean(ranks);
  }
  for (const auto& [algo, ranks] : all_ranks) out.overall[algo] = mean(ranks);
  return out;
}

std::vector<DomainScore> domain_summary(const ScoreTable& normalized) {
  if (!normalized.normalized) throw ReportError("domain summary needs a normalized table");
  std::map<std::pair<std::string, std::string>, std::vector<const ScoreRow*>> groups;
  for (const auto& r : normalized.rows) groups[{r.domain, r.algorithm}].push_back(&r);
  std::vector<DomainScore> out;
  for (const auto& [key, rows] : groups) {
    std::vector<double> scores;
    double restart = 0.0;
    for (const auto* r : rows) {
      scores.push_back(r->normalized);
      restart += r->normalized_spread;
    }
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(scores.size());
    out.push_back(DomainScore{key.first, key.second, rows.size(), mean, stddev(scores),
                              restart / static_cast<double>(rows.size())});
  }
  return out;
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: empty input");
  std::sort(values.begin(), values.end());
  BoxStats b;
  b.q1 = quantile(values, 0.25);
  b.median = median(values);
  b.q3 = quantile(values, 0.75);
  b.iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * b.iqr;
  const double hi = b.q3 + 1.5 * b.iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double v : values) {
    if (v >= lo) {
      b.whisker_low = std::min(b.whisker_low, v);
      break;
    }
  }
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    if (*it <= hi) {
      b.whisker_high = std::max(b.whisker_high, *it);
      break;
    }
  }
  for (double v : values) {
    if (v < lo || v > hi) b.outliers.push_back(v);
  }
  return b;
}

std::vector<SubsetMedians> restart_variance_analysis(std::span<const double> auc_pool,
                                                     std::span<const std::size_t> subset_sizes,
                                                     std::size_t draws, Stream& rng) {
  if (draws < 1) throw std::invalid_argument("variance: draws must be >= 1");
  std::vector<SubsetMedians> out;
  for (std::size_t k : subset_sizes) {
    if (k < 1 || k > auc_pool.size()) {
      throw std::invalid_argument("variance: subset size " + std::to_string(k) + " outside [1, " +
                                  std::to_string(auc_pool.size()) + "]");
    }
    SubsetMedians s;
    s.size = k;
    std::vector<double> subset(k);
    for (std::size_t d = 0; d < draws; ++d) {
      const auto picks = rng.sample_without_replacement(auc_pool.size(), k);
      for (std::size_t j = 0; j < k; ++j) subset[j] = auc_pool[picks[j]];
      s.medians.push_back(median(subset));
    }
    s.box = box_stats(s.medians);
    out.push_back(std::move(s));
  }
  return out;
}

// ---- files ----

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v, int digits = 4) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string() + ": " + std::strerror(errno));
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void check_field(const std::string& value, const char* what) {
  if (value.empty() || value.find_first_of("\t\n\r") != std::string::npos) {
    throw std::invalid_argument(std::string("run record: ") + what + " must be non-empty without tabs or newlines");
  }
}

constexpr const char* kRecordHeader =
    "dataset\tdomain\talgorithm\trestart\tseed_omega\tseed_data\tseed_model\titeration\tchosen\taccuracy\tscore\t"
    "fallback\tprobe_accuracy\tlabeled";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError(path.string(), line, "not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const fs::path& path, std::size_t line) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ParseError(path.string(), line, "not an unsigned integer: '" + s + "'");
  }
  return v;
}

}  // namespace

fs::path run_record_path(const fs::path& dir, const RunCurve& curve) {
  char name[32];
  std::snprintf(name, sizeof name, "restart_%03zu.tsv", curve.restart);
  return dir / curve.dataset / curve.algorithm / name;
}

void write_run_record(const fs::path& path, const RunCurve& curve) {
  check_field(curve.dataset, "dataset");
  check_field(curve.domain, "domain");
  check_field(curve.algorithm, "algorithm");
  if (curve.iterations.size() != curve.accuracies.size()) {
    throw std::invalid_argument("run record: iterations and accuracies differ in length");
  }
  auto out = open_out(path);
  out << kRecordHeader << '\n';
  const std::size_t seed_size = curve.final_labeled - curve.iterations.size();
  for (std::size_t i = 0; i < curve.iterations.size(); ++i) {
    const auto& it = curve.iterations[i];
    out << curve.dataset << '\t' << curve.domain << '\t' << curve.algorithm << '\t' << curve.restart << '\t'
        << curve.seed_omega << '\t' << curve.seed_data << '\t' << curve.seed_model << '\t' << it.iteration << '\t'
        << it.chosen << '\t' << fmt_double(curve.accuracies[i]) << '\t' << fmt_double(it.score) << '\t'
        << (it.fallback ? 1 : 0) << '\t' << fmt_double(it.probe_accuracy) << '\t' << seed_size + i + 1 << '\n';
  }
  finish(out, path);
}

RunCurve read_run_record(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string() + ": " + std::strerror(errno));
  std::string line;
  if (!std::getline(in, line) || line != kRecordHeader) throw ParseError(path.string(), 1, "missing run record header");
  RunCurve c;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 14) throw ParseError(path.string(), line_no, "expected 14 fields, got " + std::to_string(f.size()));
    const auto restart = parse_u64(f[3], path, line_no);
    const auto so = parse_u64(f[4], path, line_no);
    const auto sd = parse_u64(f[5], path, line_no);
    const auto sm = parse_u64(f[6], path, line_no);
    if (c.iterations.empty()) {
      c.dataset = f[0];
      c.domain = f[1];
      c.algorithm = f[2];
      c.restart = restart;
      c.seed_omega = so;
      c.seed_data = sd;
      c.seed_model = sm;
    } else if (f[0] != c.dataset || f[1] != c.domain || f[2] != c.algorithm || restart != c.restart ||
               so != c.seed_omega || sd != c.seed_data || sm != c.seed_model) {
      throw ParseError(path.string(), line_no, "record mixes several runs");
    }
    IterationRecord rec;
    rec.iteration = parse_u64(f[7], path, line_no);
    if (rec.iteration != c.iterations.size() + 1) throw ParseError(path.string(), line_no, "iterations out of order");
    rec.chosen = parse_u64(f[8], path, line_no);
    rec.accuracy = parse_double(f[9], path, line_no);
    rec.score = parse_double(f[10], path, line_no);
    if (f[11] != "0" && f[11] != "1") throw ParseError(path.string(), line_no, "fallback must be 0 or 1");
    rec.fallback = f[11] == "1";
    rec.probe_accuracy = parse_double(f[12], path, line_no);
    c.final_labeled = parse_u64(f[13], path, line_no);
    c.accuracies.push_back(rec.accuracy);
    c.iterations.push_back(rec);
  }
  if (c.iterations.empty()) throw ParseError(path.string(), line_no, "run record has no iterations");
  return c;
}

std::vector<RunCurve> read_run_records(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("records directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".tsv" && e.path().filename().string().rfind("restart_", 0) == 0) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<RunCurve> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_run_record(f));
  return out;
}

void write_score_table(const fs::path& path, const ScoreTable& table) {
  auto out = open_out(path);
  out << "dataset\tdomain\talgorithm\truns\tmedian_auc\tspread_restarts";
  if (table.normalized) out << "\tnormalized\tnormalized_spread_restarts";
  out << '\n';
  for (const auto& r : table.rows) {
    out << r.dataset << '\t' << r.domain << '\t' << r.algorithm << '\t' << r.runs << '\t' << fmt_double(r.median_auc)
        << '\t' << fmt_double(r.spread);
    if (table.normalized) out << '\t' << fmt_double(r.normalized) << '\t' << fmt_double(r.normalized_spread);
    out << '\n';
  }
  finish(out, path);
}

void write_domain_table(const fs::path& path, std::span<const DomainScore> rows) {
  auto out = open_out(path);
  out << "domain\talgorithm\tdatasets\tmean_normalized\tspread_datasets\tspread_restarts\n";
  for (const auto& r : rows) {
    out << r.domain << '\t' << r.algorithm << '\t' << r.datasets << '\t' << fmt_double(r.mean) << '\t'
        << fmt_double(r.spread_datasets) << '\t' << fmt_double(r.spread_restarts) << '\n';
  }
  finish(out, path);
}

void write_rank_table(const fs::path& path, const RankSummary& ranks) {
  auto out = open_out(path);
  out << "scope\tname\talgorithm\trank\n";
  for (const auto& [ds, m] : ranks.per_dataset) {
    for (const auto& [a, r] : m) out << "dataset\t" << ds << '\t' << a << '\t' << fmt_double(r) << '\n';
  }
  for (const auto& [dom, m] : ranks.per_domain) {
    for (const auto& [a, r] : m) out << "domain\t" << dom << '\t' << a << '\t' << fmt_double(r) << '\n';
  }
  for (const auto& [a, r] : ranks.overall) out << "overall\tall\t" << a << '\t' << fmt_double(r) << '\n';
  finish(out, path);
}

void write_variance_table(const fs::path& path, std::span<const SubsetMedians> stats) {
  auto out = open_out(path);
  out << "subset_size\tdraws\tq1\tmedian\tq3\tiqr\twhisker_low\twhisker_high\toutliers\n";
  for (const auto& s : stats) {
    out << s.size << '\t' << s.medians.size() << '\t' << fmt_double(s.box.q1) << '\t' << fmt_double(s.box.median)
        << '\t' << fmt_double(s.box.q3) << '\t' << fmt_double(s.box.iqr) << '\t' << fmt_double(s.box.whisker_low)
        << '\t' << fmt_double(s.box.whisker_high) << '\t' << s.box.outliers.size() << '\n';
  }
  finish(out, path);
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

// ---- SVG ----

namespace {

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string color(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double left, top, width, height;
  double x0, x1, y0, y1;
  double px(double x) const { return left + (x1 == x0 ? 0.5 : (x - x0) / (x1 - x0)) * width; }
  double py(double y) const { return top + height - (y1 == y0 ? 0.5 : (y - y0) / (y1 - y0)) * height; }
};

std::string pt(double x, double y) { return fmt_short(x, 2) + "," + fmt_short(y, 2); }

void axes(std::ostringstream& s, const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  s << "<rect x=\"" << fmt_short(f.left, 2) << "\" y=\"" << fmt_short(f.top, 2) << "\" width=\""
    << fmt_short(f.width, 2) << "\" height=\"" << fmt_short(f.height, 2)
    << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = f.y0 + (f.y1 - f.y0) * t / 4.0;
    s << "<text x=\"" << fmt_short(f.left - 6, 2) << "\" y=\"" << fmt_short(f.py(y) + 4, 2)
      << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_short(y, 3) << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double x = f.x0 + (f.x1 - f.x0) * t / 4.0;
    s << "<text x=\"" << fmt_short(f.px(x), 2) << "\" y=\"" << fmt_short(f.top + f.height + 16, 2)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_short(x, 1) << "</text>\n";
  }
  s << "<text x=\"" << fmt_short(f.left + f.width / 2, 2) << "\" y=\"" << fmt_short(f.top + f.height + 34, 2)
    << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
  s << "<text x=\"14\" y=\"" << fmt_short(f.top + f.height / 2, 2) << "\" font-size=\"12\" text-anchor=\"middle\""
    << " transform=\"rotate(-90 14 " << fmt_short(f.top + f.height / 2, 2) << ")\">" << escape(ylabel) << "</text>\n";
}

std::string svg_open(double w, double h, const std::string& title) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\" font-family=\"sans-serif\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  return s.str();
}

}  // namespace

std::string curves_svg(const std::string& title, const std::map<std::string, std::vector<RunCurve>>& by_algorithm) {
  struct Band {
    std::vector<double> med, lo, hi;
  };
  std::map<std::string, Band> bands;
  std::size_t len = 1;
  double ymin = INFINITY, ymax = -INFINITY;
  for (const auto& [algo, runs] : by_algorithm) {
    if (runs.empty()) continue;
    Band b;
    const std::size_t n = runs.front().accuracies.size();
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> col;
      for (const auto& r : runs) {
        if (r.accuracies.size() != n) throw std::invalid_argument("curves_svg: runs of " + algo + " differ in length");
        col.push_back(r.accuracies[i]);
      }
      b.med.push_back(median(col));
      b.lo.push_back(quantile(col, 0.25));
      b.hi.push_back(quantile(col, 0.75));
      ymin = std::min(ymin, b.lo.back());
      ymax = std::max(ymax, b.hi.back());
    }
    len = std::max(len, n);
    bands.emplace(algo, std::move(b));
  }
  if (bands.empty()) {
    ymin = 0.0;
    ymax = 1.0;
  }
  const double pad = std::max(0.01, 0.05 * (ymax - ymin));
  const double W = 720, H = 440;
  Frame f{70, 40, 480, 340, 1.0, static_cast<double>(len), ymin - pad, ymax + pad};
  std::ostringstream s;
  s << svg_open(W, H, title);
  axes(s, f, "iteration", "test accuracy");
  std::size_t k = 0;
  for (const auto& [algo, b] : bands) {
    const std::string c = color(k);
    std::string poly;
    for (std::size_t i = 0; i < b.hi.size(); ++i) poly += pt(f.px(static_cast<double>(i + 1)), f.py(b.hi[i])) + " ";
    for (std::size_t i = b.lo.size(); i-- > 0;) poly += pt(f.px(static_cast<double>(i + 1)), f.py(b.lo[i])) + " ";
    s << "<polygon points=\"" << poly << "\" fill=\"" << c << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    std::string line;
    for (std::size_t i = 0; i < b.med.size(); ++i) line += pt(f.px(static_cast<double>(i + 1)), f.py(b.med[i])) + " ";
    s << "<polyline data-algorithm=\"" << escape(algo) << "\" points=\"" << line << "\" fill=\"none\" stroke=\"" << c
      << "\" stroke-width=\"2\"/>\n";
    const double ly = 50 + 18.0 * static_cast<double>(k);
    s << "<line x1=\"570\" y1=\"" << ly << "\" x2=\"590\" y2=\"" << ly << "\" stroke=\"" << c
      << "\" stroke-width=\"3\"/>\n";
    s << "<text x=\"596\" y=\"" << ly + 4 << "\" font-size=\"12\">" << escape(algo) << "</text>\n";
    ++k;
  }
  s << "</svg>\n";
  return s.str();
}

std::string rank_svg(const RankSummary& ranks) {
  std::vector<std::pair<std::string, const std::map<std::string, double>*>> panels;
  for (const auto& [dom, m] : ranks.per_domain) panels.emplace_back(dom, &m);
  panels.emplace_back("all", &ranks.overall);
  const double A = std::max<double>(2.0, static_cast<double>(ranks.algorithms.size()));
  const double panel_h = 60 + 18 * A;
  const double W = 640, H = 40 + panel_h * static_cast<double>(panels.size());
  std::ostringstream s;
  s << svg_open(W, H, "mean rank (lower is better)");
  double top = 40;
  for (const auto& [name, m] : panels) {
    Frame f{160, top + 24, 420, 18 * A, 1.0, A, 0.0, 1.0};
    s << "<g data-panel=\"" << escape(name) << "\">\n";
    s << "<text x=\"20\" y=\"" << top + 14 << "\" font-size=\"13\" font-weight=\"bold\">" << escape(name)
      << "</text>\n";
    s << "<line x1=\"" << f.left << "\" y1=\"" << top + 24 << "\" x2=\"" << f.left + f.width << "\" y2=\"" << top + 24
      << "\" stroke=\"#444\"/>\n";
    for (int r = 1; r <= static_cast<int>(A); ++r) {
      s << "<text x=\"" << fmt_short(f.px(r), 2) << "\" y=\"" << top + 20
        << "\" font-size=\"11\" text-anchor=\"middle\">" << r << "</text>\n";
    }
    std::vector<std::pair<double, std::string>> sorted;
    for (const auto& [a, r] : *m) sorted.emplace_back(r, a);
    std::sort(sorted.begin(), sorted.end());
    double y = top + 40;
    for (const auto& [r, a] : sorted) {
      const auto idx = static_cast<std::size_t>(
          std::find(ranks.algorithms.begin(), ranks.algorithms.end(), a) - ranks.algorithms.begin());
      s << "<text x=\"150\" y=\"" << y + 4 << "\" font-size=\"12\" text-anchor=\"end\">" << escape(a) << "</text>\n";
      s << "<line x1=\"" << f.left << "\" y1=\"" << y << "\" x2=\"" << fmt_short(f.px(r), 2) << "\" y2=\"" << y
        << "\" stroke=\"#ccc\"/>\n";
      s << "<circle cx=\"" << fmt_short(f.px(r), 2) << "\" cy=\"" << y << "\" r=\"5\" fill=\"" << color(idx)
        << "\"/>\n";
      s << "<text x=\"" << fmt_short(f.px(r) + 9, 2) << "\" y=\"" << y + 4 << "\" font-size=\"11\">"
        << fmt_short(r, 2) << "</text>\n";
      y += 18;
    }
    s << "</g>\n";
    top += panel_h;
  }
  s << "</svg>\n";
  return s.str();
}

std::string variance_svg(const std::string& title, std::span<const SubsetMedians> stats) {
  double ymin = INFINITY, ymax = -INFINITY;
  for (const auto& st : stats) {
    for (double v : st.medians) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (stats.empty()) {
    ymin = 0.0;
    ymax = 1.0;
  }
  const double pad = std::max(0.005, 0.05 * (ymax - ymin));
  const double n = std::max<double>(1.0, static_cast<double>(stats.size()));
  const double W = 640, H = 420;
  Frame f{70, 40, 540, 320, 0.5, n + 0.5, ymin - pad, ymax + pad};
  std::ostringstream s;
  s << svg_open(W, H, title);
  s << "<rect x=\"" << f.left << "\" y=\"" << f.top << "\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = f.y0 + (f.y1 - f.y0) * t / 4.0;
    s << "<text x=\"" << f.left - 6 << "\" y=\"" << fmt_short(f.py(y) + 4, 2)
      << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_short(y, 3) << "</text>\n";
  }
  const double half = 0.3 * f.width / n;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& b = stats[i].box;
    const double cx = f.px(static_cast<double>(i + 1));
    s << "<g data-subset-size=\"" << stats[i].size << "\">\n";
    s << "<line x1=\"" << fmt_short(cx, 2) << "\" y1=\"" << fmt_short(f.py(b.whisker_low), 2) << "\" x2=\""
      << fmt_short(cx, 2) << "\" y2=\"" << fmt_short(f.py(b.whisker_high), 2) << "\" stroke=\"#444\"/>\n";
    s << "<rect x=\"" << fmt_short(cx - half, 2) << "\" y=\"" << fmt_short(f.py(b.q3), 2) << "\" width=\""
      << fmt_short(2 * half, 2) << "\" height=\"" << fmt_short(std::max(0.5, f.py(b.q1) - f.py(b.q3)), 2)
      << "\" fill=\"#9ecae1\" stroke=\"#444\"/>\n";
    s << "<line x1=\"" << fmt_short(cx - half, 2) << "\" y1=\"" << fmt_short(f.py(b.median), 2) << "\" x2=\""
      << fmt_short(cx + half, 2) << "\" y2=\"" << fmt_short(f.py(b.median), 2)
      << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    for (double o : b.outliers) {
      s << "<circle cx=\"" << fmt_short(cx, 2) << "\" cy=\"" << fmt_short(f.py(o), 2)
        << "\" r=\"2.5\" fill=\"none\" stroke=\"#444\"/>\n";
    }
    s << "<text x=\"" << fmt_short(cx, 2) << "\" y=\"" << f.top + f.height + 16
      << "\" font-size=\"11\" text-anchor=\"middle\">" << stats[i].size << "</text>\n";
    s << "</g>\n";
  }
  s << "<text x=\"" << f.left + f.width / 2 << "\" y=\"" << f.top + f.height + 34
    << "\" font-size=\"12\" text-anchor=\"middle\">restarts per subset</text>\n";
  s << "</svg>\n";
  return s.str();
}

void write_manifest(const fs::path& path, const fs::path& root, std::span<const fs::path> files,
                    const std::string& command, const std::optional<nlohmann::json>& config,
                    const std::string& config_hash) {
  nlohmann::json doc;
  doc["command"] = command;
  doc["config_hash"] = config_hash.empty() ? nlohmann::json(nullptr) : nlohmann::json(config_hash);
  doc["config"] = config ? *config : nlohmann::json(nullptr);
  auto list = nlohmann::json::array();
  std::vector<fs::path> sorted(files.begin(), files.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& f : sorted) {
    std::error_code ec;
    const auto bytes = fs::file_size(f, ec);
    if (ec) throw std::runtime_error("cannot stat " + f.string() + ": " + ec.message());
    list.push_back({{"path", fs::relative(f, root).generic_string()}, {"bytes", bytes}});
  }
  doc["files"] = list;
  write_text(path, doc.dump(2) + "\n");
}

}  // namespace albench
