#include "albench/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "albench/errors.hpp"

namespace albench {

std::vector<std::size_t> SplitDataset::pool_idx() const {
  std::vector<std::size_t> train = train_idx;
  std::vector<std::size_t> val = val_idx;
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::vector<std::size_t> pool;
  pool.reserve(train.size());
  std::set_difference(train.begin(), train.end(), val.begin(), val.end(), std::back_inserter(pool));
  return pool;
}

Examples SplitDataset::examples(std::span<const std::size_t> indices) const {
  Examples ex{features.select_rows(indices), {}};
  ex.y.reserve(indices.size());
  for (std::size_t i : indices) ex.y.push_back(labels.at(i));
  return ex;
}

void SplitDataset::check_invariants() const {
  const std::size_t n = features.rows();
  if (labels.size() != n) throw std::logic_error(name + ": label count differs from row count");
  std::vector<char> role(n, 0);
  for (std::size_t i : train_idx) {
    if (i >= n) throw std::logic_error(name + ": train index out of range");
    role[i] = 1;
  }
  for (std::size_t i : test_idx) {
    if (i >= n) throw std::logic_error(name + ": test index out of range");
    if (role[i] == 1) throw std::logic_error(name + ": train and test overlap");
    role[i] = 2;
  }
  for (std::size_t i : val_idx) {
    if (i >= n || role[i] != 1) throw std::logic_error(name + ": validation index outside train split");
  }
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw std::logic_error(name + ": label out of range");
  }
}

// ---------------------------------------------------------------------------

PoolState::PoolState(std::vector<std::size_t> labeled, std::vector<std::size_t> unlabeled)
    : labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)), seed_size_(labeled_.size()) {
  std::sort(unlabeled_.begin(), unlabeled_.end());
  for (std::size_t i : labeled_) {
    if (std::binary_search(unlabeled_.begin(), unlabeled_.end(), i))
      throw std::logic_error("PoolState: labeled and unlabeled sets overlap");
  }
}

bool PoolState::is_unlabeled(std::size_t index) const {
  return std::binary_search(unlabeled_.begin(), unlabeled_.end(), index);
}

void PoolState::acquire(std::size_t index) {
  auto it = std::lower_bound(unlabeled_.begin(), unlabeled_.end(), index);
  if (it == unlabeled_.end() || *it != index)
    throw std::logic_error("PoolState::acquire: index " + std::to_string(index) + " is not unlabeled");
  unlabeled_.erase(it);
  labeled_.push_back(index);
}

// ---------------------------------------------------------------------------

void minmax_normalize(Matrix& m, std::span<const std::size_t> fit_rows, bool clip) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double lo = INFINITY;
    double hi = -INFINITY;
    for (std::size_t r : fit_rows) {
      lo = std::min(lo, m(r, c));
      hi = std::max(hi, m(r, c));
    }
    if (fit_rows.empty()) continue;
    double range = hi - lo;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double v = range > 0.0 ? (m(r, c) - lo) / range : 0.0;
      if (clip) v = std::clamp(v, 0.0, 1.0);
      m(r, c) = v;
    }
  }
}

RawSample sample_three_clust(Stream& rng, const ThreeClustParams& p) {
  struct Cluster {
    double cx, cy;
    int label;
  };
  const Cluster clusters[] = {
      {-p.clean_offset, 0.0, 0},
      {p.clean_offset, 0.0, 1},
      {0.0, p.poisoned_height, 0},
      {0.0, p.poisoned_height, 1},
  };
  RawSample out{Matrix(4 * p.n_per_cluster, 2), {}};
  out.labels.reserve(4 * p.n_per_cluster);
  std::size_t r = 0;
  for (const Cluster& c : clusters) {
    for (std::size_t i = 0; i < p.n_per_cluster; ++i, ++r) {
      out.points(r, 0) = c.cx + p.cluster_std * rng.normal();
      out.points(r, 1) = c.cy + p.cluster_std * rng.normal();
      out.labels.push_back(c.label);
    }
  }
  return out;
}

double diverging_sin_value(double x, int sign, double noise, const DivergingSinParams& p) {
  return std::sin(p.psi * x) + static_cast<double>(sign) * (p.delta * x + noise);
}

RawSample sample_diverging_sin(Stream& rng, const DivergingSinParams& p) {
  if (p.sigma < 0.0) throw ConfigError("DivergingSin: sigma must be non-negative");
  RawSample out{Matrix(2 * p.n_per_class, 2), {}};
  out.labels.reserve(2 * p.n_per_class);
  std::size_t r = 0;
  for (int label : {0, 1}) {
    const int sign = label == 1 ? 1 : -1;
    for (std::size_t i = 0; i < p.n_per_class; ++i, ++r) {
      double x = rng.uniform(p.x_min, p.x_max);
      double noise = p.sigma * rng.normal();
      out.points(r, 0) = x;
      out.points(r, 1) = diverging_sin_value(x, sign, noise, p);
      out.labels.push_back(label);
    }
  }
  return out;
}

namespace {

// Shuffles train and test draws independently and stacks them (train first).
SplitDataset assemble_synthetic(std::string name, RawSample train, RawSample test, Stream order_rng) {
  const std::size_t n_train = train.labels.size();
  const std::size_t n_test = test.labels.size();
  SplitDataset ds;
  ds.name = std::move(name);
  ds.n_classes = 2;
  ds.features = Matrix(n_train + n_test, 2);
  ds.labels.resize(n_train + n_test);

  auto place = [&](const RawSample& raw, std::size_t offset) {
    std::vector<std::size_t> order(raw.labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto src = raw.points.row(order[i]);
      std::copy(src.begin(), src.end(), ds.features.row(offset + i).begin());
      ds.labels[offset + i] = raw.labels[order[i]];
    }
  };
  place(train, 0);
  place(test, n_train);

  for (std::size_t i = 0; i < n_train; ++i) ds.train_idx.push_back(i);
  for (std::size_t i = 0; i < n_test; ++i) ds.test_idx.push_back(n_train + i);
  minmax_normalize(ds.features, ds.train_idx, false);
  return ds;
}

}  // namespace

SplitDataset generate_three_clust(const Stream& data_stream, const ThreeClustParams& params) {
  if (params.n_per_cluster < 1) throw ConfigError("ThreeClust: n_per_cluster must be >= 1");
  Stream train_rng = data_stream.derive("three_clust/train");
  Stream test_rng = data_stream.derive("three_clust/test");
  return assemble_synthetic("ThreeClust", sample_three_clust(train_rng, params), sample_three_clust(test_rng, params),
                            data_stream.derive("three_clust/order"));
}

SplitDataset generate_diverging_sin(const Stream& data_stream, const DivergingSinParams& params) {
  if (params.n_per_class < 1) throw ConfigError("DivergingSin: n_per_class must be >= 1");
  if (params.sigma < 0.0) throw ConfigError("DivergingSin: sigma must be non-negative");
  Stream train_rng = data_stream.derive("diverging_sin/train");
  Stream test_rng = data_stream.derive("diverging_sin/test");
  return assemble_synthetic("DivergingSin", sample_diverging_sin(train_rng, params),
                            sample_diverging_sin(test_rng, params), data_stream.derive("diverging_sin/order"));
}

// ---------------------------------------------------------------------------

namespace {

struct RawTable {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::size_t n_features = 0;
};

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view s, double& out) {
  std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

RawTable read_dense_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  RawTable t;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() < 2) throw ParseError(path.string(), line_no, "expected at least one feature and a label");
    std::vector<double> row(fields.size() - 1);
    bool numeric = true;
    for (std::size_t i = 0; i + 1 < fields.size(); ++i) numeric = numeric && parse_double(fields[i], row[i]);
    if (first) {
      first = false;
      t.n_features = row.size();
      if (!numeric) continue;  // header
    }
    if (!numeric) throw ParseError(path.string(), line_no, "non-numeric feature value");
    if (row.size() != t.n_features)
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(t.n_features + 1) + " fields, got " + std::to_string(fields.size()));
    if (fields.back().empty()) throw ParseError(path.string(), line_no, "missing label");
    t.rows.push_back(std::move(row));
    t.labels.push_back(fields.back());
  }
  return t;
}

RawTable read_sparse(const std::filesystem::path& path, std::size_t n_features) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  RawTable t;
  std::vector<std::vector<std::pair<std::size_t, double>>> entries;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string label;
    if (!(ss >> label)) continue;
    std::vector<std::pair<std::size_t, double>> row;
    std::string tok;
    while (ss >> tok) {
      auto colon = tok.find(':');
      double value = 0.0;
      std::size_t index = 0;
      auto idx_str = tok.substr(0, colon);
      auto [ptr, ec] = std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), index);
      if (colon == std::string::npos || ec != std::errc() || ptr != idx_str.data() + idx_str.size() || index == 0 ||
          !parse_double(tok.substr(colon + 1), value))
        throw ParseError(path.string(), line_no, "malformed feature '" + tok + "'");
      max_index = std::max(max_index, index);
      row.emplace_back(index - 1, value);
    }
    entries.push_back(std::move(row));
    t.labels.push_back(label);
  }
  t.n_features = n_features == 0 ? max_index : n_features;
  for (std::size_t r = 0; r < entries.size(); ++r) {
    std::vector<double> dense(t.n_features, 0.0);
    for (auto [i, v] : entries[r]) {
      if (i >= t.n_features) throw ParseError(path.string(), r + 1, "feature index exceeds n_features");
      dense[i] = v;
    }
    t.rows.push_back(std::move(dense));
  }
  return t;
}

RawTable read_table(const std::filesystem::path& path, TabularFormat format, std::size_t n_features) {
  return format == TabularFormat::DenseCsv ? read_dense_csv(path) : read_sparse(path, n_features);
}

// Sorted unique labels -> 0..C-1. Numeric order when every label is numeric.
std::map<std::string, int> label_mapping(const std::vector<std::string>& labels) {
  std::set<std::string> unique(labels.begin(), labels.end());
  std::vector<std::string> sorted(unique.begin(), unique.end());
  bool numeric = std::all_of(sorted.begin(), sorted.end(), [](const std::string& s) {
    double v;
    return parse_double(s, v);
  });
  if (numeric) {
    std::stable_sort(sorted.begin(), sorted.end(), [](const std::string& a, const std::string& b) {
      double x = 0, y = 0;
      parse_double(a, x);
      parse_double(b, y);
      return x < y;
    });
  }
  std::map<std::string, int> mapping;
  for (std::size_t i = 0; i < sorted.size(); ++i) mapping[sorted[i]] = static_cast<int>(i);
  return mapping;
}

}  // namespace

std::vector<std::size_t> read_index_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::size_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) throw ParseError(path.string(), line_no, "expected an index");
    out.push_back(v);
  }
  return out;
}

void write_index_file(const std::filesystem::path& path, std::span<const std::size_t> indices) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i : indices) out << i << '\n';
}

SplitDataset load_tabular(const std::filesystem::path& path, TabularFormat format, const TabularOptions& options) {
  RawTable table = read_table(path, format, options.n_features);
  const std::size_t n_main = table.rows.size();
  if (options.test_path) {
    RawTable test = read_table(*options.test_path, format, table.n_features);
    if (format == TabularFormat::DenseCsv && test.n_features != table.n_features)
      throw ConfigError("test file has a different feature count than " + path.string());
    for (auto& r : test.rows) table.rows.push_back(std::move(r));
    for (auto& l : test.labels) table.labels.push_back(std::move(l));
  }
  const std::size_t n = table.rows.size();
  if (n == 0) throw ConfigError(path.string() + ": no rows");

  SplitDataset ds;
  ds.name = path.stem().string();
  ds.features = Matrix(n, table.n_features);
  for (std::size_t r = 0; r < n; ++r) std::copy(table.rows[r].begin(), table.rows[r].end(), ds.features.row(r).begin());
  auto mapping = label_mapping(table.labels);
  ds.n_classes = static_cast<int>(mapping.size());
  ds.labels.reserve(n);
  for (const auto& l : table.labels) ds.labels.push_back(mapping.at(l));

  if (options.test_path) {
    for (std::size_t i = 0; i < n_main; ++i) ds.train_idx.push_back(i);
    for (std::size_t i = n_main; i < n; ++i) ds.test_idx.push_back(i);
  } else {
    std::vector<std::size_t> test;
    if (options.test_index_path && std::filesystem::exists(*options.test_index_path)) {
      test = read_index_file(*options.test_index_path);
    } else {
      auto k = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(n)));
      Stream rng = Stream(options.split_seed).derive("test_split");
      test = rng.sample_without_replacement(n, k);
      std::sort(test.begin(), test.end());
      if (options.test_index_path) write_index_file(*options.test_index_path, test);
    }
    std::vector<char> is_test(n, 0);
    for (std::size_t i : test) {
      if (i >= n) throw ConfigError("test index " + std::to_string(i) + " out of range for " + path.string());
      is_test[i] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) (is_test[i] ? ds.test_idx : ds.train_idx).push_back(i);
  }

  minmax_normalize(ds.features, ds.train_idx, true);

  std::vector<std::size_t> per_class(ds.n_classes, 0);
  for (std::size_t i : ds.train_idx) ++per_class[ds.labels[i]];
  for (int c = 0; c < ds.n_classes; ++c) {
    if (per_class[c] < options.min_per_class)
      throw ConfigError(path.string() + ": class " + std::to_string(c) + " has " + std::to_string(per_class[c]) +
                        " train rows, fewer than the seed set size " + std::to_string(options.min_per_class));
  }
  ds.check_invariants();
  return ds;
}

// ---------------------------------------------------------------------------

SplitDataset split_validation(SplitDataset ds, double fraction, const Stream& data_stream, std::size_t min_pool) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
  std::vector<std::size_t> train = ds.train_idx;
  std::sort(train.begin(), train.end());
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train.size())));
  if (train.size() - k < min_pool)
    throw ConfigError(ds.name + ": validation fraction " + std::to_string(fraction) + " leaves " +
                      std::to_string(train.size() - k) + " pool points, need " + std::to_string(min_pool));
  Stream rng = data_stream;
  auto picks = rng.sample_without_replacement(train.size(), k);
  ds.val_idx.clear();
  for (std::size_t p : picks) ds.val_idx.push_back(train[p]);
  std::sort(ds.val_idx.begin(), ds.val_idx.end());
  return ds;
}

PoolState seed_labeled_set(const SplitDataset& ds, std::size_t per_class, const Stream& data_stream) {
  if (per_class == 0) throw ConfigError("seed set size per class must be >= 1");
  std::vector<std::size_t> pool = ds.pool_idx();
  std::vector<std::vector<std::size_t>> by_class(ds.n_classes);
  for (std::size_t i : pool) by_class[ds.labels[i]].push_back(i);
  Stream rng = data_stream;
  std::vector<std::size_t> labeled;
  for (int c = 0; c < ds.n_classes; ++c) {
    const auto& members = by_class[c];
    if (members.size() < per_class)
      throw ConfigError(ds.name + ": class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                        " pool points, seed set needs " + std::to_string(per_class));
    for (std::size_t p : rng.sample_without_replacement(members.size(), per_class)) labeled.push_back(members[p]);
  }
  std::vector<std::size_t> sorted_labeled = labeled;
  std::sort(sorted_labeled.begin(), sorted_labeled.end());
  std::vector<std::size_t> unlabeled;
  std::set_difference(pool.begin(), pool.end(), sorted_labeled.begin(), sorted_labeled.end(),
                      std::back_inserter(unlabeled));
  return PoolState(std::move(labeled), std::move(unlabeled));
}

}  // namespace albench
