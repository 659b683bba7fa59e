#include "albench/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "albench/errors.hpp"
#include "albench/rng.hpp"

namespace albench {

using nlohmann::json;

namespace {

// Reader over one JSON object that reports the dotted path of bad fields and
// rejects keys it was never asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(at(key) + ": missing required field");
    return j_.at(key);
  }

  Section child(const std::string& key) { return Section(raw(key), at(key)); }

  template <typename T>
  T get(const std::string& key) {
    const json& v = raw(key);
    return convert<T>(v, at(key));
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(j_.at(key), at(key));
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(at(key) + ": unknown field");
    }
  }

  template <typename T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0))
        throw ConfigError(where + ": expected a non-negative integer");
      return v.get<T>();
    } else {
      static_assert(std::is_same_v<T, std::vector<std::size_t>>);
      if (!v.is_array()) throw ConfigError(where + ": expected an array of integers");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<std::size_t>(v[i], where + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

DatasetSource parse_source(Section s, const std::filesystem::path& base_dir) {
  DatasetSource src;
  auto type = s.get<std::string>("type");
  if (type == "three_clust") {
    src.kind = DatasetSource::Kind::ThreeClust;
    auto& p = src.three_clust;
    p.n_per_cluster = s.get<std::size_t>("n_per_cluster", p.n_per_cluster);
    p.clean_offset = s.get<double>("clean_offset", p.clean_offset);
    p.poisoned_height = s.get<double>("poisoned_height", p.poisoned_height);
    p.cluster_std = s.get<double>("cluster_std", p.cluster_std);
    if (p.n_per_cluster < 1) throw ConfigError(s.at("n_per_cluster") + ": must be >= 1");
  } else if (type == "diverging_sin") {
    src.kind = DatasetSource::Kind::DivergingSin;
    auto& p = src.diverging_sin;
    p.n_per_class = s.get<std::size_t>("n_per_class", p.n_per_class);
    p.psi = s.get<double>("psi", p.psi);
    p.delta = s.get<double>("delta", p.delta);
    p.sigma = s.get<double>("sigma", p.sigma);
    p.x_min = s.get<double>("x_min", p.x_min);
    p.x_max = s.get<double>("x_max", p.x_max);
    if (p.n_per_class < 1) throw ConfigError(s.at("n_per_class") + ": must be >= 1");
    if (p.sigma < 0.0) throw ConfigError(s.at("sigma") + ": must be >= 0");
  } else if (type == "tabular") {
    src.kind = DatasetSource::Kind::Tabular;
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    src.path = resolve(s.get<std::string>("path"));
    auto fmt = s.get<std::string>("format", "csv");
    if (fmt == "csv") {
      src.format = TabularFormat::DenseCsv;
    } else if (fmt == "libsvm") {
      src.format = TabularFormat::SparseLibsvm;
    } else {
      throw ConfigError(s.at("format") + ": expected \"csv\" or \"libsvm\", got \"" + fmt + "\"");
    }
    if (s.has("test_path")) src.tabular.test_path = resolve(s.get<std::string>("test_path"));
    if (s.has("test_index_path")) src.tabular.test_index_path = resolve(s.get<std::string>("test_index_path"));
    src.tabular.test_fraction = s.get<double>("test_fraction", src.tabular.test_fraction);
    src.tabular.split_seed = s.get<std::uint64_t>("split_seed", src.tabular.split_seed);
    src.tabular.n_features = s.get<std::size_t>("n_features", src.tabular.n_features);
  } else {
    throw ConfigError(s.at("type") + ": unknown dataset source \"" + type + "\"");
  }
  s.finish();
  return src;
}

DatasetConfig parse_dataset(Section s, const std::filesystem::path& base_dir) {
  DatasetConfig d;
  d.name = s.get<std::string>("name");
  d.domain = s.get<std::string>("domain", "default");
  d.source = parse_source(s.child("source"), base_dir);
  d.seed_per_class = s.get<std::size_t>("seed_per_class", d.seed_per_class);
  if (d.seed_per_class < 1) throw ConfigError(s.at("seed_per_class") + ": must be >= 1");
  d.budget = s.get<std::size_t>("budget");
  if (d.budget < 1) throw ConfigError(s.at("budget") + ": must be >= 1");
  d.pilot_budget = s.get<std::size_t>("pilot_budget", d.pilot_budget);
  d.val_fraction = s.get<double>("val_fraction", d.val_fraction);
  if (!(d.val_fraction > 0.0 && d.val_fraction < 1.0)) throw ConfigError(s.at("val_fraction") + ": must lie in (0, 1)");
  if (d.source.kind == DatasetSource::Kind::Tabular) d.source.tabular.min_per_class = d.seed_per_class;

  if (s.has("classifier")) {
    Section c = s.child("classifier");
    d.hidden = c.get<std::vector<std::size_t>>("hidden", {});
    d.dropout = c.get<double>("dropout", 0.0);
    if (!(d.dropout >= 0.0 && d.dropout < 1.0)) throw ConfigError(c.at("dropout") + ": must lie in [0, 1)");
    for (std::size_t h : d.hidden) {
      if (h < 1) throw ConfigError(c.at("hidden") + ": widths must be >= 1");
    }
    c.finish();
  }
  if (s.has("optimizer")) {
    Section o = s.child("optimizer");
    auto& oc = d.training.optimizer;
    auto algo = o.get<std::string>("algorithm", "adam");
    if (algo == "adam") {
      oc.kind = OptimizerKind::Adam;
    } else if (algo == "nadam") {
      oc.kind = OptimizerKind::NAdam;
    } else {
      throw ConfigError(o.at("algorithm") + ": expected \"adam\" or \"nadam\", got \"" + algo + "\"");
    }
    oc.learning_rate = o.get<double>("learning_rate", oc.learning_rate);
    oc.weight_decay = o.get<double>("weight_decay", oc.weight_decay);
    d.training.batch_size = o.get<std::size_t>("batch_size", d.training.batch_size);
    if (oc.learning_rate < 0.0) throw ConfigError(o.at("learning_rate") + ": must be >= 0");
    if (d.training.batch_size < 1) throw ConfigError(o.at("batch_size") + ": must be >= 1");
    o.finish();
  }
  if (s.has("training")) {
    Section t = s.child("training");
    auto protocol = t.get<std::string>("protocol", "scratch");
    if (protocol == "scratch") {
      d.training.protocol = TrainingProtocol::FromScratch;
      d.training.max_epochs = 200;
    } else if (protocol == "finetune") {
      d.training.protocol = TrainingProtocol::FineTune;
      d.training.max_epochs = 50;
    } else {
      throw ConfigError(t.at("protocol") + ": expected \"scratch\" or \"finetune\", got \"" + protocol + "\"");
    }
    d.training.max_epochs = t.get<std::size_t>("max_epochs", d.training.max_epochs);
    if (d.training.max_epochs < 1) throw ConfigError(t.at("max_epochs") + ": must be >= 1");
    t.finish();
  }
  s.finish();
  return d;
}

StrategyParams parse_strategy_params(Section s) {
  StrategyParams p;
  p.subsample = s.get<std::size_t>("subsample", p.subsample);
  p.dropout_trials = s.get<std::size_t>("dropout_trials", p.dropout_trials);
  p.min_cluster_size = s.get<std::size_t>("min_cluster_size", p.min_cluster_size);
  p.max_clusters = s.get<std::size_t>("max_clusters", p.max_clusters);
  p.knn = s.get<std::size_t>("knn", p.knn);
  p.kmeans_restarts = s.get<std::size_t>("kmeans_restarts", p.kmeans_restarts);
  p.oracle_tau = s.get<std::size_t>("tau", p.oracle_tau);
  if (p.dropout_trials < 1) throw ConfigError(s.at("dropout_trials") + ": must be >= 1");
  if (p.max_clusters < 1) throw ConfigError(s.at("max_clusters") + ": must be >= 1");
  if (p.kmeans_restarts < 1) throw ConfigError(s.at("kmeans_restarts") + ": must be >= 1");
  if (p.oracle_tau < 1) throw ConfigError(s.at("tau") + ": must be >= 1");
  s.finish();
  return p;
}

}  // namespace

StrategyParams ExperimentConfig::params_for(const std::string& algorithm) const {
  auto it = algorithm_params.find(algorithm);
  return it == algorithm_params.end() ? StrategyParams{} : it->second;
}

const DatasetConfig& ExperimentConfig::dataset(const std::string& name) const {
  for (const auto& d : datasets) {
    if (d.name == name) return d;
  }
  throw ConfigError("dataset \"" + name + "\" is not in the config");
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  Section root(doc, "");
  ExperimentConfig cfg;
  if (root.has("seeds")) {
    Section s = root.child("seeds");
    cfg.seeds.omega = s.get<std::uint64_t>("omega", cfg.seeds.omega);
    cfg.seeds.data = s.get<std::uint64_t>("data", cfg.seeds.data);
    cfg.seeds.model = s.get<std::uint64_t>("model", cfg.seeds.model);
    s.finish();
  }
  cfg.restarts = root.get<std::size_t>("restarts", cfg.restarts);
  if (cfg.restarts < 1) throw ConfigError("restarts: must be >= 1");
  cfg.workers = root.get<std::size_t>("workers", cfg.workers);

  const json& algos = root.raw("algorithms");
  if (!algos.is_array() || algos.empty()) throw ConfigError("algorithms: expected a non-empty array of names");
  for (std::size_t i = 0; i < algos.size(); ++i) {
    auto name = Section::convert<std::string>(algos[i], "algorithms[" + std::to_string(i) + "]");
    if (!is_known_strategy(name))
      throw ConfigError("algorithms[" + std::to_string(i) + "]: unknown algorithm \"" + name + "\"");
    if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), name) != cfg.algorithms.end())
      throw ConfigError("algorithms[" + std::to_string(i) + "]: duplicate algorithm \"" + name + "\"");
    cfg.algorithms.push_back(name);
  }

  if (root.has("algorithm_params")) {
    const json& ap = root.raw("algorithm_params");
    if (!ap.is_object()) throw ConfigError("algorithm_params: expected an object");
    for (const auto& [name, body] : ap.items()) {
      if (!is_known_strategy(name)) throw ConfigError("algorithm_params." + name + ": unknown algorithm");
      cfg.algorithm_params[name] = parse_strategy_params(Section(body, "algorithm_params." + name));
    }
  }

  if (root.has("budget_rule")) {
    Section b = root.child("budget_rule");
    auto& r = cfg.budget_rule;
    r.target = b.get<double>("target", r.target);
    r.improve_eps = b.get<double>("improve_eps", r.improve_eps);
    r.check_window = b.get<double>("check_window", r.check_window);
    r.min_window = b.get<std::size_t>("min_window", r.min_window);
    if (!(r.check_window > 0.0 && r.check_window <= 1.0)) throw ConfigError("budget_rule.check_window: must lie in (0, 1]");
    b.finish();
  }

  const json& ds = root.raw("datasets");
  if (!ds.is_array() || ds.empty()) throw ConfigError("datasets: expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto d = parse_dataset(Section(ds[i], "datasets[" + std::to_string(i) + "]"), base_dir);
    if (!names.insert(d.name).second) throw ConfigError("datasets[" + std::to_string(i) + "].name: duplicate dataset");
    cfg.datasets.push_back(std::move(d));
  }
  root.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

std::string to_string(TrainingProtocol p) { return p == TrainingProtocol::FromScratch ? "scratch" : "finetune"; }
std::string to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "nadam"; }

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["seeds"] = {{"omega", cfg.seeds.omega}, {"data", cfg.seeds.data}, {"model", cfg.seeds.model}};
  j["restarts"] = cfg.restarts;
  j["workers"] = cfg.workers;
  j["algorithms"] = cfg.algorithms;
  j["budget_rule"] = {{"target", cfg.budget_rule.target},
                      {"improve_eps", cfg.budget_rule.improve_eps},
                      {"check_window", cfg.budget_rule.check_window},
                      {"min_window", cfg.budget_rule.min_window}};
  json ap = json::object();
  for (const auto& name : cfg.algorithms) {
    StrategyParams p = cfg.params_for(name);
    ap[name] = {{"subsample", p.subsample > 0 ? p.subsample : default_subsample(name)},
                {"dropout_trials", p.dropout_trials},
                {"min_cluster_size", p.min_cluster_size},
                {"max_clusters", p.max_clusters},
                {"knn", p.knn},
                {"kmeans_restarts", p.kmeans_restarts},
                {"tau", p.oracle_tau}};
  }
  j["algorithm_params"] = ap;
  json datasets = json::array();
  for (const auto& d : cfg.datasets) {
    json src;
    switch (d.source.kind) {
      case DatasetSource::Kind::ThreeClust: {
        const auto& p = d.source.three_clust;
        src = {{"type", "three_clust"},
               {"n_per_cluster", p.n_per_cluster},
               {"clean_offset", p.clean_offset},
               {"poisoned_height", p.poisoned_height},
               {"cluster_std", p.cluster_std}};
        break;
      }
      case DatasetSource::Kind::DivergingSin: {
        const auto& p = d.source.diverging_sin;
        src = {{"type", "diverging_sin"}, {"n_per_class", p.n_per_class}, {"psi", p.psi}, {"delta", p.delta},
               {"sigma", p.sigma},        {"x_min", p.x_min},             {"x_max", p.x_max}};
        break;
      }
      case DatasetSource::Kind::Tabular: {
        const auto& t = d.source.tabular;
        src = {{"type", "tabular"},
               {"path", d.source.path.string()},
               {"format", d.source.format == TabularFormat::DenseCsv ? "csv" : "libsvm"},
               {"test_fraction", t.test_fraction},
               {"split_seed", t.split_seed},
               {"n_features", t.n_features}};
        if (t.test_path) src["test_path"] = t.test_path->string();
        if (t.test_index_path) src["test_index_path"] = t.test_index_path->string();
        break;
      }
    }
    const auto& o = d.training.optimizer;
    datasets.push_back({{"name", d.name},
                        {"domain", d.domain},
                        {"source", src},
                        {"seed_per_class", d.seed_per_class},
                        {"budget", d.budget},
                        {"pilot_budget", d.pilot_budget},
                        {"val_fraction", d.val_fraction},
                        {"classifier", {{"hidden", d.hidden}, {"dropout", d.dropout}}},
                        {"optimizer",
                         {{"algorithm", to_string(o.kind)},
                          {"learning_rate", o.learning_rate},
                          {"weight_decay", o.weight_decay},
                          {"batch_size", d.training.batch_size}}},
                        {"training", {{"protocol", to_string(d.training.protocol)}, {"max_epochs", d.training.max_epochs}}}});
  }
  j["datasets"] = datasets;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

}  // namespace albench
