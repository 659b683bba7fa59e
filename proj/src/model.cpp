#include "albench/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "albench/errors.hpp"
#include "json.hpp"

namespace albench {

void ClassifierSpec::validate() const {
  if (input_dim < 1) throw ConfigError("classifier input_dim must be >= 1");
  if (n_classes < 1) throw ConfigError("classifier n_classes must be >= 1");
  for (std::size_t h : hidden) {
    if (h < 1) throw ConfigError("classifier hidden sizes must be >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("classifier dropout must lie in [0, 1)");
}

std::size_t ClassifierSpec::parameter_count() const {
  std::size_t count = 0;
  std::size_t in = input_dim;
  for (std::size_t h : hidden) {
    count += in * h + h;
    in = h;
  }
  return count + in * n_classes + n_classes;
}

Classifier::Classifier(ClassifierSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t in = spec_.input_dim;
  std::size_t offset = 0;
  auto add = [&](std::size_t out) {
    layers_.push_back(Layer{in, out, offset, offset + in * out});
    offset += in * out + out;
    in = out;
  };
  for (std::size_t h : spec_.hidden) add(h);
  add(spec_.n_classes);
  params_.assign(offset, 0.0);
}

// ---------------------------------------------------------------------------

namespace {

struct ForwardPass {
  std::vector<Matrix> inputs;  // input of each affine layer after dropout
  std::vector<Matrix> masks;   // per layer; empty matrix when no dropout
  std::vector<Matrix> pre;     // affine outputs
  Matrix probs;
};

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
}

Matrix affine(const Classifier& model, std::size_t layer, const Matrix& a) {
  const auto& l = model.layers()[layer];
  const auto& p = model.parameters();
  Matrix z(a.rows(), l.out);
  for (std::size_t n = 0; n < a.rows(); ++n) {
    auto in = a.row(n);
    auto out = z.row(n);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* w = p.data() + l.weight_offset + o * l.in;
      double s = p[l.bias_offset + o];
      for (std::size_t i = 0; i < l.in; ++i) s += w[i] * in[i];
      out[o] = s;
    }
  }
  return z;
}

// Draws an inverted-dropout mask (0 or 1/(1-p)) and applies it in place.
Matrix apply_dropout(Matrix& a, double rate, Stream& rng) {
  Matrix mask(a.rows(), a.cols());
  const double keep_scale = 1.0 / (1.0 - rate);
  auto& md = mask.data();
  auto& ad = a.data();
  for (std::size_t k = 0; k < md.size(); ++k) {
    md[k] = rng.bernoulli(rate) ? 0.0 : keep_scale;
    ad[k] *= md[k];
  }
  return mask;
}

ForwardPass run_forward(const Classifier& model, const Matrix& x, bool dropout_active, Stream* rng, bool keep) {
  const auto& spec = model.spec();
  if (x.cols() != spec.input_dim)
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols()) + " columns, model expects " +
                                std::to_string(spec.input_dim));
  const bool drop = dropout_active && spec.dropout > 0.0;
  if (drop && rng == nullptr) throw std::invalid_argument("forward: dropout requires a mask stream");
  ForwardPass pass;
  Matrix a = x;
  const std::size_t n_layers = model.layers().size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Matrix mask;
    if (drop) mask = apply_dropout(a, spec.dropout, *rng);
    Matrix z = affine(model, l, a);
    if (keep) {
      pass.inputs.push_back(std::move(a));
      pass.masks.push_back(std::move(mask));
    }
    if (l + 1 < n_layers) {
      Matrix h = z;
      for (double& v : h.data()) v = std::max(v, 0.0);
      a = std::move(h);
      if (keep) pass.pre.push_back(std::move(z));
    } else {
      if (keep) pass.pre.push_back(z);
      softmax_rows(z);
      pass.probs = std::move(z);
    }
  }
  return pass;
}

}  // namespace

Matrix forward(const Classifier& model, const Matrix& x, ForwardMode mode, Stream* masks) {
  return run_forward(model, x, mode != ForwardMode::Eval, masks, false).probs;
}

Matrix penultimate(const Classifier& model, const Matrix& x) {
  if (x.cols() != model.spec().input_dim) throw std::invalid_argument("penultimate: input dimension mismatch");
  Matrix a = x;
  const std::size_t n_hidden = model.layers().size() - 1;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    a = affine(model, l, a);
    for (double& v : a.data()) v = std::max(v, 0.0);
  }
  return a;
}

double loss_and_gradient(const Classifier& model, const Matrix& x, std::span<const int> y, std::vector<double>& grad,
                         Stream* masks) {
  if (x.rows() != y.size()) throw std::invalid_argument("loss_and_gradient: row/label count mismatch");
  if (x.rows() == 0) throw std::invalid_argument("loss_and_gradient: empty batch");
  ForwardPass pass = run_forward(model, x, masks != nullptr, masks, true);
  const auto& params = model.parameters();
  const auto& layers = model.layers();
  const std::size_t n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  grad.assign(params.size(), 0.0);

  // Log-softmax of the final logits keeps the loss finite for confident rows.
  double loss = 0.0;
  const Matrix& logits = pass.pre.back();
  for (std::size_t r = 0; r < n; ++r) {
    auto row = logits.row(r);
    double mx = *std::max_element(row.begin(), row.end());
    double lse = 0.0;
    for (double v : row) lse += std::exp(v - mx);
    loss += (mx + std::log(lse)) - row[static_cast<std::size_t>(y[r])];
  }
  loss *= inv_n;

  Matrix delta = pass.probs;
  for (std::size_t r = 0; r < n; ++r) {
    delta(r, static_cast<std::size_t>(y[r])) -= 1.0;
    for (double& v : delta.row(r)) v *= inv_n;
  }

  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& l = layers[li];
    const Matrix& a = pass.inputs[li];
    for (std::size_t r = 0; r < n; ++r) {
      auto d = delta.row(r);
      auto in = a.row(r);
      for (std::size_t o = 0; o < l.out; ++o) {
        double* gw = grad.data() + l.weight_offset + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) gw[i] += d[o] * in[i];
        grad[l.bias_offset + o] += d[o];
      }
    }
    if (li == 0) break;
    Matrix next(n, l.in);
    const Matrix& mask = pass.masks[li];
    const Matrix& z_prev = pass.pre[li - 1];
    for (std::size_t r = 0; r < n; ++r) {
      auto d = delta.row(r);
      auto out = next.row(r);
      for (std::size_t o = 0; o < l.out; ++o) {
        const double* w = params.data() + l.weight_offset + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) out[i] += d[o] * w[i];
      }
      for (std::size_t i = 0; i < l.in; ++i) {
        if (!mask.empty()) out[i] *= mask(r, i);
        if (z_prev(r, i) <= 0.0) out[i] = 0.0;
      }
    }
    delta = std::move(next);
  }
  return loss;
}

double mean_loss(const Classifier& model, const Examples& ex) {
  if (ex.size() == 0) throw std::invalid_argument("mean_loss: empty set");
  Matrix p = forward(model, ex.x);
  double loss = 0.0;
  for (std::size_t r = 0; r < ex.size(); ++r) {
    // Clamp at the smallest positive double so a saturated softmax gives a large finite loss.
    loss -= std::log(std::max(p(r, static_cast<std::size_t>(ex.y[r])), 1e-300));
  }
  return loss / static_cast<double>(ex.size());
}

std::vector<int> predict(const Classifier& model, const Matrix& x) {
  Matrix p = forward(model, x);
  std::vector<int> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = p.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double evaluate(const Classifier& model, const Examples& ex) {
  if (ex.size() == 0) throw std::invalid_argument("evaluate: empty example set");
  auto pred = predict(model, ex.x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == ex.y[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(ex.size());
}

// ---------------------------------------------------------------------------

OptimizerState make_optimizer(const OptimizerConfig& config, std::size_t n_params) {
  OptimizerState s;
  s.config = config;
  s.first_moment.assign(n_params, 0.0);
  s.second_moment.assign(n_params, 0.0);
  return s;
}

void optimizer_step(std::vector<double>& params, std::span<const double> grad, OptimizerState& s) {
  const auto& c = s.config;
  if (grad.size() != params.size() || s.first_moment.size() != params.size())
    throw std::invalid_argument("optimizer_step: shape mismatch");
  s.step += 1;
  const auto t = static_cast<double>(s.step);
  const double bias2 = 1.0 - std::pow(c.beta2, t);

  if (c.kind == OptimizerKind::Adam) {
    const double bias1 = 1.0 - std::pow(c.beta1, t);
    const double step_size = c.learning_rate / bias1;
    for (std::size_t k = 0; k < params.size(); ++k) {
      double g = grad[k] + c.weight_decay * params[k];
      s.first_moment[k] = c.beta1 * s.first_moment[k] + (1.0 - c.beta1) * g;
      s.second_moment[k] = c.beta2 * s.second_moment[k] + (1.0 - c.beta2) * g * g;
      double denom = std::sqrt(s.second_moment[k] / bias2) + c.epsilon;
      params[k] -= step_size * s.first_moment[k] / denom;
    }
    return;
  }

  // Nesterov variant with the 0.96^(t * psi) momentum warm-up schedule.
  const double mu = c.beta1 * (1.0 - 0.5 * std::pow(0.96, t * c.momentum_decay));
  const double mu_next = c.beta1 * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * c.momentum_decay));
  s.mu_product *= mu;
  const double mu_product_next = s.mu_product * mu_next;
  for (std::size_t k = 0; k < params.size(); ++k) {
    double g = grad[k] + c.weight_decay * params[k];
    s.first_moment[k] = c.beta1 * s.first_moment[k] + (1.0 - c.beta1) * g;
    s.second_moment[k] = c.beta2 * s.second_moment[k] + (1.0 - c.beta2) * g * g;
    double denom = std::sqrt(s.second_moment[k] / bias2) + c.epsilon;
    params[k] -= c.learning_rate * (1.0 - mu) / (1.0 - s.mu_product) * g / denom;
    params[k] -= c.learning_rate * mu_next / (1.0 - mu_product_next) * s.first_moment[k] / denom;
  }
}

ModelAndOptimizer init_classifier(const ClassifierSpec& spec, const OptimizerConfig& opt, Stream& model_stream) {
  Classifier model(spec);
  auto& p = model.parameters();
  for (const auto& l : model.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (std::size_t k = 0; k < l.in * l.out; ++k) p[l.weight_offset + k] = model_stream.uniform(-bound, bound);
  }
  OptimizerState state = make_optimizer(opt, p.size());
  return {std::move(model), std::move(state)};
}

// ---------------------------------------------------------------------------

void train_epoch(Classifier& model, OptimizerState& opt, const Examples& labeled, std::size_t batch_size,
                 Stream& data_stream, Stream& model_stream) {
  const std::size_t n = labeled.size();
  if (n == 0) throw std::invalid_argument("train_epoch: empty labeled set");
  if (batch_size == 0) throw std::invalid_argument("train_epoch: batch size must be >= 1");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  data_stream.shuffle(order);
  std::vector<double> grad;
  std::vector<int> y;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::size_t end = std::min(n, start + batch_size);
    std::span<const std::size_t> batch(order.data() + start, end - start);
    Matrix xb = labeled.x.select_rows(batch);
    y.clear();
    for (std::size_t i : batch) y.push_back(labeled.y[i]);
    loss_and_gradient(model, xb, y, grad, &model_stream);
    optimizer_step(model.parameters(), grad, opt);
  }
}

TrainResult retrain_finetune(Classifier& model, OptimizerState& opt, const Examples& labeled, const Examples& val,
                             std::size_t max_epochs, std::size_t batch_size, Stream& data_stream, Stream& model_stream) {
  if (max_epochs < 1) throw std::invalid_argument("retrain: max_epochs must be >= 1");
  if (labeled.size() == 0) throw std::invalid_argument("retrain: empty labeled set");
  EarlyStopping stopper;
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    train_epoch(model, opt, labeled, batch_size, data_stream, model_stream);
    result.epochs = epoch;
    if (val.size() == 0) continue;
    result.val_loss = mean_loss(model, val);
    if (!stopper.update(result.val_loss)) break;
  }
  result.val_accuracy = val.size() == 0 ? 0.0 : evaluate(model, val);
  return result;
}

TrainResult retrain_scratch(Classifier& model, OptimizerState& opt, const Examples& labeled, const Examples& val,
                            std::size_t max_epochs, std::size_t batch_size, Stream& data_stream, Stream& model_stream) {
  if (max_epochs < 1) throw std::invalid_argument("retrain: max_epochs must be >= 1");
  auto fresh = init_classifier(model.spec(), opt.config, model_stream);
  model = std::move(fresh.model);
  opt = std::move(fresh.optimizer);
  return retrain_finetune(model, opt, labeled, val, max_epochs, batch_size, data_stream, model_stream);
}

TrainResult retrain(const TrainingConfig& cfg, Classifier& model, OptimizerState& opt, const Examples& labeled,
                    const Examples& val, Stream& data_stream, Stream& model_stream) {
  if (cfg.protocol == TrainingProtocol::FromScratch)
    return retrain_scratch(model, opt, labeled, val, cfg.max_epochs, cfg.batch_size, data_stream, model_stream);
  return retrain_finetune(model, opt, labeled, val, cfg.max_epochs, cfg.batch_size, data_stream, model_stream);
}

double full_dataset_accuracy(const ClassifierSpec& spec, const SplitDataset& ds, const TrainingConfig& cfg,
                             const Stream& data_stream, const Stream& model_stream) {
  Stream data = data_stream.derive("full_dataset");
  Stream model_rng = model_stream.derive("full_dataset");
  auto [model, opt] = init_classifier(spec, cfg.optimizer, model_rng);
  auto pool = ds.pool_idx();
  Examples labeled = ds.examples(pool);
  Examples val = ds.validation_set();
  retrain_scratch(model, opt, labeled, val, cfg.max_epochs, cfg.batch_size, data, model_rng);
  return evaluate(model, ds.test_set());
}

// ---------------------------------------------------------------------------

void save_checkpoint(const Classifier& model, const std::filesystem::path& path) {
  nlohmann::json j;
  const auto& s = model.spec();
  j["input_dim"] = s.input_dim;
  j["n_classes"] = s.n_classes;
  j["hidden"] = s.hidden;
  j["dropout"] = s.dropout;
  j["parameters"] = model.parameters();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

Classifier load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  ClassifierSpec s;
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.n_classes = j.at("n_classes").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  s.dropout = j.at("dropout").get<double>();
  Classifier model(s);
  auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != model.parameters().size())
    throw std::runtime_error("checkpoint " + path.string() + ": parameter count does not match spec");
  model.parameters() = std::move(params);
  return model;
}

}  // namespace albench
