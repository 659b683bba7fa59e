#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "albench/data.hpp"
#include "albench/matrix.hpp"
#include "albench/rng.hpp"

namespace albench {

/// Layer widths of a fully connected classifier. Empty `hidden` is a linear
/// (softmax regression) model. Hidden layers use ReLU. Dropout is applied to
/// the input of every affine layer, so a linear model drops input features.
struct ClassifierSpec {
  std::size_t input_dim = 0;
  std::size_t n_classes = 0;
  std::vector<std::size_t> hidden;
  double dropout = 0.0;

  void validate() const;
  std::size_t parameter_count() const;
  friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

enum class ForwardMode {
  Eval,            // no dropout
  Train,           // dropout masks from the supplied stream
  StochasticEval,  // Monte-Carlo dropout at inference
};

/// Parameters live in one flat vector: for every layer, the weight matrix
/// (out x in, row-major) followed by the bias.
class Classifier {
 public:
  struct Layer {
    std::size_t in;
    std::size_t out;
    std::size_t weight_offset;
    std::size_t bias_offset;
    friend bool operator==(const Layer&, const Layer&) = default;
  };

  explicit Classifier(ClassifierSpec spec);

  const ClassifierSpec& spec() const { return spec_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  double weight(std::size_t layer, std::size_t o, std::size_t i) const {
    const Layer& l = layers_[layer];
    return params_[l.weight_offset + o * l.in + i];
  }
  double bias(std::size_t layer, std::size_t o) const { return params_[layers_[layer].bias_offset + o]; }

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  ClassifierSpec spec_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

/// Row-wise class probabilities. `masks` is required for Train and
/// StochasticEval when dropout > 0 and is ignored otherwise.
Matrix forward(const Classifier& model, const Matrix& x, ForwardMode mode = ForwardMode::Eval, Stream* masks = nullptr);

/// Last hidden layer activations in eval mode; the input itself for a linear model.
Matrix penultimate(const Classifier& model, const Matrix& x);

/// Mean cross-entropy over the batch and its gradient w.r.t. all parameters
/// (same layout as Classifier::parameters()). Dropout masks come from `masks`
/// when it is non-null and dropout > 0.
double loss_and_gradient(const Classifier& model, const Matrix& x, std::span<const int> y, std::vector<double>& grad,
                         Stream* masks = nullptr);

/// Mean cross-entropy in eval mode.
double mean_loss(const Classifier& model, const Examples& ex);

/// Fraction of argmax-correct predictions, dropout inactive. Throws on an
/// empty set.
double evaluate(const Classifier& model, const Examples& ex);

std::vector<int> predict(const Classifier& model, const Matrix& x);

// ---------------------------------------------------------------------------

enum class OptimizerKind { Adam, NAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum_decay = 4e-3;  // NAdam only

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Adaptive-moment state. Weight decay is added to the gradient (L2 coupling).
struct OptimizerState {
  OptimizerConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  double mu_product = 1.0;  // NAdam momentum schedule

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

OptimizerState make_optimizer(const OptimizerConfig& config, std::size_t n_params);
void optimizer_step(std::vector<double>& params, std::span<const double> grad, OptimizerState& state);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights drawn from the model
/// stream in layer order, zero biases, zero moments.
struct ModelAndOptimizer {
  Classifier model;
  OptimizerState optimizer;
};
ModelAndOptimizer init_classifier(const ClassifierSpec& spec, const OptimizerConfig& opt, Stream& model_stream);

// ---------------------------------------------------------------------------

enum class TrainingProtocol { FineTune, FromScratch };

struct TrainingConfig {
  TrainingProtocol protocol = TrainingProtocol::FromScratch;
  std::size_t max_epochs = 200;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer;
};

struct TrainResult {
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  std::size_t epochs = 0;
};

/// Patience-0 early stopping: continue while the loss strictly improves.
class EarlyStopping {
 public:
  /// Records one epoch's validation loss; returns false once training must stop.
  bool update(double loss) {
    if (loss < best_) {
      best_ = loss;
      return true;
    }
    return false;
  }
  double best() const { return best_; }

 private:
  double best_ = INFINITY;
};

/// One pass over `labeled` in minibatches; order from `data_stream`, dropout
/// masks from `model_stream`. The last short batch is kept.
void train_epoch(Classifier& model, OptimizerState& opt, const Examples& labeled, std::size_t batch_size,
                 Stream& data_stream, Stream& model_stream);

/// Continues from the current parameters. At least one epoch, at most
/// `max_epochs`; stops after the first epoch whose validation loss does not
/// improve (that epoch's update is kept). An empty validation set disables
/// early stopping.
TrainResult retrain_finetune(Classifier& model, OptimizerState& opt, const Examples& labeled, const Examples& val,
                             std::size_t max_epochs, std::size_t batch_size, Stream& data_stream, Stream& model_stream);

/// Re-initializes from the model stream, then trains as retrain_finetune.
TrainResult retrain_scratch(Classifier& model, OptimizerState& opt, const Examples& labeled, const Examples& val,
                            std::size_t max_epochs, std::size_t batch_size, Stream& data_stream, Stream& model_stream);

/// Dispatches on the configured protocol.
TrainResult retrain(const TrainingConfig& cfg, Classifier& model, OptimizerState& opt, const Examples& labeled,
                    const Examples& val, Stream& data_stream, Stream& model_stream);

/// Trains from scratch on the whole pool with all labels revealed and returns
/// test accuracy.
double full_dataset_accuracy(const ClassifierSpec& spec, const SplitDataset& ds, const TrainingConfig& cfg,
                             const Stream& data_stream, const Stream& model_stream);

// ---------------------------------------------------------------------------

/// Debug checkpoint: JSON with the spec and the flat parameter array.
void save_checkpoint(const Classifier& model, const std::filesystem::path& path);
Classifier load_checkpoint(const std::filesystem::path& path);

}  // namespace albench
