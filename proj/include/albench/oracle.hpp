#pragma once

#include <cstddef>
#include <string_view>

#include "albench/acquisition.hpp"
#include "albench/data.hpp"
#include "albench/model.hpp"
#include "albench/rng.hpp"

namespace albench {

struct OracleConfig {
  std::size_t tau = 20;  // candidates probed per iteration
};

/// Privileged handles only the oracle holds: the test set, the annotator
/// (ground-truth labels of the dataset), the validation set and training
/// protocol used by the run, and the run's data/model streams. Probes train on
/// copies of those streams, so the probe for the chosen candidate reproduces
/// the run's next retrain exactly.
struct OracleAccess {
  const SplitDataset& dataset;
  const Examples& test;
  const Examples& validation;
  const TrainingConfig& training;
  const Stream& data_stream;
  const Stream& model_stream;
};

/// Greedy lookahead: probes up to tau unlabeled candidates (drawn without
/// replacement from `rng`), trains a clone on L + {candidate} and keeps the one
/// with the highest test accuracy if it strictly beats the current model.
/// Otherwise falls back to margin sampling. Never mutates the run's model,
/// optimizer or streams.
Selection acquire_oracle(const AcquisitionContext& ctx, Stream& rng, const OracleConfig& cfg,
                         const OracleAccess& access);

class GreedyOracle final : public AcquisitionFunction {
 public:
  GreedyOracle(OracleConfig cfg, OracleAccess access) : cfg_(cfg), access_(access) {}
  std::string_view name() const override { return "oracle"; }
  Selection select(const AcquisitionContext& ctx, Stream& rng) override {
    return acquire_oracle(ctx, rng, cfg_, access_);
  }

 private:
  OracleConfig cfg_;
  OracleAccess access_;
};

}  // namespace albench
