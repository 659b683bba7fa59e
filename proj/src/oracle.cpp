#include "albench/oracle.hpp"

#include <stdexcept>

#include "albench/errors.hpp"

namespace albench {

Selection acquire_oracle(const AcquisitionContext& ctx, Stream& rng, const OracleConfig& cfg,
                         const OracleAccess& access) {
  if (ctx.unlabeled.empty()) throw std::invalid_argument("oracle: unlabeled pool is empty");
  if (access.test.size() == 0) throw std::invalid_argument("oracle: test set is empty");
  if (cfg.tau < 1) throw ConfigError("oracle: tau must be >= 1");

  const double baseline = evaluate(ctx.model, access.test);
  const std::size_t n_probe = std::min(cfg.tau, ctx.unlabeled.size());
  auto draws = rng.sample_without_replacement(ctx.unlabeled.size(), n_probe);

  // L + {u}: the labeled rows followed by one slot for the candidate.
  const std::size_t n_lab = ctx.labeled.size();
  Examples probe_set{Matrix(n_lab + 1, ctx.features.dim()), std::vector<int>(ctx.labeled_labels.begin(), ctx.labeled_labels.end())};
  for (std::size_t i = 0; i < n_lab; ++i) {
    auto src = ctx.features.row(ctx.labeled[i]);
    std::copy(src.begin(), src.end(), probe_set.x.row(i).begin());
  }
  probe_set.y.push_back(0);

  Selection best;
  bool improved = false;
  double best_acc = baseline;
  double best_probe = -1.0;
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const std::size_t candidate = ctx.unlabeled[draws[k]];
    auto src = ctx.features.row(candidate);
    std::copy(src.begin(), src.end(), probe_set.x.row(n_lab).begin());
    probe_set.y[n_lab] = access.dataset.labels.at(candidate);

    Classifier model = ctx.model;
    OptimizerState opt = ctx.optimizer;
    Stream data = access.data_stream;
    Stream model_rng = access.model_stream;
    retrain(access.training, model, opt, probe_set, access.validation, data, model_rng);
    const double acc = evaluate(model, access.test);
    best_probe = std::max(best_probe, acc);
    if (acc > best_acc) {
      best_acc = acc;
      best = Selection{candidate, acc, false, acc};
      improved = true;
    }
  }
  if (improved) return best;

  Selection fallback = acquire_margin(ctx, rng);
  fallback.fallback = true;
  fallback.probe_accuracy = best_probe;
  return fallback;
}

}  // namespace albench
