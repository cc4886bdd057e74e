#pragma once

// Round metrics (clean accuracy, backdoor success, robustness), the
// empirical aggregation error against the benign mean, its closed-form
// bound, the multi-round propagation bound, and gradient-noise /
// heterogeneity estimation used to feed those bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "alignins/data.hpp"
#include "alignins/defenses.hpp"
#include "alignins/model.hpp"
#include "alignins/rng.hpp"
#include "alignins/vec.hpp"

namespace alignins {

struct RoundMetrics {
  int round = 0;
  double ma = 0.0;  // clean test accuracy, percent
  double ba = 0.0;  // triggered samples landing on the target label, percent
  double ra = 0.0;  // triggered samples still classified correctly, percent
  int selected_true_pos = 0;   // benign clients kept by the filter
  int selected_false_pos = 0;  // malicious clients kept by the filter
  double empirical_kappa = 0.0;
  double clip_threshold = 0.0;
  std::optional<double> prop_error;
};

struct HeterogeneityEstimate {
  double nu_bar = 0.0;    // mean squared mini-batch gradient noise
  double zeta_bar = 0.0;  // mean squared divergence from the average client gradient
};

struct TaskAccuracy {
  double ma = 0.0;
  double ba = 0.0;
  double ra = 0.0;
};

// MA over the clean test set; BA/RA over the non-target-class samples with
// the full trigger stamped in. BA counts predictions flipped to the target
// label, RA counts predictions that still hit the true label.
inline TaskAccuracy evaluate(const MlpModel& model, const LabeledDataset& clean_test,
                             const TriggerSpec& trigger) {
  validate_dataset(clean_test, "evaluate");
  const auto clean_pred = model.predict_labels(clean_test);
  std::size_t clean_hits = 0;
  for (std::size_t i = 0; i < clean_pred.size(); ++i)
    if (clean_pred[i] == clean_test.labels[i]) ++clean_hits;

  const auto triggered = make_backdoor_testset(clean_test, trigger);
  const auto trig_pred = model.predict_labels(triggered);
  std::size_t to_target = 0, still_true = 0;
  for (std::size_t i = 0; i < trig_pred.size(); ++i) {
    if (trig_pred[i] == trigger.target_label) ++to_target;
    if (trig_pred[i] == triggered.labels[i]) ++still_true;
  }

  const double n_clean = static_cast<double>(clean_test.size());
  const double n_trig = static_cast<double>(triggered.size());
  return {100.0 * static_cast<double>(clean_hits) / n_clean,
          100.0 * static_cast<double>(to_target) / n_trig,
          100.0 * static_cast<double>(still_true) / n_trig};
}

// Squared L2 error of an aggregate against the truth-benign mean. Computing
// the reference via fedavg_oracle keeps the summation order identical, so an
// oracle aggregate measures exactly zero.
inline double empirical_kappa(const ParamVector& aggregated,
                              std::span<const ClientUpdate> updates) {
  const auto benign_mean = fedavg_oracle(updates);
  return squared_distance(aggregated.span(), benign_mean.span());
}

inline double empirical_kappa(const AggregationOutcome& outcome,
                              std::span<const ClientUpdate> updates) {
  return empirical_kappa(outcome.aggregated, updates);
}

// (1 + m/(n-2m)) * ((2/eps + 1)(2 nu + zeta) + 8 c^2), valid for
// m < n/(3+eps).
inline double kappa_bound(std::size_t n, std::size_t m, double epsilon,
                          double nu_bar, double zeta_bar, double clip_c) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("kappa_bound: epsilon must be positive");
  if (nu_bar < 0.0 || zeta_bar < 0.0)
    throw std::invalid_argument("kappa_bound: nu_bar and zeta_bar must be nonnegative");
  if (n == 0 || !(static_cast<double>(m) < static_cast<double>(n) / (3.0 + epsilon)))
    throw std::invalid_argument("kappa_bound: requires 0 <= m < n/(3+epsilon)");
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return (1.0 + mm / (nn - 2.0 * mm)) *
         ((2.0 / epsilon + 1.0) * (2.0 * nu_bar + zeta_bar) +
          8.0 * clip_c * clip_c);
}

// phi(T) * (2 + 3 mu^2)^phi(T) * (kappa + 2 nu), phi(T) = sum of squared
// per-round rates. Loose by construction; reported alongside measured drift.
inline double propagation_error_bound(std::size_t T, std::span<const double> alphas,
                                      double mu, double kappa, double nu_bar) {
  if (T < 1)
    throw std::invalid_argument("propagation_error_bound: T must be at least 1");
  if (alphas.size() < T)
    throw std::invalid_argument("propagation_error_bound: need a rate for every round");
  double phi = 0.0;
  for (std::size_t t = 0; t < T; ++t) phi += alphas[t] * alphas[t];
  return phi * std::pow(2.0 + 3.0 * mu * mu, phi) * (kappa + 2.0 * nu_bar);
}

// nu_bar: per client, mean squared L2 deviation of `probes` seeded
// mini-batch gradients from the client's full-shard gradient, averaged over
// clients. zeta_bar: mean squared L2 distance of the full-shard gradients
// from their average. Both measured at the given model.
inline HeterogeneityEstimate estimate_nu_zeta(
    const MlpModel& model, const LabeledDataset& data,
    std::span<const std::vector<std::size_t>> client_shards,
    std::size_t batch_size, std::size_t probes, std::uint64_t seed) {
  if (client_shards.size() < 2)
    throw std::invalid_argument("estimate_nu_zeta: need at least 2 clients");
  if (probes < 2)
    throw std::invalid_argument("estimate_nu_zeta: probes must be at least 2");
  if (batch_size == 0)
    throw std::invalid_argument("estimate_nu_zeta: batch_size must be positive");
  for (const auto& shard : client_shards)
    if (shard.empty())
      throw std::invalid_argument("estimate_nu_zeta: empty client shard");

  const std::size_t n = client_shards.size();
  const std::size_t d = model.dimension();

  std::vector<std::vector<double>> full;
  full.reserve(n);
  for (const auto& shard : client_shards) full.push_back(model.gradient(data, shard));

  std::vector<double> avg(d, 0.0);
  for (const auto& g : full)
    for (std::size_t j = 0; j < d; ++j) avg[j] += g[j];
  for (auto& x : avg) x /= static_cast<double>(n);

  double zeta = 0.0;
  for (const auto& g : full) zeta += squared_distance(g, avg);
  zeta /= static_cast<double>(n);

  double nu = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& shard = client_shards[i];
    const std::size_t bsz = std::min(batch_size, shard.size());
    double acc = 0.0;
    for (std::size_t p = 0; p < probes; ++p) {
      Rng r(derive_seed(seed, i, p));
      auto pick = r.sample_without_replacement(shard.size(), bsz);
      // only the set matters; sorting keeps shard order, so a full-size
      // batch reproduces the full-shard gradient bit for bit
      std::sort(pick.begin(), pick.end());
      std::vector<std::size_t> batch(bsz);
      for (std::size_t b = 0; b < bsz; ++b) batch[b] = shard[pick[b]];
      acc += squared_distance(model.gradient(data, batch), full[i]);
    }
    nu += acc / static_cast<double>(probes);
  }
  nu /= static_cast<double>(n);

  return {nu, zeta};
}

}  // namespace alignins
