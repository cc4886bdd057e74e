#pragma once

// Randomized property suite for the robustness bound: generate small update
// sets with a known benign/malicious split, run the alignment defense, and
// check that the measured deviation of its output from the benign mean stays
// under kappa_bound whenever enough clients survive filtering.
//
// Used by the kappa-check CLI subcommand, the acceptance suite, and the unit
// tests; everything is seeded and replays exactly.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "alignins/defenses.hpp"
#include "alignins/eval.hpp"
#include "alignins/rng.hpp"
#include "alignins/vec.hpp"

namespace alignins {

enum class KappaAttackStyle { scaled, sign_flipped, principal_aligned };

inline const char* kappa_attack_style_name(KappaAttackStyle s) {
  switch (s) {
    case KappaAttackStyle::scaled: return "scaled";
    case KappaAttackStyle::sign_flipped: return "sign_flipped";
    case KappaAttackStyle::principal_aligned: return "principal_aligned";
  }
  return "?";
}

struct KappaCheckConfig {
  int trials = 200;
  std::size_t n_min = 7, n_max = 20;
  std::size_t d_min = 5, d_max = 50;
  double epsilon = 0.1;
  double lambda = 1.5;  // both filtering radii
  double benign_noise = 0.35;
  double scale_factor = 10.0;
  std::uint64_t seed = 2024;
};

struct KappaTrial {
  std::size_t n = 0, d = 0, m = 0;
  KappaAttackStyle style = KappaAttackStyle::scaled;
  std::size_t n_selected = 0;
  bool precondition_met = false;  // |S| >= n - 2m
  double measured = 0.0;          // || aggregated - benign mean ||^2
  double bound = 0.0;
  bool violated = false;
};

struct KappaCheckReport {
  KappaCheckConfig config;
  std::vector<KappaTrial> trials;
  int violations = 0;
  int precondition_failures = 0;
  bool passed = false;  // zero violations, precondition failures < 20%
};

inline KappaCheckReport run_kappa_check(const KappaCheckConfig& cfg = {}) {
  if (cfg.trials < 1) throw std::invalid_argument("run_kappa_check: trials < 1");
  if (cfg.n_min < 4 || cfg.n_max < cfg.n_min)
    throw std::invalid_argument("run_kappa_check: bad client range");
  if (cfg.d_min < 1 || cfg.d_max < cfg.d_min)
    throw std::invalid_argument("run_kappa_check: bad dimension range");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("run_kappa_check: epsilon <= 0");

  KappaCheckReport rep;
  rep.config = cfg;
  rep.trials.reserve(std::size_t(cfg.trials));

  DefenseSpec defense;
  defense.kind = DefenseKind::alignins;
  defense.align.lambda_c = cfg.lambda;
  defense.align.lambda_s = cfg.lambda;

  for (int t = 0; t < cfg.trials; ++t) {
    Rng r(derive_seed(cfg.seed, std::uint64_t(t)));
    KappaTrial trial;
    trial.n = cfg.n_min + std::size_t(r.below(std::uint64_t(cfg.n_max - cfg.n_min + 1)));
    trial.d = cfg.d_min + std::size_t(r.below(std::uint64_t(cfg.d_max - cfg.d_min + 1)));
    // largest m strictly below n/(3+eps); n >= 7 guarantees at least 1
    std::size_t m_max = 0;
    while (double(m_max + 1) < double(trial.n) / (3.0 + cfg.epsilon)) ++m_max;
    trial.m = 1 + std::size_t(r.below(std::uint64_t(m_max)));
    trial.style = KappaAttackStyle(r.below(3));

    // benign updates scatter around a shared center; the previous global
    // update points the same way so their temporal alignment clusters high
    std::vector<double> center(trial.d);
    for (auto& x : center) x = r.normal();
    const ParamVector theta(center);

    const std::size_t n_benign = trial.n - trial.m;
    std::vector<ClientUpdate> updates;
    updates.reserve(trial.n);
    std::vector<ParamVector> benign;
    benign.reserve(n_benign);
    for (std::size_t i = 0; i < n_benign; ++i) {
      std::vector<double> v(trial.d);
      for (std::size_t j = 0; j < trial.d; ++j)
        v[j] = center[j] + cfg.benign_noise * r.normal();
      benign.emplace_back(std::move(v));
    }

    std::vector<ParamVector> malicious;
    malicious.reserve(trial.m);
    if (trial.style == KappaAttackStyle::principal_aligned) {
      std::vector<UpdateView> views;
      views.reserve(n_benign);
      for (std::size_t i = 0; i < n_benign; ++i)
        views.push_back({int(i), benign[i].span()});
      const auto p = principal_sign(views);
      std::vector<double> norms;
      for (const auto& b : benign) norms.push_back(l2_norm(b.span()));
      const double mag = median(norms);
      for (std::size_t i = 0; i < trial.m; ++i) {
        std::vector<double> v(trial.d);
        for (std::size_t j = 0; j < trial.d; ++j)
          v[j] = double(p.values()[j]) * mag / std::sqrt(double(trial.d));
        malicious.emplace_back(std::move(v));
      }
    } else {
      const double f =
          trial.style == KappaAttackStyle::scaled ? cfg.scale_factor : -1.0;
      for (std::size_t i = 0; i < trial.m; ++i) {
        std::vector<double> v(trial.d);
        for (std::size_t j = 0; j < trial.d; ++j)
          v[j] = f * (center[j] + cfg.benign_noise * r.normal());
        malicious.emplace_back(std::move(v));
      }
    }

    // malicious ids are a random subset, not a prefix
    std::vector<int> ids(trial.n);
    for (std::size_t i = 0; i < trial.n; ++i) ids[i] = int(i);
    r.shuffle(ids);
    for (std::size_t i = 0; i < trial.m; ++i)
      updates.push_back({ids[i], std::move(malicious[i]), true});
    for (std::size_t i = 0; i < n_benign; ++i)
      updates.push_back({ids[trial.m + i], std::move(benign[i]), false});

    const auto out = aggregate(defense, updates, theta, trial.m);
    trial.n_selected = out.selected.size();
    trial.precondition_met = trial.n_selected + 2 * trial.m >= trial.n;
    if (trial.precondition_met) {
      // nu covers mini-batch noise; these updates are drawn directly, so the
      // spread is purely heterogeneity and is measured as such
      const auto benign_mean = fedavg_oracle(updates);
      double zeta = 0.0;
      std::size_t nb = 0;
      for (const auto& u : updates)
        if (!u.truth_is_malicious) {
          zeta += squared_distance(u.delta.span(), benign_mean.span());
          ++nb;
        }
      zeta /= double(nb);
      trial.measured = squared_distance(out.aggregated.span(), benign_mean.span());
      trial.bound = kappa_bound(trial.n, trial.m, cfg.epsilon, 0.0, zeta,
                                out.clip_threshold);
      trial.violated = trial.measured > trial.bound;
      if (trial.violated) ++rep.violations;
    } else {
      ++rep.precondition_failures;
    }
    rep.trials.push_back(trial);
  }

  rep.passed = rep.violations == 0 &&
               double(rep.precondition_failures) < 0.2 * double(cfg.trials);
  return rep;
}

inline std::string kappa_check_summary(const KappaCheckReport& rep) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "trials=%d violations=%d precondition_failures=%d (%.1f%%) -> %s",
                int(rep.trials.size()), rep.violations, rep.precondition_failures,
                100.0 * double(rep.precondition_failures) /
                    double(rep.trials.empty() ? 1 : rep.trials.size()),
                rep.passed ? "pass" : "FAIL");
  return buf;
}

}  // namespace alignins
