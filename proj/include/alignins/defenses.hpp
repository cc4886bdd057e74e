#pragma once

// Aggregation rules. The centerpiece is alignins(), which filters client
// updates by two alignment statistics before averaging:
//
//   TDA   omega_i = cos(delta_i, theta)        update vs. global model
//   MPSA  rho_i   = top-k sign agreement of delta_i with the principal sign
//
// Both statistics are converted to median-centered z-scores; clients within
// radius lambda_c (TDA) and lambda_s (MPSA) form the trusted set S, whose
// updates are norm-clipped to the median norm of S and averaged.
//
// Baselines: fedavg, fedavg_oracle (truth-flag oracle), multi_krum, RFA
// (smoothed Weiszfeld geometric median), RLR (sign-vote learning-rate
// flipping) and Foolsgold (pairwise-similarity re-weighting).
//
// Conventions shared by every rule here:
//   * Inputs are canonicalized to ascending client id before any arithmetic,
//     so results are bit-identical under permutation of the input.
//   * Score arrays in AggregationOutcome follow that ascending-id order.
//   * Rules see UpdateView, which carries no ground-truth flag; only
//     fedavg_oracle takes full ClientUpdate records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignins/vec.hpp"

namespace alignins {

struct ClientUpdate {
  int client_id;
  ParamVector delta;
  bool truth_is_malicious;  // evaluation-only; stripped before defenses run
};

// The defense-facing face of a ClientUpdate: id and coordinates, nothing else.
struct UpdateView {
  int client_id;
  std::span<const double> delta;
};

inline std::vector<UpdateView> defense_views(std::span<const ClientUpdate> updates) {
  std::vector<UpdateView> v;
  v.reserve(updates.size());
  for (const auto& u : updates) v.push_back({u.client_id, u.delta.span()});
  return v;
}

struct AlignInsConfig {
  double lambda_c = 1.0;   // TDA filtering radius
  double lambda_s = 1.0;   // MPSA filtering radius
  double k_fraction = 0.3; // top-k mask size as a fraction of d
};

struct AggregationOutcome {
  ParamVector aggregated;
  std::vector<int> selected;     // client ids in S, ascending
  std::vector<double> tda;       // omega_i, ascending-id order (alignins only)
  std::vector<double> mpsa;      // rho_i
  std::vector<double> mz_tda;    // lambda_{i,c}
  std::vector<double> mz_mpsa;   // lambda_{i,s}
  double clip_threshold = 0.0;   // c
  bool flagged = false;          // degenerate round (empty S, fallback path)
};

namespace detail {

inline std::vector<UpdateView> sorted_views(std::span<const UpdateView> updates,
                                            const char* where) {
  if (updates.empty())
    throw std::invalid_argument(std::string(where) + ": no updates");
  std::vector<UpdateView> v(updates.begin(), updates.end());
  std::sort(v.begin(), v.end(),
            [](const UpdateView& a, const UpdateView& b) { return a.client_id < b.client_id; });
  const std::size_t d = v.front().delta.size();
  if (d == 0) throw std::invalid_argument(std::string(where) + ": zero-dimensional update");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].delta.size() != d)
      throw std::invalid_argument(std::string(where) + ": update dimension mismatch");
    if (i > 0 && v[i].client_id == v[i - 1].client_id)
      throw std::invalid_argument(std::string(where) + ": duplicate client id");
  }
  return v;
}

inline ParamVector mean_of(const std::vector<UpdateView>& v) {
  const std::size_t d = v.front().delta.size();
  std::vector<double> acc(d, 0.0);
  for (const auto& u : v)
    for (std::size_t j = 0; j < d; ++j) acc[j] += u.delta[j];
  const double n = static_cast<double>(v.size());
  for (auto& x : acc) x /= n;
  return ParamVector(std::move(acc));
}

}  // namespace detail

// p = sgn(sum_i sgn(delta_i)), coordinate-wise; exact vote ties give 0.
inline SignVector principal_sign(std::span<const UpdateView> updates) {
  const auto v = detail::sorted_views(updates, "principal_sign");
  const std::size_t d = v.front().delta.size();
  std::vector<long> sums(d, 0);
  for (const auto& u : v)
    for (std::size_t j = 0; j < d; ++j) sums[j] += sgn(u.delta[j]);
  std::vector<std::int8_t> out(d);
  for (std::size_t j = 0; j < d; ++j)
    out[j] = sums[j] > 0 ? 1 : (sums[j] < 0 ? -1 : 0);
  return SignVector(std::move(out));
}

// omega_i = cos(delta_i, theta); a zero-norm update scores 0 so one
// degenerate client cannot abort the round.
inline std::vector<double> tda_scores(std::span<const UpdateView> updates,
                                      const ParamVector& global_model) {
  const auto v = detail::sorted_views(updates, "tda_scores");
  if (l2_norm(global_model) == 0.0)
    throw std::invalid_argument("tda_scores: global model has zero norm");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& u : v) {
    check_same_dim(u.delta.size(), global_model.size(), "tda_scores");
    out.push_back(l2_norm(u.delta) == 0.0
                      ? 0.0
                      : cosine_similarity(u.delta, global_model.span()));
  }
  return out;
}

// rho_i = fraction of delta_i's top-k coordinates whose sign matches p.
inline std::vector<double> mpsa_scores(std::span<const UpdateView> updates,
                                       const SignVector& p, std::size_t k) {
  const auto v = detail::sorted_views(updates, "mpsa_scores");
  const std::size_t d = v.front().delta.size();
  check_same_dim(d, p.size(), "mpsa_scores");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& u : v) {
    const auto mask = top_k_mask(u.delta, k);
    std::size_t mismatches = 0;
    for (std::size_t j = 0; j < d; ++j)
      if (mask[j] && sgn(u.delta[j]) != p[j]) ++mismatches;
    out.push_back(1.0 - static_cast<double>(mismatches) / static_cast<double>(k));
  }
  return out;
}

inline AggregationOutcome alignins(std::span<const UpdateView> updates,
                                   const ParamVector& global_model,
                                   const AlignInsConfig& cfg = {}) {
  if (!(cfg.k_fraction > 0.0) || cfg.k_fraction > 1.0)
    throw std::invalid_argument("alignins: k_fraction must be in (0,1]");
  if (cfg.lambda_c < 0.0 || cfg.lambda_s < 0.0)
    throw std::invalid_argument("alignins: filtering radii must be nonnegative");
  const auto v = detail::sorted_views(updates, "alignins");
  const std::size_t d = v.front().delta.size();
  check_same_dim(d, global_model.size(), "alignins");

  const std::size_t k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.k_fraction * static_cast<double>(d))),
      1, d);

  AggregationOutcome out{ParamVector::zeros(d), {}, {}, {}, {}, {}, 0.0, false};
  out.tda = tda_scores(v, global_model);
  const auto p = principal_sign(v);
  out.mpsa = mpsa_scores(v, p, k);
  out.mz_tda = mz_scores(out.tda);
  out.mz_mpsa = mz_scores(out.mpsa);

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (std::abs(out.mz_tda[i]) <= cfg.lambda_c &&
        std::abs(out.mz_mpsa[i]) <= cfg.lambda_s)
      keep.push_back(i);

  if (keep.empty()) {
    out.flagged = true;  // nothing trusted this round; leave the model alone
    return out;
  }

  std::vector<double> norms;
  norms.reserve(keep.size());
  for (auto i : keep) norms.push_back(l2_norm(v[i].delta));
  const double c = median(norms);

  std::vector<double> acc(d, 0.0);
  for (std::size_t s = 0; s < keep.size(); ++s) {
    const auto& u = v[keep[s]];
    const double nrm = norms[s];
    // min(1, c/||delta||); a zero-norm member passes through unscaled
    const double f = (nrm > c && nrm > 0.0) ? c / nrm : 1.0;
    for (std::size_t j = 0; j < d; ++j) acc[j] += u.delta[j] * f;
  }
  const double cnt = static_cast<double>(keep.size());
  for (auto& x : acc) x /= cnt;

  out.aggregated = ParamVector(std::move(acc));
  for (auto i : keep) out.selected.push_back(v[i].client_id);
  out.clip_threshold = c;
  return out;
}

inline ParamVector fedavg(std::span<const UpdateView> updates) {
  return detail::mean_of(detail::sorted_views(updates, "fedavg"));
}

// FedAvg*: averages exactly the truth-benign updates. The one rule allowed
// to read ground-truth flags; it exists as the clean reference point for
// robustness error measurements.
inline ParamVector fedavg_oracle(std::span<const ClientUpdate> updates) {
  std::vector<UpdateView> benign;
  for (const auto& u : updates)
    if (!u.truth_is_malicious) benign.push_back({u.client_id, u.delta.span()});
  if (benign.empty())
    throw std::invalid_argument("fedavg_oracle: no benign updates present");
  return detail::mean_of(detail::sorted_views(benign, "fedavg_oracle"));
}

struct MultiKrumResult {
  ParamVector aggregated;
  std::vector<int> selected;  // ascending client ids
};

inline MultiKrumResult multi_krum_detail(std::span<const UpdateView> updates,
                                         std::size_t assumed_m,
                                         std::size_t select_count) {
  const auto v = detail::sorted_views(updates, "multi_krum");
  const std::size_t n = v.size();
  if (n < assumed_m + 3)
    throw std::invalid_argument("multi_krum: need n >= assumed_m + 3");
  if (select_count < 1 || select_count > n - assumed_m)
    throw std::invalid_argument("multi_krum: select_count must be in [1, n - assumed_m]");

  const std::size_t neighbors = n - assumed_m - 2;
  std::vector<double> score(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dists;
    dists.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dists.push_back(squared_distance(v[i].delta, v[j].delta));
    std::sort(dists.begin(), dists.end());
    for (std::size_t q = 0; q < neighbors; ++q) score[i] += dists[q];
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] < score[b];
    return v[a].client_id < v[b].client_id;  // deterministic tie-break
  });

  std::vector<std::size_t> chosen(order.begin(),
                                  order.begin() + static_cast<std::ptrdiff_t>(select_count));
  std::sort(chosen.begin(), chosen.end());  // back to ascending id for the mean

  std::vector<UpdateView> picked;
  picked.reserve(chosen.size());
  for (auto i : chosen) picked.push_back(v[i]);
  MultiKrumResult result{detail::mean_of(picked), {}};
  for (auto i : chosen) result.selected.push_back(v[i].client_id);
  return result;
}

inline ParamVector multi_krum(std::span<const UpdateView> updates,
                              std::size_t assumed_m, std::size_t select_count) {
  return multi_krum_detail(updates, assumed_m, select_count).aggregated;
}

// Smoothed Weiszfeld iteration for the geometric median of the updates.
inline ParamVector rfa_geometric_median(std::span<const UpdateView> updates,
                                        int max_iters = 10, double tol = 1e-6,
                                        double smoothing_eps = 1e-8) {
  const auto v = detail::sorted_views(updates, "rfa_geometric_median");
  const std::size_t d = v.front().delta.size();
  std::vector<double> z = detail::mean_of(v).values();
  for (int iter = 0; iter < max_iters; ++iter) {
    std::vector<double> num(d, 0.0);
    double den = 0.0;
    for (const auto& u : v) {
      const double w = 1.0 / std::max(std::sqrt(squared_distance(u.delta, z)),
                                      smoothing_eps);
      for (std::size_t j = 0; j < d; ++j) num[j] += w * u.delta[j];
      den += w;
    }
    for (auto& x : num) x /= den;
    const double step = std::sqrt(squared_distance(num, z));
    z = std::move(num);
    if (step < tol) break;
  }
  return ParamVector(std::move(z));
}

// Sign-vote learning rate: coordinates whose sign votes reach the threshold
// keep +server_lr, the rest get -server_lr, applied to the mean update.
inline ParamVector rlr(std::span<const UpdateView> updates,
                       std::size_t vote_threshold, double server_lr) {
  if (!(server_lr > 0.0))
    throw std::invalid_argument("rlr: server_lr must be positive");
  const auto v = detail::sorted_views(updates, "rlr");
  const std::size_t d = v.front().delta.size();
  std::vector<long> sums(d, 0);
  for (const auto& u : v)
    for (std::size_t j = 0; j < d; ++j) sums[j] += sgn(u.delta[j]);
  auto mean = detail::mean_of(v).values();
  for (std::size_t j = 0; j < d; ++j) {
    const long votes = sums[j] < 0 ? -sums[j] : sums[j];
    const double rate =
        votes >= static_cast<long>(vote_threshold) ? server_lr : -server_lr;
    mean[j] *= rate;
  }
  return ParamVector(std::move(mean));
}

inline std::size_t rlr_default_threshold(std::size_t n) {
  return (n + 1) / 2 + 1;  // strict majority
}

struct FoolsgoldResult {
  ParamVector aggregated;
  std::vector<double> weights;  // ascending-id order
  bool flagged;                 // true when the fallback path ran
};

// Foolsgold re-weighting on a last-layer slice. Pipeline (pardoning step
// omitted): cs_i = max cosine to any other client, w = 1 - cs, clip [0,1],
// divide by max, map exact 1s to 0.99, logit + 0.5, clip [0,1], then
// weight-average. Degenerate all-zero weights fall back to fedavg, flagged.
inline FoolsgoldResult foolsgold_detail(std::span<const UpdateView> updates,
                                        std::size_t slice_begin = 0,
                                        std::size_t slice_end = 0) {
  const auto v = detail::sorted_views(updates, "foolsgold");
  const std::size_t n = v.size();
  if (n < 2) throw std::invalid_argument("foolsgold: need at least 2 updates");
  const std::size_t d = v.front().delta.size();
  const std::size_t end = slice_end == 0 ? d : slice_end;
  if (slice_begin >= end || end > d)
    throw std::invalid_argument("foolsgold: bad last-layer slice");

  auto feature = [&](std::size_t i) {
    return v[i].delta.subspan(slice_begin, end - slice_begin);
  };
  auto safe_cos = [](std::span<const double> a, std::span<const double> b) {
    if (l2_norm(a) == 0.0 || l2_norm(b) == 0.0) return 0.0;
    return cosine_similarity(a, b);
  };

  std::vector<double> wv(n);
  for (std::size_t i = 0; i < n; ++i) {
    double cs = -1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cs = std::max(cs, safe_cos(feature(i), feature(j)));
    wv[i] = std::clamp(1.0 - cs, 0.0, 1.0);
  }

  const double mx = *std::max_element(wv.begin(), wv.end());
  if (mx <= 0.0)
    return {detail::mean_of(v), std::move(wv), true};
  for (auto& w : wv) {
    w /= mx;
    if (w == 1.0) w = 0.99;
    w = std::clamp(std::log(w / (1.0 - w)) + 0.5, 0.0, 1.0);
  }
  double total = 0.0;
  for (double w : wv) total += w;
  if (total <= 0.0)
    return {detail::mean_of(v), std::move(wv), true};

  std::vector<double> acc(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) acc[j] += wv[i] * v[i].delta[j];
  for (auto& x : acc) x /= total;
  return {ParamVector(std::move(acc)), std::move(wv), false};
}

inline ParamVector foolsgold(std::span<const UpdateView> updates,
                             std::size_t slice_begin = 0,
                             std::size_t slice_end = 0) {
  return foolsgold_detail(updates, slice_begin, slice_end).aggregated;
}

// ---- dispatch ------------------------------------------------------------

enum class DefenseKind { fedavg, fedavg_star, alignins, multi_krum, rfa, rlr, foolsgold };

struct DefenseSpec {
  DefenseKind kind = DefenseKind::alignins;
  AlignInsConfig align;
  // multi-krum; unset values are resolved at aggregation time:
  // assumed_m from the caller's malicious-count hint, select_count = n - m.
  std::optional<std::size_t> krum_assumed_m;
  std::optional<std::size_t> krum_select_count;
  int rfa_max_iters = 10;
  double rfa_tol = 1e-6;
  double rfa_eps = 1e-8;
  std::optional<std::size_t> rlr_vote_threshold;  // unset: ceil(n/2)+1
  // RLR's own rate; the simulator composes its server_lr on top, so the
  // default 1.0 yields the usual +-alpha behaviour.
  double rlr_server_lr = 1.0;
  std::size_t fg_slice_begin = 0;
  std::size_t fg_slice_end = 0;  // 0 = whole vector
};

inline const char* defense_name(DefenseKind k) {
  switch (k) {
    case DefenseKind::fedavg: return "fedavg";
    case DefenseKind::fedavg_star: return "fedavg_star";
    case DefenseKind::alignins: return "alignins";
    case DefenseKind::multi_krum: return "multikrum";
    case DefenseKind::rfa: return "rfa";
    case DefenseKind::rlr: return "rlr";
    case DefenseKind::foolsgold: return "foolsgold";
  }
  return "?";
}

// Runs the configured rule and normalizes everything into an
// AggregationOutcome so the simulator can log one shape of record.
// `assumed_malicious` only feeds defaults (multi-krum's m); it never leaks
// per-client truth to any rule.
inline AggregationOutcome aggregate(const DefenseSpec& spec,
                                    std::span<const ClientUpdate> updates,
                                    const ParamVector& global_model,
                                    std::size_t assumed_malicious) {
  const auto views = defense_views(updates);
  auto all_ids = [&] {
    std::vector<int> ids;
    ids.reserve(updates.size());
    for (const auto& u : updates) ids.push_back(u.client_id);
    std::sort(ids.begin(), ids.end());
    return ids;
  };

  switch (spec.kind) {
    case DefenseKind::alignins:
      return alignins(views, global_model, spec.align);
    case DefenseKind::fedavg:
      return {fedavg(views), all_ids(), {}, {}, {}, {}, 0.0, false};
    case DefenseKind::fedavg_star: {
      std::vector<int> benign;
      for (const auto& u : updates)
        if (!u.truth_is_malicious) benign.push_back(u.client_id);
      std::sort(benign.begin(), benign.end());
      return {fedavg_oracle(updates), std::move(benign), {}, {}, {}, {}, 0.0, false};
    }
    case DefenseKind::multi_krum: {
      const std::size_t n = views.size();
      const std::size_t m = spec.krum_assumed_m.value_or(assumed_malicious);
      const std::size_t sel = spec.krum_select_count.value_or(n > m ? n - m : 1);
      auto r = multi_krum_detail(views, m, sel);
      return {std::move(r.aggregated), std::move(r.selected), {}, {}, {}, {}, 0.0, false};
    }
    case DefenseKind::rfa:
      return {rfa_geometric_median(views, spec.rfa_max_iters, spec.rfa_tol, spec.rfa_eps),
              all_ids(), {}, {}, {}, {}, 0.0, false};
    case DefenseKind::rlr: {
      const std::size_t thr =
          spec.rlr_vote_threshold.value_or(rlr_default_threshold(views.size()));
      return {rlr(views, thr, spec.rlr_server_lr), all_ids(), {}, {}, {}, {}, 0.0, false};
    }
    case DefenseKind::foolsgold: {
      auto r = foolsgold_detail(views, spec.fg_slice_begin, spec.fg_slice_end);
      return {std::move(r.aggregated), all_ids(), {}, {}, {}, {}, 0.0, r.flagged};
    }
  }
  throw std::invalid_argument("aggregate: unknown defense kind");
}

}  // namespace alignins
