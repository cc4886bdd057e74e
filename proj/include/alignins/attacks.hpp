#pragma once

// Malicious-client behaviors. Badnet/DBA poison data only (their training
// path is identical to a benign client's); the transforms here cover the
// update-level attacks: scaling, PGD projection, neurotoxin masking, and the
// two sign-structured adaptive attacks.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "alignins/rng.hpp"
#include "alignins/vec.hpp"

namespace alignins {

enum class AttackKind { none, badnet, dba, scaling, pgd, neurotoxin, ada_a, ada_b };

struct AttackSpec {
  AttackKind kind = AttackKind::none;
  double scale_factor = 2.0;
  double pgd_radius_ratio = 1.0;
  double neurotoxin_bottom_frac = 0.75;
  double poison_ratio = 0.5;   // r: fraction of the local dataset poisoned
  double attack_ratio = 0.2;   // fraction of clients that are malicious
  // ADA_B principal-sign knowledge: false = colluders' dry runs plus the
  // global model sign, true = the exact benign principal sign.
  bool ada_exact_p = false;
};

inline const char* attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::none: return "none";
    case AttackKind::badnet: return "badnet";
    case AttackKind::dba: return "dba";
    case AttackKind::scaling: return "scaling";
    case AttackKind::pgd: return "pgd";
    case AttackKind::neurotoxin: return "neurotoxin";
    case AttackKind::ada_a: return "ada_a";
    case AttackKind::ada_b: return "ada_b";
  }
  return "?";
}

inline void validate_attack_spec(const AttackSpec& a) {
  if (!(a.scale_factor > 0.0))
    throw std::invalid_argument("AttackSpec: scale_factor must be positive");
  if (!(a.pgd_radius_ratio > 0.0))
    throw std::invalid_argument("AttackSpec: pgd_radius_ratio must be positive");
  if (!(a.neurotoxin_bottom_frac > 0.0) || a.neurotoxin_bottom_frac > 1.0)
    throw std::invalid_argument("AttackSpec: neurotoxin_bottom_frac must be in (0,1]");
  if (!(a.poison_ratio >= 0.0) || a.poison_ratio > 1.0)
    throw std::invalid_argument("AttackSpec: poison_ratio must be in [0,1]");
  if (!(a.attack_ratio >= 0.0) || a.attack_ratio > 1.0)
    throw std::invalid_argument("AttackSpec: attack_ratio must be in [0,1]");
}

inline ParamVector scaling_attack(const ParamVector& update, double factor) {
  if (!(factor > 0.0))
    throw std::invalid_argument("scaling_attack: factor must be positive");
  return ParamVector(vec_scale(update.span(), factor));
}

// Projects the local model onto the sphere of the given radius around the
// global model; models already inside are returned untouched.
inline ParamVector pgd_project(const ParamVector& local_model,
                               const ParamVector& global_model, double radius) {
  if (!(radius > 0.0))
    throw std::invalid_argument("pgd_project: radius must be positive");
  const auto diff = vec_sub(local_model.span(), global_model.span());
  const double dist = l2_norm(diff);
  if (dist <= radius) return local_model;
  return ParamVector(vec_add(global_model.span(), vec_scale(diff, radius / dist)));
}

// Zeroes the update on the ceil((1-bottom_frac)*d) coordinates where the
// previous round's aggregate moved the most, hiding the attack in the
// low-importance directions. bottom_frac = 1 keeps everything.
inline ParamVector neurotoxin_mask(const ParamVector& update,
                                   const ParamVector& prev_aggregate,
                                   double bottom_frac) {
  check_same_dim(update.size(), prev_aggregate.size(), "neurotoxin_mask");
  if (!(bottom_frac > 0.0) || bottom_frac > 1.0)
    throw std::invalid_argument("neurotoxin_mask: bottom_frac must be in (0,1]");
  const std::size_t d = update.size();
  const std::size_t top = std::min<std::size_t>(
      d, static_cast<std::size_t>(std::ceil((1.0 - bottom_frac) * double(d))));
  if (top == 0) return update;
  const auto mask = top_k_mask(prev_aggregate, top);
  std::vector<double> out(update.values());
  for (std::size_t j = 0; j < d; ++j)
    if (mask[j]) out[j] = 0.0;
  return ParamVector(std::move(out));
}

// Picks one visible benign update uniformly (seeded) and mirrors its sign
// pattern: out = -sgn(chosen) * magnitude / sqrt(d).
inline ParamVector ada_a(std::span<const ParamVector> benign_updates_visible,
                         double magnitude, std::uint64_t seed) {
  if (benign_updates_visible.empty())
    throw std::invalid_argument("ada_a: no visible benign updates");
  if (!(magnitude >= 0.0))
    throw std::invalid_argument("ada_a: magnitude must be nonnegative");
  Rng r(seed);
  const auto& chosen =
      benign_updates_visible[static_cast<std::size_t>(r.below(benign_updates_visible.size()))];
  const auto s = sign(chosen);
  const double unit = magnitude / std::sqrt(double(chosen.size()));
  std::vector<double> out(chosen.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = -double(s[j]) * unit;
  return ParamVector(std::move(out));
}

// Submits the attacker's principal-sign estimate as the update:
// out = p * magnitude / sqrt(d).
inline ParamVector ada_b(const SignVector& p, double magnitude) {
  if (!(magnitude >= 0.0))
    throw std::invalid_argument("ada_b: magnitude must be nonnegative");
  const double unit = magnitude / std::sqrt(double(p.size()));
  std::vector<double> out(p.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = double(p[j]) * unit;
  return ParamVector(std::move(out));
}

}  // namespace alignins
