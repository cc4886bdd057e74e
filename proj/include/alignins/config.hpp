#pragma once

// JSON experiment configuration and run metadata. One document per run;
// every object is checked against its allowed key set so a typo fails the
// run instead of silently falling back to a default.

#include <ctime>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "alignins/sim.hpp"

namespace alignins {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline AttackKind parse_attack_kind(const std::string& s) {
  for (auto k : {AttackKind::none, AttackKind::badnet, AttackKind::dba,
                 AttackKind::scaling, AttackKind::pgd, AttackKind::neurotoxin,
                 AttackKind::ada_a, AttackKind::ada_b})
    if (s == attack_name(k)) return k;
  throw config_error("unknown attack '" + s +
                     "' (expected none, badnet, dba, scaling, pgd, neurotoxin, "
                     "ada_a, or ada_b)");
}

inline DefenseKind parse_defense_kind(const std::string& s) {
  for (auto k : {DefenseKind::fedavg, DefenseKind::fedavg_star, DefenseKind::alignins,
                 DefenseKind::multi_krum, DefenseKind::rfa, DefenseKind::rlr,
                 DefenseKind::foolsgold})
    if (s == defense_name(k)) return k;
  throw config_error("unknown defense '" + s +
                     "' (expected fedavg, fedavg_star, alignins, multikrum, rfa, "
                     "rlr, or foolsgold)");
}

namespace detail {

inline void expect_keys(const nlohmann::json& obj, const char* where,
                        std::initializer_list<const char*> allowed) {
  if (!obj.is_object())
    throw config_error(std::string(where) + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known)
      throw config_error(std::string(where) + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read_key(const nlohmann::json& obj, const char* key, T& out, const char* where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string(where) + "." + key + ": " + e.what());
  }
}

inline DatasetConfig parse_dataset(const nlohmann::json& j) {
  expect_keys(j, "dataset",
              {"kind", "train_images", "train_labels", "test_images", "test_labels",
               "train_limit", "test_limit", "num_classes", "image_side",
               "synthetic_train", "synthetic_test", "noise_sigma", "quiet_border"});
  DatasetConfig d;
  read_key(j, "kind", d.kind, "dataset");
  read_key(j, "train_images", d.train_images, "dataset");
  read_key(j, "train_labels", d.train_labels, "dataset");
  read_key(j, "test_images", d.test_images, "dataset");
  read_key(j, "test_labels", d.test_labels, "dataset");
  read_key(j, "train_limit", d.train_limit, "dataset");
  read_key(j, "test_limit", d.test_limit, "dataset");
  read_key(j, "num_classes", d.num_classes, "dataset");
  read_key(j, "image_side", d.image_side, "dataset");
  read_key(j, "synthetic_train", d.synthetic_train, "dataset");
  read_key(j, "synthetic_test", d.synthetic_test, "dataset");
  read_key(j, "noise_sigma", d.noise_sigma, "dataset");
  read_key(j, "quiet_border", d.quiet_border, "dataset");
  return d;
}

inline AttackSpec parse_attack(const nlohmann::json& j) {
  expect_keys(j, "attack",
              {"kind", "scale_factor", "pgd_radius_ratio", "neurotoxin_bottom_frac",
               "poison_ratio", "attack_ratio", "ada_exact_p"});
  AttackSpec a;
  if (j.contains("kind")) {
    std::string s;
    read_key(j, "kind", s, "attack");
    a.kind = parse_attack_kind(s);
  }
  read_key(j, "scale_factor", a.scale_factor, "attack");
  read_key(j, "pgd_radius_ratio", a.pgd_radius_ratio, "attack");
  read_key(j, "neurotoxin_bottom_frac", a.neurotoxin_bottom_frac, "attack");
  read_key(j, "poison_ratio", a.poison_ratio, "attack");
  read_key(j, "attack_ratio", a.attack_ratio, "attack");
  read_key(j, "ada_exact_p", a.ada_exact_p, "attack");
  return a;
}

inline DefenseSpec parse_defense(const nlohmann::json& j) {
  expect_keys(j, "defense",
              {"kind", "lambda_c", "lambda_s", "k_fraction", "krum_assumed_m",
               "krum_select_count", "rfa_max_iters", "rfa_tol", "rfa_eps",
               "rlr_vote_threshold", "rlr_server_lr", "fg_slice_begin",
               "fg_slice_end"});
  DefenseSpec d;
  if (j.contains("kind")) {
    std::string s;
    read_key(j, "kind", s, "defense");
    d.kind = parse_defense_kind(s);
  }
  read_key(j, "lambda_c", d.align.lambda_c, "defense");
  read_key(j, "lambda_s", d.align.lambda_s, "defense");
  read_key(j, "k_fraction", d.align.k_fraction, "defense");
  if (j.contains("krum_assumed_m"))
    d.krum_assumed_m = j.at("krum_assumed_m").get<std::size_t>();
  if (j.contains("krum_select_count"))
    d.krum_select_count = j.at("krum_select_count").get<std::size_t>();
  read_key(j, "rfa_max_iters", d.rfa_max_iters, "defense");
  read_key(j, "rfa_tol", d.rfa_tol, "defense");
  read_key(j, "rfa_eps", d.rfa_eps, "defense");
  if (j.contains("rlr_vote_threshold"))
    d.rlr_vote_threshold = j.at("rlr_vote_threshold").get<std::size_t>();
  read_key(j, "rlr_server_lr", d.rlr_server_lr, "defense");
  read_key(j, "fg_slice_begin", d.fg_slice_begin, "defense");
  read_key(j, "fg_slice_end", d.fg_slice_end, "defense");
  return d;
}

inline TrainConfig parse_train(const nlohmann::json& j) {
  expect_keys(j, "train", {"local_epochs", "lr", "batch_size", "momentum"});
  TrainConfig t;
  read_key(j, "local_epochs", t.local_epochs, "train");
  read_key(j, "lr", t.lr, "train");
  read_key(j, "batch_size", t.batch_size, "train");
  read_key(j, "momentum", t.momentum, "train");
  return t;
}

inline TriggerSpec parse_trigger(const nlohmann::json& j) {
  // image_side is derived from the dataset, never configured
  expect_keys(j, "trigger",
              {"center_row", "center_col", "arm_len", "value", "target_label"});
  TriggerSpec t;
  read_key(j, "center_row", t.center_row, "trigger");
  read_key(j, "center_col", t.center_col, "trigger");
  read_key(j, "arm_len", t.arm_len, "trigger");
  read_key(j, "value", t.value, "trigger");
  read_key(j, "target_label", t.target_label, "trigger");
  return t;
}

inline BoundsConfig parse_bounds(const nlohmann::json& j) {
  expect_keys(j, "bounds", {"mu", "estimate_every", "probes"});
  BoundsConfig b;
  read_key(j, "mu", b.mu, "bounds");
  read_key(j, "estimate_every", b.estimate_every, "bounds");
  read_key(j, "probes", b.probes, "bounds");
  return b;
}

}  // namespace detail

// Parses and validates a complete experiment config. Absent keys keep their
// defaults; "beta" absent means IID.
inline ExperimentConfig parse_experiment_json(const nlohmann::json& j) {
  detail::expect_keys(j, "config",
                      {"dataset", "n_clients", "sample_count_per_round", "rounds",
                       "beta", "attack", "defense", "server_lr", "server_lr_decay",
                       "train", "hidden", "trigger", "seed", "paired_run",
                       "eval_every", "bounds"});
  ExperimentConfig c;
  if (j.contains("dataset")) c.dataset = detail::parse_dataset(j.at("dataset"));
  detail::read_key(j, "n_clients", c.n_clients, "config");
  if (j.contains("sample_count_per_round"))
    c.sample_count_per_round = j.at("sample_count_per_round").get<int>();
  detail::read_key(j, "rounds", c.rounds, "config");
  detail::read_key(j, "beta", c.beta, "config");
  if (j.contains("attack")) c.attack = detail::parse_attack(j.at("attack"));
  if (j.contains("defense")) c.defense = detail::parse_defense(j.at("defense"));
  detail::read_key(j, "server_lr", c.server_lr, "config");
  detail::read_key(j, "server_lr_decay", c.server_lr_decay, "config");
  if (j.contains("train")) c.train = detail::parse_train(j.at("train"));
  detail::read_key(j, "hidden", c.hidden, "config");
  if (j.contains("trigger")) c.trigger = detail::parse_trigger(j.at("trigger"));
  detail::read_key(j, "seed", c.seed, "config");
  detail::read_key(j, "paired_run", c.paired_run, "config");
  detail::read_key(j, "eval_every", c.eval_every, "config");
  if (j.contains("bounds")) c.bounds = detail::parse_bounds(j.at("bounds"));

  try {
    validate_experiment_config(c);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return c;
}

inline ExperimentConfig parse_experiment_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_experiment_json(j);
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw io_error("cannot open config: " + path);
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
  std::fclose(f);
  return parse_experiment_text(text);
}

// Canonical echo of a parsed config, defaults materialized.
inline nlohmann::json experiment_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dataset"] = {{"kind", c.dataset.kind},
                  {"num_classes", c.dataset.num_classes},
                  {"image_side", c.dataset.image_side},
                  {"synthetic_train", c.dataset.synthetic_train},
                  {"synthetic_test", c.dataset.synthetic_test},
                  {"noise_sigma", c.dataset.noise_sigma},
                  {"quiet_border", c.dataset.quiet_border}};
  if (!c.dataset.train_images.empty()) {
    j["dataset"]["train_images"] = c.dataset.train_images;
    j["dataset"]["train_labels"] = c.dataset.train_labels;
    j["dataset"]["test_images"] = c.dataset.test_images;
    j["dataset"]["test_labels"] = c.dataset.test_labels;
  }
  if (c.dataset.train_limit > 0) j["dataset"]["train_limit"] = c.dataset.train_limit;
  if (c.dataset.test_limit > 0) j["dataset"]["test_limit"] = c.dataset.test_limit;
  j["n_clients"] = c.n_clients;
  if (c.sample_count_per_round) j["sample_count_per_round"] = *c.sample_count_per_round;
  j["rounds"] = c.rounds;
  if (c.beta != kIidBeta) j["beta"] = c.beta;
  j["attack"] = {{"kind", attack_name(c.attack.kind)},
                 {"scale_factor", c.attack.scale_factor},
                 {"pgd_radius_ratio", c.attack.pgd_radius_ratio},
                 {"neurotoxin_bottom_frac", c.attack.neurotoxin_bottom_frac},
                 {"poison_ratio", c.attack.poison_ratio},
                 {"attack_ratio", c.attack.attack_ratio},
                 {"ada_exact_p", c.attack.ada_exact_p}};
  j["defense"] = {{"kind", defense_name(c.defense.kind)},
                  {"lambda_c", c.defense.align.lambda_c},
                  {"lambda_s", c.defense.align.lambda_s},
                  {"k_fraction", c.defense.align.k_fraction},
                  {"rfa_max_iters", c.defense.rfa_max_iters},
                  {"rfa_tol", c.defense.rfa_tol},
                  {"rfa_eps", c.defense.rfa_eps},
                  {"rlr_server_lr", c.defense.rlr_server_lr},
                  {"fg_slice_begin", c.defense.fg_slice_begin},
                  {"fg_slice_end", c.defense.fg_slice_end}};
  if (c.defense.krum_assumed_m) j["defense"]["krum_assumed_m"] = *c.defense.krum_assumed_m;
  if (c.defense.krum_select_count)
    j["defense"]["krum_select_count"] = *c.defense.krum_select_count;
  if (c.defense.rlr_vote_threshold)
    j["defense"]["rlr_vote_threshold"] = *c.defense.rlr_vote_threshold;
  j["server_lr"] = c.server_lr;
  j["server_lr_decay"] = c.server_lr_decay;
  j["train"] = {{"local_epochs", c.train.local_epochs},
                {"lr", c.train.lr},
                {"batch_size", c.train.batch_size},
                {"momentum", c.train.momentum}};
  j["hidden"] = c.hidden;
  j["trigger"] = {{"center_row", c.trigger.center_row},
                  {"center_col", c.trigger.center_col},
                  {"arm_len", c.trigger.arm_len},
                  {"value", c.trigger.value},
                  {"target_label", c.trigger.target_label}};
  j["seed"] = c.seed;
  j["paired_run"] = c.paired_run;
  j["eval_every"] = c.eval_every;
  j["bounds"] = {{"mu", c.bounds.mu},
                 {"estimate_every", c.bounds.estimate_every},
                 {"probes", c.bounds.probes}};
  return j;
}

// Everything nondeterministic or out-of-band lives here, never in the CSV:
// wall time, timestamps, attacker-knowledge flags, bound trajectories.
inline nlohmann::json run_meta_json(const RunRecord& rec) {
  nlohmann::json j;
  j["config"] = experiment_to_json(rec.config);
  j["dataset_backend"] = rec.dataset_backend;
  j["wall_seconds"] = rec.wall_seconds;
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  j["written_utc"] = stamp;
  j["malicious_clients"] = rec.malicious_ids;
  j["flagged_rounds"] = rec.flagged_rounds;
  j["kappa_max"] = rec.kappa_max;
  j["summary"] = {{"ma", rec.summary.ma}, {"ba", rec.summary.ba}, {"ra", rec.summary.ra}};
  if (!rec.heterogeneity.empty()) {
    auto& h = j["heterogeneity"] = nlohmann::json::array();
    for (const auto& s : rec.heterogeneity)
      h.push_back({{"round", s.round}, {"nu_bar", s.nu_bar}, {"zeta_bar", s.zeta_bar}});
  }
  if (rec.config.paired_run)
    j["propagation_bound"] = {{"mu", rec.config.bounds.mu},
                              {"per_round", rec.propagation_bound}};
  if (rec.config.attack.kind == AttackKind::ada_a)
    j["attacker_knowledge"] = {{"granted_one_benign_update", true}};
  if (rec.config.attack.kind == AttackKind::ada_b)
    j["attacker_knowledge"] = {{"exact_principal_sign", rec.config.attack.ada_exact_p}};
  return j;
}

}  // namespace alignins
