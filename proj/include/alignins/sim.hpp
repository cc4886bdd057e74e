#pragma once

// Federated training loop. Each round the global model goes out to the
// participating clients, benign clients run local SGD, malicious clients run
// their configured attack pipeline, the defense aggregates the updates, and
// the server applies the aggregate. Paired mode additionally advances a
// benign-only FedAvg reference model from the same initialization with the
// same per-client RNG streams, so the gap between the two trajectories is
// exactly the attack's propagation error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignins/attacks.hpp"
#include "alignins/data.hpp"
#include "alignins/defenses.hpp"
#include "alignins/eval.hpp"
#include "alignins/model.hpp"
#include "alignins/rng.hpp"
#include "alignins/vec.hpp"

namespace alignins {

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seed-stream purposes. Benign client training uses the bare
// (seed, client_id, round) stream so its draws can never depend on how many
// malicious clients exist; everything else gets a distinct purpose tag.
namespace seed_purpose {
inline constexpr std::uint64_t train = 0;  // benign-contract stream
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t partition = 2;
inline constexpr std::uint64_t roles = 3;
inline constexpr std::uint64_t init = 4;
inline constexpr std::uint64_t poison = 5;
inline constexpr std::uint64_t sample = 6;
inline constexpr std::uint64_t ada = 7;
inline constexpr std::uint64_t probe = 8;
}  // namespace seed_purpose

struct DatasetConfig {
  std::string kind = "synthetic";  // synthetic | mnist | fmnist
  // idx file paths (mnist/fmnist)
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t train_limit = 0;  // keep only the first N samples; 0 = all
  std::size_t test_limit = 0;
  // synthetic generator shape
  int num_classes = 10;
  int image_side = 28;
  std::size_t synthetic_train = 2000;
  std::size_t synthetic_test = 500;
  double noise_sigma = 0.08;
  // exactly-zero pixel frame this many pixels wide, like a digit photo's dark
  // background; 0 disables it
  std::size_t quiet_border = 0;
};

struct BoundsConfig {
  double mu = 1.0;        // smoothness constant fed into the propagation bound
  int estimate_every = 0; // measure nu/zeta every k rounds; 0 = off
  std::size_t probes = 3;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  int n_clients = 20;
  std::optional<int> sample_count_per_round;  // cross-device participation
  int rounds = 150;
  double beta = kIidBeta;  // Dirichlet concentration; infinity = IID
  AttackSpec attack;
  DefenseSpec defense;
  double server_lr = 1.0;
  double server_lr_decay = 1.0;  // alpha_t = server_lr * decay^(t-1)
  TrainConfig train;
  std::vector<std::size_t> hidden = {64};
  TriggerSpec trigger;  // image_side is overwritten from the dataset shape
  std::uint64_t seed = 42;
  bool paired_run = false;
  int eval_every = 1;
  BoundsConfig bounds;
};

inline void validate_experiment_config(const ExperimentConfig& c) {
  if (c.dataset.kind != "synthetic" && c.dataset.kind != "mnist" &&
      c.dataset.kind != "fmnist")
    throw std::invalid_argument("config: dataset.kind must be synthetic, mnist, or fmnist");
  if (c.n_clients < 1) throw std::invalid_argument("config: n_clients must be >= 1");
  if (c.rounds < 0) throw std::invalid_argument("config: rounds must be >= 0");
  if (c.sample_count_per_round &&
      (*c.sample_count_per_round < 1 || *c.sample_count_per_round > c.n_clients))
    throw std::invalid_argument("config: sample_count_per_round outside [1, n_clients]");
  if (!(c.beta > 0.0))
    throw std::invalid_argument("config: beta must be positive (infinity for IID)");
  if (!(c.server_lr > 0.0))
    throw std::invalid_argument("config: server_lr must be positive");
  if (!(c.server_lr_decay > 0.0) || c.server_lr_decay > 1.0)
    throw std::invalid_argument("config: server_lr_decay must be in (0,1]");
  if (c.eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
  if (c.hidden.empty())
    throw std::invalid_argument("config: at least one hidden layer size");
  for (auto h : c.hidden)
    if (h < 1) throw std::invalid_argument("config: hidden sizes must be >= 1");
  if (!(c.bounds.mu >= 0.0))
    throw std::invalid_argument("config: bounds.mu must be nonnegative");
  if (c.bounds.estimate_every < 0)
    throw std::invalid_argument("config: bounds.estimate_every must be >= 0");
  if (c.dataset.kind == "synthetic" &&
      2 * c.dataset.quiet_border >= std::size_t(c.dataset.image_side))
    throw std::invalid_argument("config: quiet_border must leave an image interior");
  validate_attack_spec(c.attack);
}

struct RunSummary {
  double ma = 0.0, ba = 0.0, ra = 0.0;  // mean over the last 10 evaluated rounds
};

struct HeterogeneitySample {
  int round = 0;
  double nu_bar = 0.0, zeta_bar = 0.0;
};

struct RunRecord {
  ExperimentConfig config;
  RoundMetrics initial;              // round 0: the freshly initialized model
  std::vector<RoundMetrics> rounds;  // exactly config.rounds entries
  RunSummary summary;
  double wall_seconds = 0.0;
  std::vector<int> malicious_ids;
  std::vector<int> flagged_rounds;
  std::vector<HeterogeneitySample> heterogeneity;
  std::vector<double> propagation_bound;  // per round, paired mode only
  double kappa_max = 0.0;
  std::string dataset_backend;  // "synthetic" or "idx"
};

// True when round t (1-based) lands on the evaluation schedule. Round 0 and
// the final round are always evaluated.
inline bool eval_scheduled(const ExperimentConfig& cfg, int t) {
  return t % cfg.eval_every == 0 || t == cfg.rounds;
}

class Simulation {
 public:
  explicit Simulation(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    validate_experiment_config(cfg_);
    load_data();
    partition_clients();
    assign_roles();
    poison_shards();

    std::vector<std::size_t> layers;
    layers.push_back(train_.feat_dim);
    for (auto h : cfg_.hidden) layers.push_back(h);
    layers.push_back(static_cast<std::size_t>(train_.num_classes));
    model_ = init_model(layers, derive_seed(cfg_.seed, 0, 0, seed_purpose::init));
    if (cfg_.paired_run) reference_ = model_;
  }

  const ExperimentConfig& config() const { return cfg_; }
  const MlpModel& global_model() const { return *model_; }
  const LabeledDataset& test_set() const { return test_; }
  const std::vector<int>& malicious_ids() const { return malicious_ids_; }
  const std::string& dataset_backend() const { return backend_; }

  bool is_malicious(int id) const {
    return std::find(malicious_ids_.begin(), malicious_ids_.end(), id) !=
           malicious_ids_.end();
  }

  // State of the most recent round, for inspection: the defense outcome and
  // the participant ids (ascending, aligned with the outcome's score arrays).
  const AggregationOutcome& last_outcome() const {
    if (!last_outcome_) throw std::logic_error("last_outcome: no round has run");
    return *last_outcome_;
  }
  const std::vector<int>& last_participants() const { return last_participants_; }

  // One federated round, 1-based. Defense failures never abort: they yield a
  // flagged round with a zero aggregate.
  RoundMetrics run_round(int t) {
    const auto participants = pick_participants(t);
    const auto theta = model_->to_param_vector();

    // honest local training for everyone: benign clients by contract, and
    // attack pipelines start from (or dry-run) the same computation
    std::vector<ParamVector> honest;
    honest.reserve(participants.size());
    for (int id : participants) {
      TrainConfig tc = cfg_.train;
      tc.seed = derive_seed(cfg_.seed, std::uint64_t(id), std::uint64_t(t),
                            seed_purpose::train);
      const bool mal = is_malicious(id);
      const LabeledDataset& shard =
          (mal && poisoned_[std::size_t(id)]) ? *poisoned_[std::size_t(id)]
                                              : shards_[std::size_t(id)];
      honest.push_back(local_train(*model_, shard, tc));
    }

    std::vector<ClientUpdate> updates = build_updates(participants, honest, theta, t);

    std::size_t m_round = 0;
    bool any_benign = false;
    for (const auto& u : updates) {
      if (u.truth_is_malicious)
        ++m_round;
      else
        any_benign = true;
    }

    AggregationOutcome out{ParamVector::zeros(theta.size()), {}, {}, {}, {}, {}, 0.0, true};
    try {
      out = aggregate(cfg_.defense, updates, theta, m_round);
    } catch (const std::exception&) {
      // keep the zero aggregate; the round is recorded as flagged
    }
    last_outcome_ = out;
    last_participants_ = participants;

    RoundMetrics rm;
    rm.round = t;
    rm.clip_threshold = out.clip_threshold;
    rm.empirical_kappa = any_benign ? empirical_kappa(out, updates) : 0.0;
    for (int id : out.selected) {
      if (is_malicious(id))
        ++rm.selected_false_pos;
      else
        ++rm.selected_true_pos;
    }
    if (out.flagged || !any_benign) flagged_rounds_.push_back(t);

    const double alpha = cfg_.server_lr * std::pow(cfg_.server_lr_decay, double(t - 1));
    alphas_.push_back(alpha);
    model_->add_delta(vec_scale(out.aggregated.span(), alpha));
    prev_aggregate_ = out.aggregated;

    if (cfg_.paired_run) {
      advance_reference(participants, t, alpha);
      rm.prop_error = std::sqrt(squared_distance(model_->flat(), reference_->flat()));
    }

    kappa_max_ = std::max(kappa_max_, rm.empirical_kappa);

    if (eval_scheduled(cfg_, t)) {
      const auto acc = evaluate(*model_, test_, trigger_);
      last_ma_ = acc.ma;
      last_ba_ = acc.ba;
      last_ra_ = acc.ra;
    }
    rm.ma = last_ma_;
    rm.ba = last_ba_;
    rm.ra = last_ra_;
    return rm;
  }

  RunRecord run() {
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config = cfg_;
    rec.malicious_ids = malicious_ids_;
    rec.dataset_backend = backend_;

    const auto acc0 = evaluate(*model_, test_, trigger_);
    last_ma_ = acc0.ma;
    last_ba_ = acc0.ba;
    last_ra_ = acc0.ra;
    rec.initial.round = 0;
    rec.initial.ma = acc0.ma;
    rec.initial.ba = acc0.ba;
    rec.initial.ra = acc0.ra;
    if (cfg_.paired_run) rec.initial.prop_error = 0.0;

    maybe_estimate_heterogeneity(rec, 0);

    for (int t = 1; t <= cfg_.rounds; ++t) {
      rec.rounds.push_back(run_round(t));
      if (cfg_.paired_run)
        rec.propagation_bound.push_back(propagation_error_bound(
            std::size_t(t), alphas_, cfg_.bounds.mu, kappa_max_, nu_bar_latest_));
      if (cfg_.bounds.estimate_every > 0 && t % cfg_.bounds.estimate_every == 0)
        maybe_estimate_heterogeneity(rec, t);
    }

    rec.flagged_rounds = flagged_rounds_;
    rec.kappa_max = kappa_max_;
    rec.summary = summarize(rec);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  }

 private:
  void load_data() {
    const auto& d = cfg_.dataset;
    if (d.kind == "synthetic") {
      const std::size_t side = std::size_t(d.image_side);
      if (d.image_side < 7)
        throw std::invalid_argument("config: image_side too small for the trigger");
      const std::size_t total = d.synthetic_train + d.synthetic_test;
      if (d.synthetic_train == 0 || d.synthetic_test == 0)
        throw std::invalid_argument("config: synthetic sample counts must be positive");
      // one draw for train and test so both share the class centroids
      const auto full =
          gen_synthetic(d.num_classes, side * side, total,
                        derive_seed(cfg_.seed, 0, 0, seed_purpose::data), d.noise_sigma,
                        side, d.quiet_border);
      std::vector<std::size_t> idx(total);
      for (std::size_t i = 0; i < total; ++i) idx[i] = i;
      train_ = dataset_subset(full, std::span(idx).first(d.synthetic_train));
      test_ = dataset_subset(full, std::span(idx).subspan(d.synthetic_train));
      backend_ = "synthetic";
    } else {
      train_ = load_idx(d.train_images, d.train_labels);
      test_ = load_idx(d.test_images, d.test_labels);
      if (d.train_limit > 0 && d.train_limit < train_.size())
        train_ = dataset_subset(train_, iota_indices(d.train_limit));
      if (d.test_limit > 0 && d.test_limit < test_.size())
        test_ = dataset_subset(test_, iota_indices(d.test_limit));
      if (train_.num_classes < test_.num_classes) train_.num_classes = test_.num_classes;
      if (test_.num_classes < train_.num_classes) test_.num_classes = train_.num_classes;
      backend_ = "idx";
    }

    const auto side = static_cast<int>(std::llround(std::sqrt(double(train_.feat_dim))));
    if (std::size_t(side) * std::size_t(side) != train_.feat_dim)
      throw std::invalid_argument("config: dataset features are not square images");
    trigger_ = cfg_.trigger;
    trigger_.image_side = side;
    if (trigger_.target_label < 0 || trigger_.target_label >= train_.num_classes)
      throw std::invalid_argument("config: trigger target label out of range");
    trigger_pixels(trigger_);  // bounds-check the trigger against this shape
  }

  std::vector<std::size_t> iota_indices(std::size_t n) const {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }

  void partition_clients() {
    const auto plan =
        dirichlet_partition(train_.labels, cfg_.n_clients, cfg_.beta,
                            derive_seed(cfg_.seed, 0, 0, seed_purpose::partition));
    shard_indices_ = client_samples(plan, cfg_.n_clients);
    shards_.reserve(shard_indices_.size());
    for (const auto& idx : shard_indices_) shards_.push_back(dataset_subset(train_, idx));
  }

  void assign_roles() {
    const std::size_t m =
        cfg_.attack.kind == AttackKind::none
            ? 0
            : std::size_t(cfg_.attack.attack_ratio * double(cfg_.n_clients));
    std::vector<int> ids(std::size_t(cfg_.n_clients));
    for (int i = 0; i < cfg_.n_clients; ++i) ids[std::size_t(i)] = i;
    Rng r(derive_seed(cfg_.seed, 0, 0, seed_purpose::roles));
    r.shuffle(ids);
    malicious_ids_.assign(ids.begin(), ids.begin() + std::ptrdiff_t(m));
    std::sort(malicious_ids_.begin(), malicious_ids_.end());
  }

  void poison_shards() {
    poisoned_.resize(shards_.size());
    const auto k = cfg_.attack.kind;
    const bool poisons = k == AttackKind::badnet || k == AttackKind::dba ||
                         k == AttackKind::scaling || k == AttackKind::pgd ||
                         k == AttackKind::neurotoxin;
    if (!poisons) return;
    for (std::size_t ord = 0; ord < malicious_ids_.size(); ++ord) {
      const auto id = std::size_t(malicious_ids_[ord]);
      std::optional<int> part;
      if (k == AttackKind::dba) part = int(ord % 4);
      poisoned_[id] = poison_dataset(
          shards_[id], trigger_, cfg_.attack.poison_ratio,
          derive_seed(cfg_.seed, id, 0, seed_purpose::poison), part);
    }
  }

  std::vector<int> pick_participants(int t) const {
    std::vector<int> ids;
    if (cfg_.sample_count_per_round) {
      Rng r(derive_seed(cfg_.seed, std::uint64_t(t), 0, seed_purpose::sample));
      for (auto i : r.sample_without_replacement(std::size_t(cfg_.n_clients),
                                                 std::size_t(*cfg_.sample_count_per_round)))
        ids.push_back(int(i));
      std::sort(ids.begin(), ids.end());
    } else {
      for (int i = 0; i < cfg_.n_clients; ++i) ids.push_back(i);
    }
    return ids;
  }

  // Applies the update-transform half of the attack pipeline and assembles
  // the round's ClientUpdate list in ascending id order.
  std::vector<ClientUpdate> build_updates(const std::vector<int>& participants,
                                          const std::vector<ParamVector>& honest,
                                          const ParamVector& theta, int t) {
    const auto k = cfg_.attack.kind;

    std::vector<const ParamVector*> benign_visible;
    std::vector<double> colluder_norms;
    for (std::size_t i = 0; i < participants.size(); ++i) {
      if (is_malicious(participants[i]))
        colluder_norms.push_back(l2_norm(honest[i]));
      else
        benign_visible.push_back(&honest[i]);
    }

    // shared ADA state: magnitude from the colluders' own dry runs, and the
    // ADA_B sign estimate (exact benign sign only behind the explicit flag)
    double magnitude = 0.0;
    std::optional<SignVector> ada_p;
    if ((k == AttackKind::ada_a || k == AttackKind::ada_b) && !colluder_norms.empty()) {
      magnitude = median(colluder_norms);
      if (k == AttackKind::ada_b) {
        std::vector<UpdateView> votes;
        int vid = 0;
        if (cfg_.attack.ada_exact_p) {
          for (std::size_t i = 0; i < participants.size(); ++i)
            if (!is_malicious(participants[i])) votes.push_back({vid++, honest[i].span()});
        } else {
          for (std::size_t i = 0; i < participants.size(); ++i)
            if (is_malicious(participants[i])) votes.push_back({vid++, honest[i].span()});
          votes.push_back({vid++, theta.span()});  // observed global direction
        }
        if (!votes.empty()) ada_p = principal_sign(votes);
      }
    }

    std::vector<ClientUpdate> updates;
    updates.reserve(participants.size());
    for (std::size_t i = 0; i < participants.size(); ++i) {
      const int id = participants[i];
      if (!is_malicious(id)) {
        updates.push_back({id, honest[i], false});
        continue;
      }
      ParamVector delta = honest[i];
      switch (k) {
        case AttackKind::badnet:
        case AttackKind::dba:
          break;  // pure data poisoning, the update goes out as trained
        case AttackKind::scaling:
          delta = scaling_attack(delta, cfg_.attack.scale_factor);
          break;
        case AttackKind::pgd: {
          const double radius = cfg_.attack.pgd_radius_ratio * l2_norm(theta);
          if (radius > 0.0) {
            const auto local = ParamVector(vec_add(theta.span(), delta.span()));
            const auto projected = pgd_project(local, theta, radius);
            delta = ParamVector(vec_sub(projected.span(), theta.span()));
          }
          break;
        }
        case AttackKind::neurotoxin:
          if (prev_aggregate_)
            delta = neurotoxin_mask(delta, *prev_aggregate_,
                                    cfg_.attack.neurotoxin_bottom_frac);
          break;
        case AttackKind::ada_a:
          if (!benign_visible.empty()) {
            std::vector<ParamVector> pool;
            pool.reserve(benign_visible.size());
            for (auto* b : benign_visible) pool.push_back(*b);
            delta = ada_a(pool, magnitude,
                          derive_seed(cfg_.seed, std::uint64_t(id), std::uint64_t(t),
                                      seed_purpose::ada));
          }
          // with nothing visible to mirror, the dry-run update goes out
          break;
        case AttackKind::ada_b:
          if (ada_p) delta = ada_b(*ada_p, magnitude);
          break;
        case AttackKind::none:
          break;
      }
      updates.push_back({id, std::move(delta), true});
    }
    return updates;
  }

  // The benign-only FedAvg reference trajectory: same benign clients, same
  // per-(client, round) seeds, mean aggregation.
  void advance_reference(const std::vector<int>& participants, int t, double alpha) {
    std::vector<ParamVector> deltas;
    std::vector<UpdateView> views;
    deltas.reserve(participants.size());
    for (int id : participants) {
      if (is_malicious(id)) continue;
      TrainConfig tc = cfg_.train;
      tc.seed = derive_seed(cfg_.seed, std::uint64_t(id), std::uint64_t(t),
                            seed_purpose::train);
      deltas.push_back(local_train(*reference_, shards_[std::size_t(id)], tc));
      views.push_back({id, deltas.back().span()});
    }
    if (views.empty()) return;  // a fully malicious sample leaves it in place
    const auto mean = fedavg(views);
    reference_->add_delta(vec_scale(mean.span(), alpha));
  }

  void maybe_estimate_heterogeneity(RunRecord& rec, int t) {
    if (cfg_.bounds.estimate_every <= 0) return;
    std::vector<std::vector<std::size_t>> benign_shards;
    for (int id = 0; id < cfg_.n_clients; ++id)
      if (!is_malicious(id)) benign_shards.push_back(shard_indices_[std::size_t(id)]);
    if (benign_shards.size() < 2) return;
    const auto est = estimate_nu_zeta(
        *model_, train_, benign_shards, cfg_.train.batch_size, cfg_.bounds.probes,
        derive_seed(cfg_.seed, std::uint64_t(t), 1, seed_purpose::probe));
    nu_bar_latest_ = est.nu_bar;
    rec.heterogeneity.push_back({t, est.nu_bar, est.zeta_bar});
  }

  RunSummary summarize(const RunRecord& rec) const {
    std::vector<const RoundMetrics*> evaluated;
    for (const auto& rm : rec.rounds)
      if (eval_scheduled(cfg_, rm.round)) evaluated.push_back(&rm);
    if (evaluated.empty()) evaluated.push_back(&rec.initial);
    const std::size_t take = std::min<std::size_t>(10, evaluated.size());
    RunSummary s;
    for (std::size_t i = evaluated.size() - take; i < evaluated.size(); ++i) {
      s.ma += evaluated[i]->ma;
      s.ba += evaluated[i]->ba;
      s.ra += evaluated[i]->ra;
    }
    s.ma /= double(take);
    s.ba /= double(take);
    s.ra /= double(take);
    return s;
  }

  ExperimentConfig cfg_;
  LabeledDataset train_, test_;
  TriggerSpec trigger_;
  std::string backend_;
  std::vector<std::vector<std::size_t>> shard_indices_;
  std::vector<LabeledDataset> shards_;
  std::vector<std::optional<LabeledDataset>> poisoned_;
  std::vector<int> malicious_ids_;
  std::optional<MlpModel> model_;
  std::optional<MlpModel> reference_;
  std::optional<ParamVector> prev_aggregate_;
  std::optional<AggregationOutcome> last_outcome_;
  std::vector<int> last_participants_;
  std::vector<double> alphas_;
  std::vector<int> flagged_rounds_;
  double kappa_max_ = 0.0;
  double nu_bar_latest_ = 0.0;
  double last_ma_ = 0.0, last_ba_ = 0.0, last_ra_ = 0.0;
};

inline RunRecord run_experiment(const ExperimentConfig& cfg) {
  Simulation sim(cfg);
  return sim.run();
}

// --- CSV emission ------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void append_csv_row(std::string& out, const RoundMetrics& rm, bool paired) {
  out += std::to_string(rm.round);
  out += ',';
  out += fmt_double(rm.ma);
  out += ',';
  out += fmt_double(rm.ba);
  out += ',';
  out += fmt_double(rm.ra);
  out += ',';
  out += std::to_string(rm.selected_true_pos + rm.selected_false_pos);
  out += ',';
  out += std::to_string(rm.selected_true_pos);
  out += ',';
  out += std::to_string(rm.selected_false_pos);
  out += ',';
  out += fmt_double(rm.clip_threshold);
  out += ',';
  out += fmt_double(rm.empirical_kappa);
  out += ',';
  if (paired && rm.prop_error) out += fmt_double(*rm.prop_error);
  out += '\n';
}

}  // namespace detail

// Header plus one row per evaluated round (round 0 always included). The
// prop_err field stays empty outside paired mode.
inline std::string metrics_csv(const RunRecord& rec) {
  std::string out = "round,ma,ba,ra,n_selected,sel_tp,sel_fp,clip_c,emp_kappa,prop_err\n";
  detail::append_csv_row(out, rec.initial, rec.config.paired_run);
  for (const auto& rm : rec.rounds)
    if (eval_scheduled(rec.config, rm.round))
      detail::append_csv_row(out, rm, rec.config.paired_run);
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("cannot open for writing: " + path);
  const std::size_t n = std::fwrite(content.data(), 1, content.size(), f);
  const bool ok = n == content.size() && std::fclose(f) == 0;
  if (!ok) throw io_error("short write: " + path);
}

}  // namespace alignins
