// Command line front end.
//   run          one experiment from a JSON config -> metrics.csv + run_meta.json
//   sweep        grid of attack/defense/beta/poison-ratio cells -> one combined CSV
//   kappa-check  randomized robustness-bound property suite
//
// Exit codes: 0 success, 1 failed check, 2 config error, 3 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alignins/config.hpp"
#include "alignins/kappa_check.hpp"
#include "alignins/sim.hpp"

namespace {

using namespace alignins;

std::string fmt_beta(double beta) {
  if (std::isinf(beta)) return "iid";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", beta);
  return buf;
}

double parse_beta(const std::string& s) {
  if (s == "iid") return kIidBeta;
  try {
    std::size_t used = 0;
    const double b = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return b;
  } catch (const std::exception&) {
    throw config_error("bad beta value '" + s + "' (number or \"iid\")");
  }
}

void apply_overrides(ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed,
                     const std::string& defense, const std::string& attack) {
  if (seed) cfg.seed = *seed;
  if (!defense.empty()) cfg.defense.kind = parse_defense_kind(defense);
  if (!attack.empty()) cfg.attack.kind = parse_attack_kind(attack);
  validate_experiment_config(cfg);
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::optional<std::uint64_t>& seed, const std::string& defense,
            const std::string& attack) {
  auto cfg = load_experiment_config(config_path);
  apply_overrides(cfg, seed, defense, attack);

  const auto rec = run_experiment(cfg);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory: " + out_dir);
  const auto csv_path = out_dir + "/metrics.csv";
  const auto meta_path = out_dir + "/run_meta.json";
  write_file(csv_path, metrics_csv(rec));
  write_file(meta_path, run_meta_json(rec).dump(2) + "\n");

  std::printf("backend=%s defense=%s attack=%s rounds=%d\n", rec.dataset_backend.c_str(),
              defense_name(cfg.defense.kind), attack_name(cfg.attack.kind), cfg.rounds);
  std::printf("summary ma=%.2f ba=%.2f ra=%.2f flagged=%zu wall=%.1fs\n", rec.summary.ma,
              rec.summary.ba, rec.summary.ra, rec.flagged_rounds.size(), rec.wall_seconds);
  std::printf("wrote %s\nwrote %s\n", csv_path.c_str(), meta_path.c_str());
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path,
              const std::vector<std::string>& attacks,
              const std::vector<std::string>& defenses,
              const std::vector<std::string>& betas,
              const std::vector<double>& ratios) {
  const auto base = load_experiment_config(config_path);

  // empty axis = keep the base config's value for that axis
  const auto attack_axis =
      attacks.empty() ? std::vector<std::string>{attack_name(base.attack.kind)} : attacks;
  const auto defense_axis =
      defenses.empty() ? std::vector<std::string>{defense_name(base.defense.kind)}
                       : defenses;
  const auto beta_axis =
      betas.empty() ? std::vector<std::string>{fmt_beta(base.beta)} : betas;
  const auto ratio_axis =
      ratios.empty() ? std::vector<double>{base.attack.poison_ratio} : ratios;

  std::string out =
      "attack,defense,beta,poison_ratio,"
      "round,ma,ba,ra,n_selected,sel_tp,sel_fp,clip_c,emp_kappa,prop_err\n";
  int cells = 0;
  for (const auto& atk : attack_axis)
    for (const auto& def : defense_axis)
      for (const auto& bet : beta_axis)
        for (double r : ratio_axis) {
          auto cfg = base;
          cfg.attack.kind = parse_attack_kind(atk);
          cfg.defense.kind = parse_defense_kind(def);
          cfg.beta = parse_beta(bet);
          cfg.attack.poison_ratio = r;
          validate_experiment_config(cfg);

          const auto rec = run_experiment(cfg);
          std::string prefix = atk + "," + def + "," + fmt_beta(cfg.beta) + "," +
                               detail::fmt_double(r) + ",";
          std::string rows;
          detail::append_csv_row(rows, rec.initial, cfg.paired_run);
          for (const auto& rm : rec.rounds)
            if (eval_scheduled(cfg, rm.round)) detail::append_csv_row(rows, rm, cfg.paired_run);
          std::size_t pos = 0;
          while (pos < rows.size()) {
            const auto nl = rows.find('\n', pos);
            out += prefix + rows.substr(pos, nl - pos) + "\n";
            pos = nl + 1;
          }
          ++cells;
          std::printf("cell %s/%s/beta=%s/r=%g: ma=%.2f ba=%.2f ra=%.2f\n", atk.c_str(),
                      def.c_str(), fmt_beta(cfg.beta).c_str(), r, rec.summary.ma,
                      rec.summary.ba, rec.summary.ra);
        }

  write_file(out_path, out);
  std::printf("wrote %s (%d cells)\n", out_path.c_str(), cells);
  return 0;
}

int cmd_kappa_check(int trials, std::uint64_t seed, double lambda, double epsilon) {
  KappaCheckConfig cfg;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.lambda = lambda;
  cfg.epsilon = epsilon;
  const auto rep = run_kappa_check(cfg);

  int pre_fail[3] = {0, 0, 0}, count[3] = {0, 0, 0};
  double worst = 0.0;
  for (const auto& t : rep.trials) {
    ++count[int(t.style)];
    if (!t.precondition_met)
      ++pre_fail[int(t.style)];
    else if (t.bound > 0.0)
      worst = std::max(worst, t.measured / t.bound);
  }
  std::printf("%s\n", kappa_check_summary(rep).c_str());
  for (int s = 0; s < 3; ++s)
    std::printf("  %-18s %3d trials, %d precondition failures\n",
                kappa_attack_style_name(KappaAttackStyle(s)), count[s], pre_fail[s]);
  std::printf("  worst measured/bound ratio %.3g\n", worst);
  return rep.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic federated-learning simulator with robust aggregation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", out_csv = "sweep.csv";
  std::string defense_override, attack_override;
  std::optional<std::uint64_t> seed_override;
  std::vector<std::string> attacks, defenses, betas;
  std::vector<double> ratios;
  int kc_trials = 200;
  std::uint64_t kc_seed = 2024;
  double kc_lambda = 1.5, kc_epsilon = 0.1;

  auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
  run->add_option("--config", config_path, "experiment config path")->required();
  run->add_option("--out", out_dir, "output directory (metrics.csv, run_meta.json)");
  run->add_option("--seed", seed_override, "override the config seed");
  run->add_option("--defense", defense_override, "override the defense kind");
  run->add_option("--attack", attack_override, "override the attack kind");

  auto* sweep = app.add_subcommand("sweep", "grid of cells into one combined CSV");
  sweep->add_option("--config", config_path, "base experiment config path")->required();
  sweep->add_option("--out", out_csv, "combined CSV path");
  sweep->add_option("--attacks", attacks, "attack kinds")->delimiter(',');
  sweep->add_option("--defenses", defenses, "defense kinds")->delimiter(',');
  sweep->add_option("--betas", betas, "beta values or \"iid\"")->delimiter(',');
  sweep->add_option("--ratios", ratios, "poison ratios")->delimiter(',');

  auto* kc = app.add_subcommand("kappa-check", "robustness-bound property suite");
  kc->add_option("--trials", kc_trials, "number of randomized instances");
  kc->add_option("--seed", kc_seed, "suite seed");
  kc->add_option("--lambda", kc_lambda, "filtering radius for both scores");
  kc->add_option("--epsilon", kc_epsilon, "admissibility slack");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a config error
  }

  try {
    if (run->parsed())
      return cmd_run(config_path, out_dir, seed_override, defense_override, attack_override);
    if (sweep->parsed()) return cmd_sweep(config_path, out_csv, attacks, defenses, betas, ratios);
    return cmd_kappa_check(kc_trials, kc_seed, kc_lambda, kc_epsilon);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
