#include <catch2/catch_amalgamated.hpp>

#include "alignins/kappa_check.hpp"

using namespace alignins;
using Catch::Approx;

TEST_CASE("default kappa check passes with zero violations", "[kappa_check]") {
  const auto rep = run_kappa_check();
  REQUIRE(rep.trials.size() == 200);
  REQUIRE(rep.violations == 0);
  REQUIRE(double(rep.precondition_failures) < 0.2 * 200.0);
  REQUIRE(rep.passed);
}

TEST_CASE("trials respect the configured ranges and admissibility", "[kappa_check]") {
  KappaCheckConfig cfg;
  cfg.trials = 80;
  const auto rep = run_kappa_check(cfg);
  bool saw_style[3] = {false, false, false};
  for (const auto& t : rep.trials) {
    REQUIRE(t.n >= cfg.n_min);
    REQUIRE(t.n <= cfg.n_max);
    REQUIRE(t.d >= cfg.d_min);
    REQUIRE(t.d <= cfg.d_max);
    REQUIRE(t.m >= 1);
    REQUIRE(double(t.m) < double(t.n) / (3.0 + cfg.epsilon));
    saw_style[int(t.style)] = true;
    if (t.precondition_met) {
      REQUIRE(t.n_selected + 2 * t.m >= t.n);
      REQUIRE(t.bound >= 0.0);
      REQUIRE(t.measured >= 0.0);
      REQUIRE(!t.violated);
    } else {
      REQUIRE(t.n_selected + 2 * t.m < t.n);
    }
  }
  // 80 draws over three families leave each one represented
  REQUIRE(saw_style[0]);
  REQUIRE(saw_style[1]);
  REQUIRE(saw_style[2]);
}

TEST_CASE("kappa check replays exactly for a fixed seed", "[kappa_check]") {
  KappaCheckConfig cfg;
  cfg.trials = 40;
  cfg.seed = 5;
  const auto a = run_kappa_check(cfg);
  const auto b = run_kappa_check(cfg);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    REQUIRE(a.trials[i].n == b.trials[i].n);
    REQUIRE(a.trials[i].d == b.trials[i].d);
    REQUIRE(a.trials[i].m == b.trials[i].m);
    REQUIRE(a.trials[i].style == b.trials[i].style);
    REQUIRE(a.trials[i].measured == b.trials[i].measured);
    REQUIRE(a.trials[i].bound == b.trials[i].bound);
  }

  cfg.seed = 6;
  const auto c = run_kappa_check(cfg);
  bool same = true;
  for (std::size_t i = 0; i < a.trials.size(); ++i)
    if (a.trials[i].measured != c.trials[i].measured) same = false;
  REQUIRE(!same);
}

TEST_CASE("kappa check summary names the verdict", "[kappa_check]") {
  KappaCheckConfig cfg;
  cfg.trials = 20;
  const auto rep = run_kappa_check(cfg);
  const auto s = kappa_check_summary(rep);
  REQUIRE(s.find("trials=20") != std::string::npos);
  REQUIRE(s.find(rep.passed ? "pass" : "FAIL") != std::string::npos);
}

TEST_CASE("kappa check validates its configuration", "[kappa_check]") {
  KappaCheckConfig cfg;
  cfg.trials = 0;
  REQUIRE_THROWS_AS(run_kappa_check(cfg), std::invalid_argument);
  cfg = {};
  cfg.n_max = cfg.n_min - 1;
  REQUIRE_THROWS_AS(run_kappa_check(cfg), std::invalid_argument);
  cfg = {};
  cfg.d_min = 0;
  REQUIRE_THROWS_AS(run_kappa_check(cfg), std::invalid_argument);
  cfg = {};
  cfg.epsilon = 0.0;
  REQUIRE_THROWS_AS(run_kappa_check(cfg), std::invalid_argument);
}
