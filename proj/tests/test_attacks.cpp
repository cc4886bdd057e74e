#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "alignins/attacks.hpp"
#include "alignins/rng.hpp"
#include "alignins/vec.hpp"

using namespace alignins;
using Catch::Approx;

namespace {

ParamVector pv(std::vector<double> v) { return ParamVector(std::move(v)); }

ParamVector random_vec(Rng& r, std::size_t d, double scale = 1.0) {
  std::vector<double> v(d);
  for (auto& x : v) x = r.normal() * scale;
  return ParamVector(std::move(v));
}

}  // namespace

TEST_CASE("scaling_attack multiplies elementwise", "[attacks]") {
  const auto out = scaling_attack(pv({1.0, -2.0}), 2.0);
  REQUIRE(out.values() == std::vector<double>{2.0, -4.0});

  SECTION("identity at factor 1") {
    const auto u = pv({0.5, -0.25, 3.0});
    REQUIRE(scaling_attack(u, 1.0) == u);
  }
  SECTION("rejects nonpositive factors") {
    REQUIRE_THROWS_AS(scaling_attack(pv({1.0}), 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(scaling_attack(pv({1.0}), -2.0), std::invalid_argument);
  }
}

TEST_CASE("pgd_project clips onto the trust-region sphere", "[attacks]") {
  SECTION("distance 10 against radius 5 lands at the midpoint") {
    const auto global = pv({0.0, 0.0});
    const auto local = pv({6.0, 8.0});
    const auto out = pgd_project(local, global, 5.0);
    REQUIRE(out[0] == Approx(3.0));
    REQUIRE(out[1] == Approx(4.0));
    REQUIRE(l2_norm(vec_sub(out.span(), global.span())) == Approx(5.0));
  }
  SECTION("models inside the ball are untouched") {
    const auto global = pv({1.0, 1.0});
    const auto local = pv({1.5, 1.0});
    REQUIRE(pgd_project(local, global, 5.0) == local);
    REQUIRE(pgd_project(local, global, 0.5) == local);  // exactly on the boundary
  }
  SECTION("projection never exceeds the radius") {
    Rng r(2026);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t d = 1 + static_cast<std::size_t>(r.below(40));
      const auto global = random_vec(r, d, 2.0);
      const auto local = random_vec(r, d, 10.0);
      const double radius = 0.1 + 5.0 * r.uniform();
      const auto out = pgd_project(local, global, radius);
      REQUIRE(l2_norm(vec_sub(out.span(), global.span())) <= radius + 1e-9);
    }
  }
  SECTION("rejects nonpositive radius") {
    REQUIRE_THROWS_AS(pgd_project(pv({1.0}), pv({0.0}), 0.0), std::invalid_argument);
  }
}

TEST_CASE("neurotoxin_mask zeroes the heaviest aggregate coordinates", "[attacks]") {
  SECTION("bottom_frac 0.75 on d=4 kills exactly the top coordinate") {
    const auto out =
        neurotoxin_mask(pv({1.0, 2.0, 3.0, 4.0}), pv({9.0, 1.0, 1.0, 1.0}), 0.75);
    REQUIRE(out.values() == std::vector<double>{0.0, 2.0, 3.0, 4.0});
  }
  SECTION("bottom_frac 1 is the identity") {
    const auto u = pv({1.0, -2.0, 0.5});
    REQUIRE(neurotoxin_mask(u, pv({5.0, 5.0, 5.0}), 1.0) == u);
  }
  SECTION("magnitude ties in the aggregate break toward the lower index") {
    const auto out = neurotoxin_mask(pv({1.0, 1.0, 1.0}), pv({2.0, -2.0, 1.0}), 2.0 / 3.0);
    REQUIRE(out.values() == std::vector<double>{0.0, 1.0, 1.0});
  }
  SECTION("masking never increases the update norm") {
    Rng r(77);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t d = 2 + static_cast<std::size_t>(r.below(50));
      const auto u = random_vec(r, d);
      const auto prev = random_vec(r, d);
      const double frac = 0.05 + 0.95 * r.uniform();
      REQUIRE(l2_norm(neurotoxin_mask(u, prev, frac)) <= l2_norm(u) + 1e-12);
    }
  }
  SECTION("agrees with the complement of the top-k mask") {
    Rng r(78);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t d = 4 + static_cast<std::size_t>(r.below(30));
      const auto u = random_vec(r, d);
      const auto prev = random_vec(r, d);
      const double frac = 0.05 + 0.9 * r.uniform();
      const auto top = static_cast<std::size_t>(std::ceil((1.0 - frac) * double(d)));
      const auto out = neurotoxin_mask(u, prev, frac);
      if (top == 0) {
        REQUIRE(out == u);
        continue;
      }
      const auto mask = top_k_mask(prev, top);
      for (std::size_t j = 0; j < d; ++j)
        REQUIRE(out[j] == (mask[j] ? 0.0 : u[j]));
    }
  }
  SECTION("input validation") {
    REQUIRE_THROWS_AS(neurotoxin_mask(pv({1.0}), pv({1.0, 2.0}), 0.5),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(neurotoxin_mask(pv({1.0}), pv({1.0}), 0.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(neurotoxin_mask(pv({1.0}), pv({1.0}), 1.5),
                      std::invalid_argument);
  }
}

TEST_CASE("ada_a mirrors one visible benign update", "[attacks]") {
  SECTION("single candidate, magnitude sqrt(d) gives unit entries") {
    const std::vector<ParamVector> benign = {pv({1.0, -1.0})};
    const auto out = ada_a(benign, std::sqrt(2.0), 1);
    REQUIRE(out[0] == Approx(-1.0));
    REQUIRE(out[1] == Approx(1.0));
  }
  SECTION("deterministic in the seed, uniform over candidates") {
    const std::vector<ParamVector> benign = {pv({1.0, 1.0}), pv({-1.0, 1.0}),
                                             pv({1.0, -1.0})};
    const auto a = ada_a(benign, 2.0, 42);
    const auto b = ada_a(benign, 2.0, 42);
    REQUIRE(a == b);
    // every output must be the mirror of some candidate
    bool seen[3] = {false, false, false};
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
      const auto out = ada_a(benign, std::sqrt(2.0), seed);
      bool matched = false;
      for (std::size_t c = 0; c < benign.size(); ++c) {
        const auto s = sign(benign[c]);
        bool ok = true;
        for (std::size_t j = 0; j < out.size(); ++j)
          if (out[j] != Approx(-double(s[j]))) ok = false;
        if (ok) {
          seen[c] = true;
          matched = true;
        }
      }
      REQUIRE(matched);
    }
    REQUIRE((seen[0] && seen[1] && seen[2]));
  }
  SECTION("zero coordinates in the chosen update stay zero") {
    const std::vector<ParamVector> benign = {pv({0.0, 3.0, -2.0, 0.0})};
    const auto out = ada_a(benign, 4.0, 9);
    REQUIRE(out[0] == 0.0);
    REQUIRE(out[3] == 0.0);
    REQUIRE(out[1] == Approx(-4.0 / 2.0));
    REQUIRE(out[2] == Approx(4.0 / 2.0));
  }
  SECTION("rejects an empty candidate set") {
    const std::vector<ParamVector> none;
    REQUIRE_THROWS_AS(ada_a(none, 1.0, 0), std::invalid_argument);
  }
}

TEST_CASE("ada_b submits the scaled principal-sign estimate", "[attacks]") {
  SECTION("spec shape: p=[1,-1,0]") {
    const SignVector p(std::vector<std::int8_t>{1, -1, 0});
    const double mag = std::sqrt(2.0);
    const auto out = ada_b(p, mag);
    const double unit = mag / std::sqrt(3.0);
    REQUIRE(out[0] == Approx(unit));
    REQUIRE(out[1] == Approx(-unit));
    REQUIRE(out[2] == 0.0);
    REQUIRE(sign(out) == p);
  }
  SECTION("magnitude zero yields the zero vector") {
    const SignVector p(std::vector<std::int8_t>{1, -1, 1});
    REQUIRE(ada_b(p, 0.0) == ParamVector::zeros(3));
  }
  SECTION("full-support signs reach the requested norm") {
    const SignVector p(std::vector<std::int8_t>{1, -1, 1, 1, -1});
    REQUIRE(l2_norm(ada_b(p, 3.5)) == Approx(3.5));
  }
}

TEST_CASE("attack spec validation", "[attacks]") {
  AttackSpec ok;
  REQUIRE_NOTHROW(validate_attack_spec(ok));

  auto broken = ok;
  broken.scale_factor = 0.0;
  REQUIRE_THROWS_AS(validate_attack_spec(broken), std::invalid_argument);

  broken = ok;
  broken.pgd_radius_ratio = -1.0;
  REQUIRE_THROWS_AS(validate_attack_spec(broken), std::invalid_argument);

  broken = ok;
  broken.neurotoxin_bottom_frac = 0.0;
  REQUIRE_THROWS_AS(validate_attack_spec(broken), std::invalid_argument);

  broken = ok;
  broken.neurotoxin_bottom_frac = 1.25;
  REQUIRE_THROWS_AS(validate_attack_spec(broken), std::invalid_argument);

  broken = ok;
  broken.poison_ratio = 1.5;
  REQUIRE_THROWS_AS(validate_attack_spec(broken), std::invalid_argument);

  broken = ok;
  broken.attack_ratio = -0.1;
  REQUIRE_THROWS_AS(validate_attack_spec(broken), std::invalid_argument);

  REQUIRE(std::string(attack_name(AttackKind::neurotoxin)) == "neurotoxin");
  REQUIRE(std::string(attack_name(AttackKind::none)) == "none");
}
