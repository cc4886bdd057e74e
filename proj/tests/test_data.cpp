#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <vector>

#include "alignins/data.hpp"
#include "support/idx_fixture.hpp"

using namespace alignins;
using Catch::Approx;

namespace {

struct TempDir {
  std::filesystem::path p;
  TempDir() {
    p = std::filesystem::temp_directory_path() / "alignins_idx_test";
    std::filesystem::create_directories(p);
  }
  ~TempDir() { std::filesystem::remove_all(p); }
  std::string file(const char* name) const { return (p / name).string(); }
};

}  // namespace

TEST_CASE("load_idx round-trips a hand-built fixture", "[data][idx]") {
  TempDir tmp;
  std::vector<std::vector<unsigned char>> images{
      {0, 128, 255, 64, 32, 16, 8, 4, 2, 1, 0, 200, 100, 50, 25, 12},
      {255, 0, 255, 0, 255, 0, 255, 0, 1, 2, 3, 4, 5, 6, 7, 8}};
  std::vector<unsigned char> labels{3, 1};
  idxfix::write_idx_images(tmp.file("img"), images, 4, 4);
  idxfix::write_idx_labels(tmp.file("lab"), labels);

  const auto ds = load_idx(tmp.file("img"), tmp.file("lab"));
  REQUIRE(ds.size() == 2);
  REQUIRE(ds.feat_dim == 16);
  REQUIRE(ds.num_classes == 4);  // max label + 1
  REQUIRE(ds.labels == std::vector<int>{3, 1});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 16; ++j)
      REQUIRE(ds.features[i * 16 + j] == Approx(images[i][j] / 255.0).margin(1e-15));
}

TEST_CASE("load_idx distinguishes its failure modes", "[data][idx]") {
  TempDir tmp;
  std::vector<std::vector<unsigned char>> images{{1, 2, 3, 4}};

  idxfix::write_idx_images(tmp.file("img"), images, 2, 2);
  idxfix::write_idx_labels(tmp.file("lab_badmagic"), {0}, 0x00000999u);
  REQUIRE_THROWS_AS(load_idx(tmp.file("img"), tmp.file("lab_badmagic")), idx_bad_magic);

  idxfix::write_idx_images(tmp.file("img_badmagic"), images, 2, 2, 0x00000801u);
  idxfix::write_idx_labels(tmp.file("lab"), {0});
  REQUIRE_THROWS_AS(load_idx(tmp.file("img_badmagic"), tmp.file("lab")), idx_bad_magic);

  idxfix::write_idx_labels(tmp.file("lab2"), {0, 1});
  REQUIRE_THROWS_AS(load_idx(tmp.file("img"), tmp.file("lab2")), idx_count_mismatch);

  // header claims 2x2 but only 3 pixel bytes follow
  std::vector<std::vector<unsigned char>> short_img{{1, 2, 3}};
  idxfix::write_idx_images(tmp.file("img_short"), short_img, 2, 2);
  REQUIRE_THROWS_AS(load_idx(tmp.file("img_short"), tmp.file("lab")), idx_truncated);

  REQUIRE_THROWS_AS(load_idx(tmp.file("missing"), tmp.file("lab")), idx_parse_error);
}

TEST_CASE("gen_synthetic is deterministic, balanced, and in range", "[data][synthetic]") {
  const auto a = gen_synthetic(2, 6, 4, 99);
  const auto b = gen_synthetic(2, 6, 4, 99);
  REQUIRE(a.features == b.features);
  REQUIRE(a.labels == b.labels);
  REQUIRE(a.labels == std::vector<int>{0, 1, 0, 1});  // round-robin

  const auto big = gen_synthetic(10, 30, 1000, 7);
  for (double x : big.features) {
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
  }
  std::vector<int> hist(10, 0);
  for (int y : big.labels) ++hist[std::size_t(y)];
  for (int h : hist) REQUIRE(h == 100);

  REQUIRE(gen_synthetic(2, 6, 4, 100).features != a.features);
  REQUIRE_THROWS_AS(gen_synthetic(0, 6, 4, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_synthetic(2, 0, 4, 1), std::invalid_argument);
}

TEST_CASE("dirichlet_partition IID sentinel gives balanced shards", "[data][partition]") {
  const std::vector<int> labels{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const auto plan = dirichlet_partition(labels, 2, kIidBeta, 5);
  REQUIRE(plan.assignment.size() == 10);
  const auto shards = client_samples(plan, 2);
  REQUIRE(shards[0].size() == 5);
  REQUIRE(shards[1].size() == 5);

  // full coverage, each sample exactly once
  std::set<std::size_t> seen;
  for (const auto& s : shards) seen.insert(s.begin(), s.end());
  REQUIRE(seen.size() == 10);
}

TEST_CASE("huge beta approximates IID class histograms", "[data][partition]") {
  const auto ds = gen_synthetic(10, 4, 10000, 13);
  const auto plan = dirichlet_partition(ds.labels, 10, 1e6, 21);
  const auto shards = client_samples(plan, 10);
  for (const auto& shard : shards) {
    std::vector<double> hist(10, 0.0);
    for (auto i : shard) hist[std::size_t(ds.labels[i])] += 1.0;
    for (double h : hist) {
      const double frac = h / double(shard.size());
      REQUIRE(frac > 0.08);  // within 20% of the uniform 0.1
      REQUIRE(frac < 0.12);
    }
  }
}

TEST_CASE("quiet border zeroes the frame and leaves the interior alive", "[data][synthetic]") {
  const auto ds = gen_synthetic(3, 64, 30, 17, 0.05, 8, 2);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto s = ds.sample(i);
    double interior_mass = 0.0;
    for (std::size_t row = 0; row < 8; ++row)
      for (std::size_t col = 0; col < 8; ++col) {
        const double v = s[row * 8 + col];
        if (row < 2 || row >= 6 || col < 2 || col >= 6)
          REQUIRE(v == 0.0);
        else
          interior_mass += v;
      }
    REQUIRE(interior_mass > 0.0);
  }

  // border off reproduces the old behaviour bit for bit
  const auto plain = gen_synthetic(3, 64, 30, 17, 0.05);
  const auto same = gen_synthetic(3, 64, 30, 17, 0.05, 8, 0);
  REQUIRE(plain.features == same.features);

  REQUIRE_THROWS_AS(gen_synthetic(3, 60, 30, 17, 0.05, 8, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(gen_synthetic(3, 64, 30, 17, 0.05, 8, 4), std::invalid_argument);
}

TEST_CASE("finite beta large enough to overflow the gamma sum still covers", "[data][partition]") {
  const auto ds = gen_synthetic(4, 4, 300, 13);
  const auto plan = dirichlet_partition(ds.labels, 10, 1e308, 21);
  const auto shards = client_samples(plan, 10);
  std::set<std::size_t> seen;
  for (const auto& s : shards) {
    REQUIRE(!s.empty());
    seen.insert(s.begin(), s.end());
  }
  REQUIRE(seen.size() == 300);
}

TEST_CASE("small beta concentrates classes", "[data][partition]") {
  const auto ds = gen_synthetic(10, 4, 10000, 13);
  const auto plan = dirichlet_partition(ds.labels, 10, 0.1, 33);
  const auto shards = client_samples(plan, 10);
  bool any_concentrated = false;
  for (const auto& shard : shards) {
    std::vector<double> hist(10, 0.0);
    for (auto i : shard) hist[std::size_t(ds.labels[i])] += 1.0;
    const double top = *std::max_element(hist.begin(), hist.end());
    if (top / double(shard.size()) > 0.6) any_concentrated = true;
  }
  REQUIRE(any_concentrated);
  // determinism
  const auto again = dirichlet_partition(ds.labels, 10, 0.1, 33);
  REQUIRE(again.assignment == plan.assignment);
}

TEST_CASE("partition repairs empty clients and validates input", "[data][partition]") {
  // 12 samples over 12 clients with tiny beta: Dirichlet mass collapses onto
  // few clients, so the repair loop must fill the rest
  std::vector<int> labels(12, 0);
  const auto plan = dirichlet_partition(labels, 12, 0.05, 3);
  const auto shards = client_samples(plan, 12);
  for (const auto& s : shards) REQUIRE(s.size() == 1);

  REQUIRE_THROWS_AS(dirichlet_partition(labels, 13, 1.0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(dirichlet_partition(labels, 0, 1.0, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(dirichlet_partition(labels, 2, -1.0, 0), std::invalid_argument);
}

TEST_CASE("trigger_pixels: full plus and its four parts", "[data][trigger]") {
  TriggerSpec t;  // center (3,3), arm 2, side 28
  const auto full = trigger_pixels(t);
  std::set<std::size_t> want;
  for (int r = 1; r <= 5; ++r) want.insert(std::size_t(r) * 28 + 3);
  for (int c = 1; c <= 5; ++c) want.insert(std::size_t(3) * 28 + std::size_t(c));
  REQUIRE(full.size() == 9);
  REQUIRE(std::set<std::size_t>(full.begin(), full.end()) == want);

  std::set<std::size_t> uni;
  std::size_t total = 0;
  for (int part = 0; part < 4; ++part) {
    const auto px = trigger_pixels(t, part);
    total += px.size();
    uni.insert(px.begin(), px.end());
    REQUIRE((part == 0 ? px.size() == 3 : px.size() == 2));
  }
  REQUIRE(total == 9);  // disjoint
  REQUIRE(uni == want); // and their union is the whole plus

  TriggerSpec bad = t;
  bad.center_row = 0;
  REQUIRE_THROWS_AS(trigger_pixels(bad), std::invalid_argument);
  REQUIRE_THROWS_AS(trigger_pixels(t, 4), std::invalid_argument);
}

TEST_CASE("poison_dataset stamps, relabels, and is idempotent", "[data][poison]") {
  TriggerSpec t;
  t.image_side = 6;
  t.center_row = 3;
  t.center_col = 3;
  t.arm_len = 2;
  const auto ds = gen_synthetic(3, 36, 9, 42);

  const auto untouched = poison_dataset(ds, t, 0.0, 1);
  REQUIRE(untouched.features == ds.features);
  REQUIRE(untouched.labels == ds.labels);

  const auto all = poison_dataset(ds, t, 1.0, 1);
  const auto px = trigger_pixels(t);
  for (std::size_t i = 0; i < all.size(); ++i) {
    REQUIRE(all.labels[i] == t.target_label);
    for (auto p : px) REQUIRE(all.features[i * 36 + p] == 1.0);
  }

  const auto again = poison_dataset(all, t, 1.0, 99);
  REQUIRE(again.features == all.features);
  REQUIRE(again.labels == all.labels);

  // floor(0.5 * 9) = 4 samples poisoned, deterministically per seed
  const auto half = poison_dataset(ds, t, 0.5, 7);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < half.size(); ++i)
    if (half.labels[i] != ds.labels[i] ||
        !std::equal(half.sample(i).begin(), half.sample(i).end(), ds.sample(i).begin()))
      ++changed;
  REQUIRE(changed <= 4);
  const auto half2 = poison_dataset(ds, t, 0.5, 7);
  REQUIRE(half.features == half2.features);

  TriggerSpec wrong = t;
  wrong.image_side = 5;
  REQUIRE_THROWS_AS(poison_dataset(ds, wrong, 0.5, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(poison_dataset(ds, t, 1.5, 1), std::invalid_argument);
}

TEST_CASE("make_backdoor_testset excludes target-class samples", "[data][poison]") {
  TriggerSpec t;
  t.image_side = 6;
  const auto ds = gen_synthetic(3, 36, 9, 42);  // labels 0,1,2 three times each
  const auto bd = make_backdoor_testset(ds, t);
  REQUIRE(bd.size() == 6);  // the three target-class (0) samples dropped
  const auto px = trigger_pixels(t);
  for (std::size_t i = 0; i < bd.size(); ++i) {
    REQUIRE(bd.labels[i] != t.target_label);  // originals kept
    for (auto p : px) REQUIRE(bd.features[i * 36 + p] == 1.0);
  }
}
