#pragma once

// Dataset plumbing: IDX ingestion, synthetic Gaussian-cluster generation,
// Dirichlet non-IID partitioning, and plus-trigger label poisoning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignins/rng.hpp"

namespace alignins {

// IDX parsing failures, split by cause so callers (and tests) can tell a
// wrong file apart from a short read or mismatched pair.
class idx_parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class idx_bad_magic : public idx_parse_error {
 public:
  using idx_parse_error::idx_parse_error;
};
class idx_truncated : public idx_parse_error {
 public:
  using idx_parse_error::idx_parse_error;
};
class idx_count_mismatch : public idx_parse_error {
 public:
  using idx_parse_error::idx_parse_error;
};

struct LabeledDataset {
  std::vector<double> features;  // n_samples x feat_dim, row-major, in [0,1]
  std::vector<int> labels;       // in [0, num_classes)
  std::size_t feat_dim = 0;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::span<const double> sample(std::size_t i) const {
    return {features.data() + i * feat_dim, feat_dim};
  }
};

inline void validate_dataset(const LabeledDataset& ds, const char* where) {
  if (ds.feat_dim == 0 || ds.labels.empty())
    throw std::invalid_argument(std::string(where) + ": empty dataset");
  if (ds.features.size() != ds.labels.size() * ds.feat_dim)
    throw std::invalid_argument(std::string(where) + ": feature/label size mismatch");
  for (int y : ds.labels)
    if (y < 0 || y >= ds.num_classes)
      throw std::invalid_argument(std::string(where) + ": label out of range");
  for (double x : ds.features)
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument(std::string(where) + ": feature outside [0,1]");
}

namespace detail {

inline std::uint32_t read_u32_be(const std::vector<unsigned char>& buf,
                                 std::size_t off, const std::string& path) {
  if (off + 4 > buf.size())
    throw idx_truncated("idx file truncated in header: " + path);
  return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
         (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw idx_parse_error("cannot open idx file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

// Reads a big-endian IDX image/label file pair (the MNIST on-disk format).
// Pixels are scaled to [0,1]; the sample counts of the two files must agree.
inline LabeledDataset load_idx(const std::string& images_path,
                               const std::string& labels_path) {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);

  if (detail::read_u32_be(img, 0, images_path) != 0x00000803u)
    throw idx_bad_magic("expected image magic 0x00000803: " + images_path);
  if (detail::read_u32_be(lab, 0, labels_path) != 0x00000801u)
    throw idx_bad_magic("expected label magic 0x00000801: " + labels_path);

  const std::uint32_t n_img = detail::read_u32_be(img, 4, images_path);
  const std::uint32_t rows = detail::read_u32_be(img, 8, images_path);
  const std::uint32_t cols = detail::read_u32_be(img, 12, images_path);
  const std::uint32_t n_lab = detail::read_u32_be(lab, 4, labels_path);
  if (n_img != n_lab)
    throw idx_count_mismatch("image count " + std::to_string(n_img) +
                             " != label count " + std::to_string(n_lab));
  if (n_img == 0) throw idx_parse_error("idx pair holds zero samples");

  const std::size_t fd = std::size_t(rows) * cols;
  if (img.size() != 16 + std::size_t(n_img) * fd)
    throw idx_truncated("image payload size mismatch: " + images_path);
  if (lab.size() != 8 + std::size_t(n_lab))
    throw idx_truncated("label payload size mismatch: " + labels_path);

  LabeledDataset ds;
  ds.feat_dim = fd;
  ds.features.resize(std::size_t(n_img) * fd);
  ds.labels.resize(n_img);
  for (std::size_t i = 0; i < ds.features.size(); ++i)
    ds.features[i] = double(img[16 + i]) / 255.0;
  int max_label = 0;
  for (std::size_t i = 0; i < n_lab; ++i) {
    ds.labels[i] = int(lab[8 + i]);
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  validate_dataset(ds, "load_idx");
  return ds;
}

// One seeded Gaussian cluster per class, balanced round-robin labels
// (sample i has label i mod num_classes), features clamped into [0,1].
inline LabeledDataset gen_synthetic(int num_classes, std::size_t feat_dim,
                                    std::size_t n_samples, std::uint64_t seed,
                                    double noise_sigma = 0.08,
                                    std::size_t image_side = 0,
                                    std::size_t quiet_border = 0) {
  if (num_classes < 1 || feat_dim < 1 || n_samples < 1)
    throw std::invalid_argument("gen_synthetic: counts must be positive");
  if (!(noise_sigma >= 0.0))
    throw std::invalid_argument("gen_synthetic: noise_sigma must be nonnegative");
  if (quiet_border > 0) {
    if (image_side * image_side != feat_dim)
      throw std::invalid_argument("gen_synthetic: quiet border needs square images");
    if (2 * quiet_border >= image_side)
      throw std::invalid_argument("gen_synthetic: quiet border swallows the image");
  }
  Rng r(seed);
  std::vector<double> centroids(std::size_t(num_classes) * feat_dim);
  for (auto& c : centroids) c = r.uniform(0.2, 0.8);

  // Image data keeps an exactly-zero frame, like the background of digit
  // photos: the class signal lives in the interior and border pixels stay
  // dark for every sample, so nothing benign ever trains on them.
  std::vector<bool> quiet(feat_dim, false);
  if (quiet_border > 0)
    for (std::size_t row = 0; row < image_side; ++row)
      for (std::size_t col = 0; col < image_side; ++col)
        if (row < quiet_border || row >= image_side - quiet_border ||
            col < quiet_border || col >= image_side - quiet_border)
          quiet[row * image_side + col] = true;

  LabeledDataset ds;
  ds.feat_dim = feat_dim;
  ds.num_classes = num_classes;
  ds.labels.resize(n_samples);
  ds.features.resize(n_samples * feat_dim);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const int y = int(i % std::size_t(num_classes));
    ds.labels[i] = y;
    const double* c = centroids.data() + std::size_t(y) * feat_dim;
    for (std::size_t j = 0; j < feat_dim; ++j)
      ds.features[i * feat_dim + j] =
          quiet[j] ? 0.0 : std::clamp(c[j] + noise_sigma * r.normal(), 0.0, 1.0);
  }
  validate_dataset(ds, "gen_synthetic");
  return ds;
}

// Materializes a sample subset (e.g. one client's shard) as its own dataset.
inline LabeledDataset dataset_subset(const LabeledDataset& data,
                                     std::span<const std::size_t> indices) {
  if (indices.empty())
    throw std::invalid_argument("dataset_subset: empty index set");
  LabeledDataset out;
  out.feat_dim = data.feat_dim;
  out.num_classes = data.num_classes;
  out.labels.reserve(indices.size());
  out.features.reserve(indices.size() * data.feat_dim);
  for (std::size_t i : indices) {
    if (i >= data.size())
      throw std::out_of_range("dataset_subset: index out of range");
    const auto s = data.sample(i);
    out.features.insert(out.features.end(), s.begin(), s.end());
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

struct PartitionPlan {
  std::vector<int> assignment;  // per-sample client id
  double beta = std::numeric_limits<double>::infinity();  // inf = IID
};

inline constexpr double kIidBeta = std::numeric_limits<double>::infinity();

inline std::vector<std::vector<std::size_t>> client_samples(const PartitionPlan& plan,
                                                            int n_clients) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(n_clients));
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
    const int c = plan.assignment[i];
    if (c < 0 || c >= n_clients)
      throw std::invalid_argument("client_samples: assignment out of range");
    out[std::size_t(c)].push_back(i);
  }
  return out;
}

// Splits sample indices across clients. beta = inf (kIidBeta) gives a
// shuffled round-robin; otherwise each class's samples are divided by a
// Dir(beta) proportion draw. Clients left empty afterwards steal one sample
// from the currently largest client so every shard is trainable.
inline PartitionPlan dirichlet_partition(std::span<const int> labels, int n_clients,
                                         double beta, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n_clients < 1) throw std::invalid_argument("dirichlet_partition: n_clients < 1");
  if (std::size_t(n_clients) > n)
    throw std::invalid_argument("dirichlet_partition: more clients than samples");
  if (!(beta > 0.0))
    throw std::invalid_argument("dirichlet_partition: beta must be positive or IID");

  Rng r(seed);
  PartitionPlan plan;
  plan.beta = beta;
  plan.assignment.assign(n, 0);

  if (std::isinf(beta)) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    r.shuffle(idx);
    for (std::size_t i = 0; i < n; ++i)
      plan.assignment[idx[i]] = int(i % std::size_t(n_clients));
  } else {
    int max_label = 0;
    for (int y : labels) max_label = std::max(max_label, y);
    for (int cls = 0; cls <= max_label; ++cls) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == cls) idx.push_back(i);
      if (idx.empty()) continue;
      r.shuffle(idx);
      const auto prop = r.dirichlet(beta, std::size_t(n_clients));

      // floor + largest-remainder so the counts sum exactly to the class size
      const double total = double(idx.size());
      std::vector<std::size_t> cnt(static_cast<std::size_t>(n_clients));
      std::vector<std::pair<double, int>> rem;
      std::size_t assigned = 0;
      for (int c = 0; c < n_clients; ++c) {
        const double want = prop[std::size_t(c)] * total;
        cnt[std::size_t(c)] = std::size_t(want);
        assigned += cnt[std::size_t(c)];
        rem.emplace_back(-(want - std::floor(want)), c);  // descending remainder
      }
      std::sort(rem.begin(), rem.end());
      // wrap in case float fuzz leaves more leftovers than clients
      for (std::size_t k = 0; assigned < idx.size(); ++k, ++assigned)
        ++cnt[std::size_t(rem[k % rem.size()].second)];

      std::size_t pos = 0;
      for (int c = 0; c < n_clients; ++c)
        for (std::size_t k = 0; k < cnt[std::size_t(c)]; ++k)
          plan.assignment[idx[pos++]] = c;
    }
  }

  // empty-client repair: move one sample from the largest shard
  auto shards = client_samples(plan, n_clients);
  for (int c = 0; c < n_clients; ++c) {
    while (shards[std::size_t(c)].empty()) {
      int donor = -1;
      std::size_t best = 1;  // donors must keep at least one sample
      for (int other = 0; other < n_clients; ++other)
        if (shards[std::size_t(other)].size() > best) {
          best = shards[std::size_t(other)].size();
          donor = other;
        }
      if (donor < 0)
        throw std::invalid_argument("dirichlet_partition: cannot repair empty client");
      const std::size_t moved = shards[std::size_t(donor)].back();
      shards[std::size_t(donor)].pop_back();
      shards[std::size_t(c)].push_back(moved);
      plan.assignment[moved] = c;
    }
  }
  return plan;
}

struct TriggerSpec {
  int center_row = 3;
  int center_col = 3;
  int arm_len = 2;
  double value = 1.0;
  int target_label = 0;
  int image_side = 28;
};

// Flat pixel indices of the plus trigger, optionally restricted to one of
// the four distributed parts: 0 = upper arm plus the center pixel,
// 1 = lower arm, 2 = left arm, 3 = right arm.
inline std::vector<std::size_t> trigger_pixels(const TriggerSpec& t,
                                               std::optional<int> dba_part = {}) {
  if (t.arm_len < 1) throw std::invalid_argument("trigger_pixels: arm_len < 1");
  if (!(t.value >= 0.0 && t.value <= 1.0))
    throw std::invalid_argument("trigger_pixels: value outside [0,1]");
  if (t.center_row - t.arm_len < 0 || t.center_row + t.arm_len >= t.image_side ||
      t.center_col - t.arm_len < 0 || t.center_col + t.arm_len >= t.image_side)
    throw std::invalid_argument("trigger_pixels: trigger exceeds image bounds");
  if (dba_part && (*dba_part < 0 || *dba_part > 3))
    throw std::invalid_argument("trigger_pixels: dba_part must be in 0..3");

  auto flat = [&](int row, int col) {
    return std::size_t(row) * std::size_t(t.image_side) + std::size_t(col);
  };
  std::vector<std::size_t> px;
  const bool all = !dba_part.has_value();
  if (all || *dba_part == 0) {
    px.push_back(flat(t.center_row, t.center_col));
    for (int a = 1; a <= t.arm_len; ++a) px.push_back(flat(t.center_row - a, t.center_col));
  }
  if (all || *dba_part == 1)
    for (int a = 1; a <= t.arm_len; ++a) px.push_back(flat(t.center_row + a, t.center_col));
  if (all || *dba_part == 2)
    for (int a = 1; a <= t.arm_len; ++a) px.push_back(flat(t.center_row, t.center_col - a));
  if (all || *dba_part == 3)
    for (int a = 1; a <= t.arm_len; ++a) px.push_back(flat(t.center_row, t.center_col + a));
  std::sort(px.begin(), px.end());
  return px;
}

// Stamps the trigger onto a seeded floor(r*n)-sample subset and relabels
// those samples to the target class. Idempotent on already-stamped samples.
inline LabeledDataset poison_dataset(const LabeledDataset& data, const TriggerSpec& trigger,
                                     double poison_ratio, std::uint64_t seed,
                                     std::optional<int> dba_part = {}) {
  validate_dataset(data, "poison_dataset");
  if (!(poison_ratio >= 0.0 && poison_ratio <= 1.0))
    throw std::invalid_argument("poison_dataset: poison_ratio outside [0,1]");
  if (std::size_t(trigger.image_side) * std::size_t(trigger.image_side) != data.feat_dim)
    throw std::invalid_argument("poison_dataset: image_side^2 != feat_dim");
  if (trigger.target_label < 0 || trigger.target_label >= data.num_classes)
    throw std::invalid_argument("poison_dataset: target label out of range");

  const auto px = trigger_pixels(trigger, dba_part);
  LabeledDataset out = data;
  const std::size_t count = std::size_t(poison_ratio * double(data.size()));
  Rng r(seed);
  for (std::size_t i : r.sample_without_replacement(data.size(), count)) {
    for (std::size_t p : px) out.features[i * out.feat_dim + p] = trigger.value;
    out.labels[i] = trigger.target_label;
  }
  return out;
}

// Test-time backdoor set: every clean sample NOT already of the target class
// gets the full trigger; labels stay original (they are the RA reference).
inline LabeledDataset make_backdoor_testset(const LabeledDataset& clean,
                                            const TriggerSpec& trigger) {
  validate_dataset(clean, "make_backdoor_testset");
  if (std::size_t(trigger.image_side) * std::size_t(trigger.image_side) != clean.feat_dim)
    throw std::invalid_argument("make_backdoor_testset: image_side^2 != feat_dim");
  const auto px = trigger_pixels(trigger);
  LabeledDataset out;
  out.feat_dim = clean.feat_dim;
  out.num_classes = clean.num_classes;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (clean.labels[i] == trigger.target_label) continue;
    const auto s = clean.sample(i);
    const std::size_t base = out.features.size();
    out.features.insert(out.features.end(), s.begin(), s.end());
    for (std::size_t p : px) out.features[base + p] = trigger.value;
    out.labels.push_back(clean.labels[i]);
  }
  if (out.labels.empty())
    throw std::invalid_argument("make_backdoor_testset: every sample is target-class");
  return out;
}

}  // namespace alignins
