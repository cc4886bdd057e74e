#pragma once

// Flat parameter vectors plus the primitive direction and robust-statistics
// operations that the aggregation rules are built from: coordinate signs,
// top-k masks, sign alignment, cosine similarity, and median-centered
// z-scores.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace alignins {

// A model (or model-update) flattened to a single row of coordinates.
// Construction enforces the two invariants everything downstream assumes:
// at least one coordinate, and no NaN/Inf anywhere.
class ParamVector {
 public:
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty())
      throw std::invalid_argument("ParamVector: dimension must be at least 1");
    for (double v : values_)
      if (!std::isfinite(v))
        throw std::invalid_argument("ParamVector: coordinates must be finite");
  }

  static ParamVector zeros(std::size_t d) {
    return ParamVector(std::vector<double>(d, 0.0));
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> span() const { return {values_.data(), values_.size()}; }

  bool operator==(const ParamVector& other) const { return values_ == other.values_; }

 private:
  std::vector<double> values_;
};

// Elementwise signs with sgn(0) = 0. The constructor rejects anything
// outside {-1, 0, +1}.
class SignVector {
 public:
  explicit SignVector(std::vector<std::int8_t> signs) : signs_(std::move(signs)) {
    if (signs_.empty())
      throw std::invalid_argument("SignVector: dimension must be at least 1");
    for (auto s : signs_)
      if (s < -1 || s > 1)
        throw std::invalid_argument("SignVector: entries must be -1, 0, or +1");
  }

  std::size_t size() const { return signs_.size(); }
  std::int8_t operator[](std::size_t i) const { return signs_[i]; }
  const std::vector<std::int8_t>& values() const { return signs_; }

  bool operator==(const SignVector& other) const { return signs_ == other.signs_; }

 private:
  std::vector<std::int8_t> signs_;
};

// Indicator of the k largest-magnitude coordinates of some vector.
class TopKMask {
 public:
  TopKMask(std::vector<std::uint8_t> bits, std::size_t k)
      : bits_(std::move(bits)), k_(k) {
    if (bits_.empty()) throw std::invalid_argument("TopKMask: empty mask");
    std::size_t ones = 0;
    for (auto b : bits_) {
      if (b > 1) throw std::invalid_argument("TopKMask: bits must be 0 or 1");
      ones += b;
    }
    if (ones != k_)
      throw std::invalid_argument("TopKMask: popcount " + std::to_string(ones) +
                                  " does not match k=" + std::to_string(k_));
  }

  std::size_t size() const { return bits_.size(); }
  std::size_t k() const { return k_; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t k_;
};

inline std::int8_t sgn(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

inline SignVector sign(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("sign: empty input");
  std::vector<std::int8_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sgn(v[i]);
  return SignVector(std::move(out));
}

inline SignVector sign(const ParamVector& v) { return sign(v.span()); }

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double l2_norm(const ParamVector& v) { return l2_norm(v.span()); }

// Mask of the k largest |v_i|. Magnitude ties resolve toward the lower
// index, which keeps the result independent of any sort implementation.
inline TopKMask top_k_mask(std::span<const double> v, std::size_t k) {
  if (v.empty()) throw std::invalid_argument("top_k_mask: empty input");
  if (k < 1 || k > v.size())
    throw std::invalid_argument("top_k_mask: k must be in [1, d]");
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(v[a]) > std::abs(v[b]);
  });
  std::vector<std::uint8_t> bits(v.size(), 0);
  for (std::size_t i = 0; i < k; ++i) bits[idx[i]] = 1;
  return TopKMask(std::move(bits), k);
}

inline TopKMask top_k_mask(const ParamVector& v, std::size_t k) {
  return top_k_mask(v.span(), k);
}

// Fraction of coordinates on which the two sign patterns agree:
// 1 - (hamming distance of the sign vectors) / d.
inline double sign_alignment_ratio(const SignVector& x, const SignVector& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("sign_alignment_ratio: dimension mismatch");
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) ++mismatches;
  return 1.0 - static_cast<double>(mismatches) / static_cast<double>(x.size());
}

inline double sign_alignment_ratio(std::span<const double> x, std::span<const double> y) {
  return sign_alignment_ratio(sign(x), sign(y));
}

// Cosine similarity, clamped into [-1, 1] so accumulated rounding can never
// push it outside the domain callers feed into downstream statistics.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw std::domain_error("cosine_similarity: zero-norm input");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline double cosine_similarity(const ParamVector& a, const ParamVector& b) {
  return cosine_similarity(a.span(), b.span());
}

// Median of a sample; even counts average the two central order statistics.
inline double median(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

// Median-centered z-scores: (x_i - median) / sigma where sigma is the
// population standard deviation about the mean. A zero sigma (all values
// equal) maps everything to score 0 rather than dividing by zero.
inline std::vector<double> mz_scores(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mz_scores: empty input");
  const double med = median(values);
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / n);
  std::vector<double> out(values.size());
  if (sigma == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - med) / sigma;
  return out;
}

// --- small arithmetic helpers shared by the aggregation code -------------

inline void check_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b)
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
}

inline std::vector<double> vec_add(std::span<const double> a, std::span<const double> b) {
  check_same_dim(a.size(), b.size(), "vec_add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline std::vector<double> vec_sub(std::span<const double> a, std::span<const double> b) {
  check_same_dim(a.size(), b.size(), "vec_sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline std::vector<double> vec_scale(std::span<const double> a, double s) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

inline double vec_dot(std::span<const double> a, std::span<const double> b) {
  check_same_dim(a.size(), b.size(), "vec_dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  check_same_dim(a.size(), b.size(), "squared_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace alignins
