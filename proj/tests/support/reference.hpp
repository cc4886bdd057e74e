#pragma once

// Straight-line reference implementations used only as test oracles. These
// are written from the algorithm definitions on purpose, sharing no code
// with the library headers, so agreement between the two is meaningful.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace refimpl {

struct Update {
  int id;
  std::vector<double> d;
};

inline int r_sgn(double x) {
  if (x > 0.0) return 1;
  if (x < 0.0) return -1;
  return 0;
}

inline double r_median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

inline std::vector<double> r_mz(const std::vector<double>& xs) {
  const double med = r_median(xs);
  double mu = 0.0;
  for (double x : xs) mu += x;
  mu /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mu) * (x - mu);
  const double sd = std::sqrt(var / static_cast<double>(xs.size()));
  std::vector<double> out(xs.size(), 0.0);
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - med) / sd;
  return out;
}

inline double r_norm(const std::vector<double>& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

inline double r_cos(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  double c = dot / (r_norm(a) * r_norm(b));
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

// top-k of |v| by k repeated max scans; strict > keeps the earliest index on
// ties, matching the documented tie rule through a different mechanism.
inline std::vector<bool> r_topk(const std::vector<double>& v, std::size_t k) {
  std::vector<bool> taken(v.size(), false);
  for (std::size_t pass = 0; pass < k; ++pass) {
    std::size_t best = v.size();
    double best_mag = -1.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (taken[j]) continue;
      const double mag = std::fabs(v[j]);
      if (mag > best_mag) {
        best_mag = mag;
        best = j;
      }
    }
    taken[best] = true;
  }
  return taken;
}

struct AlignInsRef {
  std::vector<int> selected;
  double clip = 0.0;
  std::vector<double> aggregated;
  bool flagged = false;
};

inline AlignInsRef alignins_reference(std::vector<Update> ups,
                                      const std::vector<double>& theta,
                                      double lambda_c, double lambda_s,
                                      double k_fraction) {
  std::sort(ups.begin(), ups.end(),
            [](const Update& a, const Update& b) { return a.id < b.id; });
  const std::size_t n = ups.size();
  const std::size_t dim = theta.size();
  std::size_t k = static_cast<std::size_t>(
      std::llround(k_fraction * static_cast<double>(dim)));
  if (k < 1) k = 1;
  if (k > dim) k = dim;

  std::vector<double> tda(n);
  for (std::size_t i = 0; i < n; ++i)
    tda[i] = r_norm(ups[i].d) == 0.0 ? 0.0 : r_cos(ups[i].d, theta);

  std::vector<int> p(dim, 0);
  for (std::size_t j = 0; j < dim; ++j) {
    int s = 0;
    for (std::size_t i = 0; i < n; ++i) s += r_sgn(ups[i].d[j]);
    p[j] = r_sgn(static_cast<double>(s));
  }

  std::vector<double> mpsa(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto mask = r_topk(ups[i].d, k);
    std::size_t bad = 0;
    for (std::size_t j = 0; j < dim; ++j)
      if (mask[j] && r_sgn(ups[i].d[j]) != p[j]) ++bad;
    mpsa[i] = 1.0 - static_cast<double>(bad) / static_cast<double>(k);
  }

  const auto zc = r_mz(tda);
  const auto zs = r_mz(mpsa);

  AlignInsRef out;
  std::vector<std::size_t> sel;
  for (std::size_t i = 0; i < n; ++i)
    if (std::fabs(zc[i]) <= lambda_c && std::fabs(zs[i]) <= lambda_s)
      sel.push_back(i);
  if (sel.empty()) {
    out.flagged = true;
    out.aggregated.assign(dim, 0.0);
    return out;
  }

  std::vector<double> norms;
  for (auto i : sel) norms.push_back(r_norm(ups[i].d));
  out.clip = r_median(norms);

  out.aggregated.assign(dim, 0.0);
  for (std::size_t s = 0; s < sel.size(); ++s) {
    double f = 1.0;
    if (norms[s] > 0.0 && out.clip / norms[s] < 1.0) f = out.clip / norms[s];
    for (std::size_t j = 0; j < dim; ++j)
      out.aggregated[j] += ups[sel[s]].d[j] * f;
  }
  for (auto& x : out.aggregated) x /= static_cast<double>(sel.size());
  for (auto i : sel) out.selected.push_back(ups[i].id);
  return out;
}

// full-table multi-krum oracle
inline std::vector<int> multi_krum_reference_ids(std::vector<Update> ups,
                                                 std::size_t m,
                                                 std::size_t select_count) {
  std::sort(ups.begin(), ups.end(),
            [](const Update& a, const Update& b) { return a.id < b.id; });
  const std::size_t n = ups.size();
  std::vector<std::vector<double>> d2(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < ups[i].d.size(); ++c) {
        const double diff = ups[i].d[c] - ups[j].d[c];
        s += diff * diff;
      }
      d2[i][j] = s;
    }
  std::vector<std::pair<double, int>> scored;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(d2[i][j]);
    std::sort(row.begin(), row.end());
    double s = 0.0;
    for (std::size_t q = 0; q < n - m - 2; ++q) s += row[q];
    scored.emplace_back(s, ups[i].id);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<int> ids;
  for (std::size_t i = 0; i < select_count; ++i) ids.push_back(scored[i].second);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace refimpl
