#pragma once

// Brute-force reference implementations used only by tests. They are written
// from the definitions, independently of the library code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <vector>

namespace oracle {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Covariance-from-definition Pearson r.
inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Explicit rank construction: rank of x[i] = 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double v : x) {
      if (v < x[i]) ++less;
      if (v == x[i]) ++equal;
    }
    r[i] = 1.0 + static_cast<double>(less) + (static_cast<double>(equal) - 1.0) / 2.0;
  }
  return r;
}

inline double spearman_r(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson_r(average_ranks(x), average_ranks(y));
}

/// Exact two-sided permutation p-value: fraction of all n! orderings of y
/// whose |r| is at least the observed |r|.
template <class Stat>
double exact_permutation_p(const std::vector<double>& x, std::vector<double> y, Stat stat) {
  const double observed = std::abs(stat(x, y));
  std::sort(y.begin(), y.end());
  std::size_t total = 0, extreme = 0;
  do {
    ++total;
    if (std::abs(stat(x, y)) >= observed - 1e-12) ++extreme;
  } while (std::next_permutation(y.begin(), y.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

/// Indices kept by sort-and-slice selection: stable sort by quality in the
/// requested direction, then the first max(1, floor(f * n)).
inline std::vector<std::size_t> sort_and_slice(const std::vector<double>& quality, double fraction, bool highest) {
  std::vector<std::size_t> idx(quality.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Insertion sort keeps equal elements in input order without relying on std::stable_sort.
  for (std::size_t i = 1; i < idx.size(); ++i) {
    std::size_t j = i;
    while (j > 0) {
      const double a = quality[idx[j - 1]], b = quality[idx[j]];
      const bool out_of_order = highest ? a < b : a > b;
      if (!out_of_order) break;
      std::swap(idx[j - 1], idx[j]);
      --j;
    }
  }
  std::size_t k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(quality.size()) + 1e-9));
  k = std::clamp<std::size_t>(k, 1, quality.size());
  idx.resize(k);
  return idx;
}

/// Mean over instances of the mean absolute deviation from the instance mean.
inline double stability_mad(const std::vector<std::vector<double>>& runs) {
  const std::size_t n = runs.front().size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (const auto& r : runs) m += r[i];
    m /= static_cast<double>(runs.size());
    double dev = 0.0;
    for (const auto& r : runs) dev += std::abs(r[i] - m);
    total += dev / static_cast<double>(runs.size());
  }
  return total / static_cast<double>(n);
}

}  // namespace oracle
