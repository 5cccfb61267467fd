#include "dialeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "dialeval/error.hpp"

namespace dialeval {

namespace {

void check_inputs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw data_error("correlation: length mismatch");
  if (x.size() < 3) throw data_error("correlation: need at least 3 samples");
}

}  // namespace

double correlation_pvalue(double r, std::size_t n) {
  if (n < 3) throw data_error("correlation p-value: need at least 3 samples");
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = std::abs(r) * std::sqrt(df / (1.0 - r2));
  const boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
  return std::clamp(p, 0.0, 1.0);
}

CorrelationStat pearson(std::span<const double> x, std::span<const double> y) {
  check_inputs(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw degenerate_error("correlation undefined: zero-variance input");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return {r, correlation_pvalue(r, x.size()), x.size()};
}

std::vector<double> fractional_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

CorrelationStat spearman(std::span<const double> x, std::span<const double> y) {
  check_inputs(x, y);
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  return pearson(rx, ry);
}

CorrelationStat correlate(CorrelationKind kind, std::span<const double> x, std::span<const double> y) {
  return kind == CorrelationKind::spearman ? spearman(x, y) : pearson(x, y);
}

namespace {

std::optional<CorrelationStat> try_correlate(const CorrelationCell& cell, CorrelationKind kind) {
  if (cell.x.size() != cell.y.size() || cell.x.size() < 3) return std::nullopt;
  try {
    return correlate(kind, cell.x, cell.y);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<std::optional<CorrelationStat>> correlate_cells(const std::vector<CorrelationCell>& cells,
                                                            CorrelationKind kind, Exec exec) {
  std::vector<std::optional<CorrelationStat>> out(cells.size());
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = try_correlate(cells[i], kind);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = try_correlate(cells[i], kind);
  }
  return out;
}

}  // namespace dialeval
