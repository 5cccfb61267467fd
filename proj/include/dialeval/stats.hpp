#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dialeval/parallel.hpp"

namespace dialeval {

struct CorrelationStat {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

enum class CorrelationKind { spearman, pearson };

/// Sample Pearson correlation with a two-sided Student-t p-value (df = n-2).
/// Throws Error(data) on length mismatch or n < 3 and Error(degenerate) when
/// either input is constant.
CorrelationStat pearson(std::span<const double> x, std::span<const double> y);

/// Pearson over fractional ranks (ties get their average rank).
CorrelationStat spearman(std::span<const double> x, std::span<const double> y);

CorrelationStat correlate(CorrelationKind kind, std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of the positions they span.
std::vector<double> fractional_ranks(std::span<const double> x);

/// Two-sided p for H0: rho = 0 via t = r * sqrt((n-2)/(1-r^2)).
double correlation_pvalue(double r, std::size_t n);

/// One (x, y) pair to correlate; batches of these back weight estimation
/// and report generation.
struct CorrelationCell {
  std::vector<double> x;
  std::vector<double> y;
};

/// Correlates every cell. Degenerate cells (constant input, n < 3) yield
/// nullopt instead of throwing. The OpenMP kernel and the serial reference
/// return identical results.
std::vector<std::optional<CorrelationStat>> correlate_cells(const std::vector<CorrelationCell>& cells,
                                                            CorrelationKind kind, Exec exec = Exec::parallel);

}  // namespace dialeval
