#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialeval/corpus.hpp"
#include "dialeval/stats.hpp"
#include "dialeval/submetric.hpp"

namespace dialeval {

/// Correlation of each submetric with one aspect. nullopt marks a submetric
/// whose correlation is undefined (zero variance); it is always masked.
using SubmetricStats = std::map<SubmetricId, std::optional<CorrelationStat>>;
using StatTable = std::map<AspectId, SubmetricStats>;

struct CrsParams {
  double mask_threshold = 0.05;  // submetrics with p above this are masked
  double exponent = 2.0;         // weights follow sign(r) * |r|^exponent
  double guard = 0.1;            // minimum signed mass before falling back
};

struct WeightRow {
  std::map<SubmetricId, double> weights;
  bool fallback = false;
  std::vector<SubmetricId> masked;
};

struct WeightTable {
  std::map<AspectId, WeightRow> rows;
  CrsParams params;
  std::vector<std::string> sources;
};

/// Significance-masked, sign-preserving correlation re-scaling for one
/// aspect. Survivors (p <= threshold) get u = sign(r)|r|^d normalized by the
/// signed sum. When nothing survives or the signed sum falls below the
/// guard, weights revert to max(r, 0)^d over all defined submetrics,
/// normalized to 1. Throws Error(degenerate) when no submetric correlates
/// positively.
WeightRow crs_row(const SubmetricStats& stats, const CrsParams& params, const AspectId& aspect = {});
WeightTable crs_weights(const StatTable& stats, const CrsParams& params = {});

/// Development aspect name -> test aspect name (many-to-one).
using AspectMapping = std::map<AspectId, AspectId>;

/// Renames rows through the mapping and averages each submetric's weight
/// over every contributing (table, row); absent submetrics count as 0.
/// Rows are renormalized by their signed sum. Every aspect in `targets`
/// (default: the whole image of the mapping) must receive a contributor.
WeightTable map_and_average(const std::vector<WeightTable>& tables, const AspectMapping& mapping,
                            const std::vector<AspectId>& targets = {});

/// sum_i w_i * s_i, clamped to [0, 1]. Throws Error(data) when a submetric
/// with nonzero weight has no score.
double fuse(const std::map<SubmetricId, double>& scores, const WeightRow& row);

nlohmann::json to_json(const WeightTable& t);
WeightTable weight_table_from_json(const nlohmann::json& j);

}  // namespace dialeval
