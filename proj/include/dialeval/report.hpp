#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialeval/corpus.hpp"
#include "dialeval/parallel.hpp"
#include "dialeval/stats.hpp"

namespace dialeval {

/// Fused scores and normalized human annotations for one
/// (dataset, level, aspect) cell, aligned by instance.
struct ReportInput {
  std::string dataset;
  std::string language;
  Level level = Level::turn;
  AspectId aspect;
  std::vector<double> fused;
  std::vector<double> human;
};

struct ReportCell {
  std::string dataset;
  std::string language;
  Level level = Level::turn;
  AspectId aspect;
  std::size_t n = 0;
  std::optional<CorrelationStat> spearman;  // nullopt: undefined (constant input or n < 3)
  std::optional<CorrelationStat> pearson;
};

/// Mean r over the defined cells of a group.
struct ReportAverage {
  Level level = Level::turn;
  std::string key;  // dataset name, language tag, or "ML-AVG"
  std::optional<double> spearman;
  std::optional<double> pearson;
  std::size_t cells = 0;  // cells in the group, defined or not
};

struct EvalReport {
  std::vector<ReportCell> cells;
  std::vector<ReportAverage> dataset_averages;   // across aspects
  std::vector<ReportAverage> language_averages;  // across aspects and datasets of a language
  std::vector<ReportAverage> overall;            // mean of the language averages, per level
};

EvalReport build_report(const std::vector<ReportInput>& inputs, Exec exec = Exec::parallel);

nlohmann::json to_json(const EvalReport& report);
/// Aligned text tables, one Spearman and one Pearson block per level.
std::string render_text(const EvalReport& report);

}  // namespace dialeval
