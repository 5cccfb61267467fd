#include "dialeval/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "dialeval/error.hpp"

namespace dialeval {

using nlohmann::json;

namespace {

double signed_power(double r, double d) { return (r < 0 ? -1.0 : 1.0) * std::pow(std::abs(r), d); }

std::string aspect_label(const AspectId& a) { return a.empty() ? std::string("<aspect>") : "'" + a + "'"; }

}  // namespace

WeightRow crs_row(const SubmetricStats& stats, const CrsParams& params, const AspectId& aspect) {
  if (stats.empty()) throw degenerate_error("no submetric statistics for aspect " + aspect_label(aspect));
  WeightRow row;
  double mass = 0.0;
  std::size_t survivors = 0;
  for (const auto& [id, stat] : stats) {
    if (!stat || stat->p > params.mask_threshold) {
      row.masked.push_back(id);
      row.weights[id] = 0.0;
      continue;
    }
    const double u = signed_power(stat->r, params.exponent);
    row.weights[id] = u;
    mass += u;
    ++survivors;
  }

  // A mass below the guard also covers negative-dominated rows, where the
  // signed normalization would flip every survivor's sign.
  if (survivors > 0 && mass >= params.guard) {
    for (auto& [id, w] : row.weights) w /= mass;
    return row;
  }

  row.fallback = true;
  row.masked.clear();
  double positive = 0.0;
  for (const auto& [id, stat] : stats) {
    const double u = stat ? std::pow(std::max(stat->r, 0.0), params.exponent) : 0.0;
    row.weights[id] = u;
    positive += u;
  }
  if (!(positive > 0.0))
    throw degenerate_error("no usable submetric for aspect " + aspect_label(aspect) +
                           ": no significant submetric and none correlates positively");
  for (auto& [id, w] : row.weights) w /= positive;
  return row;
}

WeightTable crs_weights(const StatTable& stats, const CrsParams& params) {
  WeightTable table;
  table.params = params;
  for (const auto& [aspect, row_stats] : stats) table.rows[aspect] = crs_row(row_stats, params, aspect);
  return table;
}

WeightTable map_and_average(const std::vector<WeightTable>& tables, const AspectMapping& mapping,
                            const std::vector<AspectId>& targets) {
  if (tables.empty()) throw data_error("map_and_average: no weight tables");
  std::map<AspectId, std::vector<const WeightRow*>> contributors;
  std::vector<SubmetricId> universe;
  for (const auto& t : tables) {
    for (const auto& [aspect, row] : t.rows) {
      for (const auto& [id, w] : row.weights)
        if (std::find(universe.begin(), universe.end(), id) == universe.end()) universe.push_back(id);
      auto it = mapping.find(aspect);
      if (it == mapping.end()) continue;
      contributors[it->second].push_back(&row);
    }
  }
  std::sort(universe.begin(), universe.end());

  WeightTable out;
  out.params = tables.front().params;
  for (const auto& t : tables) out.sources.insert(out.sources.end(), t.sources.begin(), t.sources.end());

  std::vector<AspectId> required = targets;
  if (required.empty())
    for (const auto& [dev, test] : mapping) required.push_back(test);
  for (const auto& test : required)
    if (!contributors.contains(test))
      throw data_error("map_and_average: test aspect '" + test + "' has no contributing development rows");
  for (const auto& [test, rows] : contributors) {
    WeightRow merged;
    double mass = 0.0;
    for (const auto& id : universe) {
      double sum = 0.0;
      for (const WeightRow* r : rows)
        if (auto it = r->weights.find(id); it != r->weights.end()) sum += it->second;
      const double avg = sum / static_cast<double>(rows.size());
      merged.weights[id] = avg;
      mass += avg;
    }
    if (std::abs(mass) < 1e-12) throw degenerate_error("map_and_average: weights for '" + test + "' cancel out");
    for (auto& [id, w] : merged.weights) w /= mass;
    merged.fallback = std::any_of(rows.begin(), rows.end(), [](const WeightRow* r) { return r->fallback; });
    out.rows[test] = std::move(merged);
  }
  return out;
}

double fuse(const std::map<SubmetricId, double>& scores, const WeightRow& row) {
  double total = 0.0;
  for (const auto& [id, w] : row.weights) {
    if (w == 0.0) continue;
    auto it = scores.find(id);
    if (it == scores.end()) throw data_error("fuse: missing score for weighted submetric " + id.key());
    total += w * it->second;
  }
  return std::clamp(total, 0.0, 1.0);
}

json to_json(const WeightTable& t) {
  json rows = json::object();
  for (const auto& [aspect, row] : t.rows) {
    json weights = json::object();
    for (const auto& [id, w] : row.weights) weights[id.key()] = w;
    json masked = json::array();
    for (const auto& id : row.masked) masked.push_back(id.key());
    rows[aspect] = {{"weights", std::move(weights)}, {"fallback", row.fallback}, {"masked", std::move(masked)}};
  }
  return {{"mask_threshold", t.params.mask_threshold},
          {"exponent", t.params.exponent},
          {"guard", t.params.guard},
          {"sources", t.sources},
          {"rows", std::move(rows)}};
}

WeightTable weight_table_from_json(const json& j) {
  WeightTable t;
  try {
    t.params.mask_threshold = j.at("mask_threshold").get<double>();
    t.params.exponent = j.at("exponent").get<double>();
    t.params.guard = j.value("guard", 0.1);
    t.sources = j.value("sources", std::vector<std::string>{});
    for (const auto& [aspect, row] : j.at("rows").items()) {
      WeightRow r;
      for (const auto& [key, w] : row.at("weights").items()) r.weights[SubmetricId::parse(key)] = w.get<double>();
      r.fallback = row.value("fallback", false);
      for (const auto& m : row.value("masked", json::array())) r.masked.push_back(SubmetricId::parse(m.get<std::string>()));
      t.rows[aspect] = std::move(r);
    }
  } catch (const json::exception& e) {
    throw data_error(std::string("weight table: ") + e.what());
  }
  return t;
}

}  // namespace dialeval
