#include "dialeval/report.hpp"

#include <algorithm>
#include <set>

#include <spdlog/fmt/fmt.h>

namespace dialeval {

using nlohmann::json;

namespace {

struct Acc {
  double s = 0.0, p = 0.0;
  std::size_t ns = 0, np = 0, cells = 0;

  void add(const ReportCell& c) {
    ++cells;
    if (c.spearman) {
      s += c.spearman->r;
      ++ns;
    }
    if (c.pearson) {
      p += c.pearson->r;
      ++np;
    }
  }
  ReportAverage finish(Level level, std::string key) const {
    ReportAverage a{level, std::move(key), std::nullopt, std::nullopt, cells};
    if (ns) a.spearman = s / static_cast<double>(ns);
    if (np) a.pearson = p / static_cast<double>(np);
    return a;
  }
};

json stat_json(const std::optional<CorrelationStat>& s) {
  if (!s) return nullptr;
  return {{"r", s->r}, {"p", s->p}, {"n", s->n}};
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt_r(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("n/a"); }

}  // namespace

EvalReport build_report(const std::vector<ReportInput>& inputs, Exec exec) {
  std::vector<CorrelationCell> cells;
  cells.reserve(inputs.size());
  for (const auto& in : inputs) cells.push_back({in.fused, in.human});
  const auto sp = correlate_cells(cells, CorrelationKind::spearman, exec);
  const auto pe = correlate_cells(cells, CorrelationKind::pearson, exec);

  EvalReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& in = inputs[i];
    report.cells.push_back({in.dataset, in.language, in.level, in.aspect, in.fused.size(), sp[i], pe[i]});
  }
  std::sort(report.cells.begin(), report.cells.end(), [](const ReportCell& a, const ReportCell& b) {
    return std::tie(a.level, a.dataset, a.aspect) < std::tie(b.level, b.dataset, b.aspect);
  });

  std::map<std::pair<Level, std::string>, Acc> by_dataset, by_language;
  for (const auto& c : report.cells) {
    by_dataset[{c.level, c.dataset}].add(c);
    by_language[{c.level, c.language}].add(c);
  }
  for (const auto& [k, acc] : by_dataset) report.dataset_averages.push_back(acc.finish(k.first, k.second));
  std::map<Level, Acc> overall;
  for (const auto& [k, acc] : by_language) {
    auto avg = acc.finish(k.first, k.second);
    auto& o = overall[k.first];
    ++o.cells;
    if (avg.spearman) {
      o.s += *avg.spearman;
      ++o.ns;
    }
    if (avg.pearson) {
      o.p += *avg.pearson;
      ++o.np;
    }
    report.language_averages.push_back(std::move(avg));
  }
  for (const auto& [level, acc] : overall) report.overall.push_back(acc.finish(level, "ML-AVG"));
  return report;
}

json to_json(const EvalReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"dataset", c.dataset},
                     {"language", c.language},
                     {"level", to_string(c.level)},
                     {"aspect", c.aspect},
                     {"n", c.n},
                     {"spearman", stat_json(c.spearman)},
                     {"pearson", stat_json(c.pearson)}});
  auto averages = [](const std::vector<ReportAverage>& v) {
    json out = json::array();
    for (const auto& a : v)
      out.push_back({{"level", to_string(a.level)},
                     {"key", a.key},
                     {"cells", a.cells},
                     {"spearman", opt_json(a.spearman)},
                     {"pearson", opt_json(a.pearson)}});
    return out;
  };
  return {{"cells", cells},
          {"dataset_averages", averages(report.dataset_averages)},
          {"language_averages", averages(report.language_averages)},
          {"overall", averages(report.overall)}};
}

std::string render_text(const EvalReport& report) {
  std::string out;
  std::set<Level> levels;
  for (const auto& c : report.cells) levels.insert(c.level);

  for (Level level : levels) {
    std::vector<AspectId> aspects;
    std::vector<std::pair<std::string, std::string>> rows;  // dataset, language
    std::map<std::pair<std::string, AspectId>, const ReportCell*> grid;
    for (const auto& c : report.cells) {
      if (c.level != level) continue;
      if (std::find(aspects.begin(), aspects.end(), c.aspect) == aspects.end()) aspects.push_back(c.aspect);
      if (std::find(rows.begin(), rows.end(), std::pair{c.dataset, c.language}) == rows.end())
        rows.emplace_back(c.dataset, c.language);
      grid[{c.dataset, c.aspect}] = &c;
    }
    std::size_t name_w = 7;
    for (const auto& r : rows) name_w = std::max(name_w, r.first.size());
    std::vector<std::size_t> col_w;
    for (const auto& a : aspects) col_w.push_back(std::max<std::size_t>(a.size(), 7));

    for (const bool use_spearman : {true, false}) {
      out += fmt::format("== {} level, {} ==\n", to_string(level), use_spearman ? "Spearman" : "Pearson");
      out += fmt::format("{:<{}}  {:<8}", "dataset", name_w, "lang");
      for (std::size_t i = 0; i < aspects.size(); ++i) out += fmt::format("  {:>{}}", aspects[i], col_w[i]);
      out += fmt::format("  {:>7}\n", "AVG");
      for (const auto& [ds, lang] : rows) {
        out += fmt::format("{:<{}}  {:<8}", ds, name_w, lang);
        for (std::size_t i = 0; i < aspects.size(); ++i) {
          std::optional<double> r;
          if (auto it = grid.find({ds, aspects[i]}); it != grid.end()) {
            const auto& stat = use_spearman ? it->second->spearman : it->second->pearson;
            if (stat) r = stat->r;
          }
          out += fmt::format("  {:>{}}", fmt_r(r), col_w[i]);
        }
        for (const auto& a : report.dataset_averages)
          if (a.level == level && a.key == ds) out += fmt::format("  {:>7}", fmt_r(use_spearman ? a.spearman : a.pearson));
        out += '\n';
      }
      for (const auto& a : report.language_averages)
        if (a.level == level)
          out += fmt::format("avg[{}]  {}\n", a.key, fmt_r(use_spearman ? a.spearman : a.pearson));
      for (const auto& a : report.overall)
        if (a.level == level) out += fmt::format("ML-AVG  {}\n", fmt_r(use_spearman ? a.spearman : a.pearson));
      out += '\n';
    }
  }
  return out;
}

}  // namespace dialeval
