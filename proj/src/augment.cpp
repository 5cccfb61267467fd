#include "dialeval/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dialeval/error.hpp"
#include "dialeval/text.hpp"

namespace dialeval {

using nlohmann::json;

std::string_view to_string(AugmentKind k) { return k == AugmentKind::translation ? "translation" : "paraphrase"; }

std::size_t selection_size(double fraction, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

namespace {

void check_policy(const std::vector<AugmentedPair>& pairs, double fraction) {
  if (pairs.empty()) throw data_error("rank_select: empty input");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw data_error("rank_select: fraction must lie in (0, 1]");
  const AugmentKind kind = pairs.front().kind;
  for (const auto& p : pairs) {
    if (p.kind != kind) throw data_error("rank_select: mixed augmentation kinds");
    if (!std::isfinite(p.quality)) throw data_error("rank_select: non-finite quality for '" + p.source_id + "'");
  }
}

}  // namespace

std::vector<AugmentedPair> rank_select(const std::vector<AugmentedPair>& pairs, const SelectionPolicy& policy) {
  check_policy(pairs, policy.fraction);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  if (policy.direction == SelectionDirection::highest_quality) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pairs[a].quality > pairs[b].quality; });
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pairs[a].quality < pairs[b].quality; });
  }
  const std::size_t k = selection_size(policy.fraction, pairs.size());
  std::vector<AugmentedPair> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(pairs[order[i]]);
  return out;
}

std::map<double, std::vector<AugmentedPair>> proportion_sweep(const std::vector<AugmentedPair>& pairs,
                                                              const std::vector<double>& fractions) {
  std::map<double, std::vector<AugmentedPair>> out;
  // Every fraction takes a prefix of the same stable ranking, hence nesting.
  for (double f : fractions) out[f] = rank_select(pairs, {f, SelectionDirection::highest_quality});
  return out;
}

std::vector<std::vector<AugmentedPair>> partition_by_language(const std::vector<AugmentedPair>& pairs) {
  std::vector<std::vector<AugmentedPair>> parts;
  std::map<std::pair<std::string, AugmentKind>, std::size_t> index;
  for (const auto& p : pairs) {
    auto [it, inserted] = index.try_emplace({p.language, p.kind}, parts.size());
    if (inserted) parts.emplace_back();
    parts[it->second].push_back(p);
  }
  return parts;
}

std::vector<AugmentedPair> rank_select_partitioned(const std::vector<AugmentedPair>& pairs,
                                                   const SelectionPolicy& policy) {
  std::vector<AugmentedPair> out;
  for (const auto& part : partition_by_language(pairs)) {
    auto sel = rank_select(part, policy);
    out.insert(out.end(), sel.begin(), sel.end());
  }
  return out;
}

json to_json(const AugmentedPair& p) {
  return {{"source_id", p.source_id}, {"original", p.original},          {"variant", p.variant},
          {"quality", p.quality},     {"kind", std::string(to_string(p.kind))}, {"language", p.language}};
}

AugmentedPair augmented_pair_from_json(const json& j) {
  AugmentedPair p;
  try {
    p.source_id = j.at("source_id").get<std::string>();
    p.original = j.at("original").get<std::string>();
    p.variant = j.at("variant").get<std::string>();
    p.quality = j.at("quality").get<double>();
    p.language = text::lower(j.at("language").get<std::string>());
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "translation")
      p.kind = AugmentKind::translation;
    else if (kind == "paraphrase")
      p.kind = AugmentKind::paraphrase;
    else
      throw data_error("unknown augmentation kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw data_error(std::string("augmentation record: ") + e.what());
  }
  if (!std::isfinite(p.quality)) throw data_error("augmentation '" + p.source_id + "': quality must be finite");
  return p;
}

std::vector<AugmentedPair> load_augmentations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open augmentation file '" + path.string() + "'");
  std::vector<AugmentedPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(augmented_pair_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw data_error(path.string() + ": line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    } catch (const Error& e) {
      throw data_error(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace dialeval
