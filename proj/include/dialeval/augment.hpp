#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dialeval {

enum class AugmentKind { translation, paraphrase };
std::string_view to_string(AugmentKind k);

/// An original sentence and one machine-produced variant of it, with the
/// externally computed quality (QE score or embedding cosine similarity).
struct AugmentedPair {
  std::string source_id;
  std::string original;
  std::string variant;
  double quality = 0.0;
  AugmentKind kind = AugmentKind::translation;
  std::string language;

  bool operator==(const AugmentedPair&) const = default;
};

enum class SelectionDirection { highest_quality, lowest_quality };

struct SelectionPolicy {
  double fraction = 1.0;
  SelectionDirection direction = SelectionDirection::highest_quality;
};

/// Number of items kept: max(1, floor(fraction * n)).
std::size_t selection_size(double fraction, std::size_t n);

/// Ranks by quality (stable: ties keep input order) and keeps the top
/// selection_size() items in ranked order.
std::vector<AugmentedPair> rank_select(const std::vector<AugmentedPair>& pairs, const SelectionPolicy& policy);

/// rank_select (highest quality) for each fraction; results are nested.
std::map<double, std::vector<AugmentedPair>> proportion_sweep(const std::vector<AugmentedPair>& pairs,
                                                              const std::vector<double>& fractions);

/// Splits by (language, kind) in first-appearance order.
std::vector<std::vector<AugmentedPair>> partition_by_language(const std::vector<AugmentedPair>& pairs);

/// rank_select applied to each (language, kind) partition; concatenated in
/// partition order.
std::vector<AugmentedPair> rank_select_partitioned(const std::vector<AugmentedPair>& pairs,
                                                   const SelectionPolicy& policy);

nlohmann::json to_json(const AugmentedPair& p);
AugmentedPair augmented_pair_from_json(const nlohmann::json& j);
std::vector<AugmentedPair> load_augmentations(const std::filesystem::path& path);

}  // namespace dialeval
