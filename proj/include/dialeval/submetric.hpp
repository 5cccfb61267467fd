#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace dialeval {

enum class Family { VSP, NSP, MLM, ENG, LLM };
std::string_view to_string(Family f);
Family parse_family(std::string_view s);

/// A submetric is a (family, variant) pair, e.g. NSP/ML75 or LLM/A. The
/// variant "ensemble" denotes the model-level average of a family.
struct SubmetricId {
  Family family = Family::VSP;
  std::string variant;

  /// "NSP-ML75"; families never contain '-', so parse() splits on the first one.
  std::string key() const;
  static SubmetricId parse(std::string_view key);

  auto operator<=>(const SubmetricId&) const = default;
  bool operator==(const SubmetricId&) const = default;
};

inline constexpr std::string_view kEnsembleVariant = "ensemble";

}  // namespace dialeval
