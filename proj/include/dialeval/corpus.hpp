#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dialeval {

enum class Level { turn, dialogue };
std::string_view to_string(Level level);
Level parse_level(std::string_view s);

struct Turn {
  std::string speaker;
  std::string text;
  std::size_t turn_index = 0;

  bool operator==(const Turn&) const = default;
};

/// Canonical aspect names are lowercase and trimmed.
using AspectId = std::string;

/// Registry of aspects admitted in data and configuration. Lookup is
/// case-insensitive after trimming.
class AspectRegistry {
 public:
  AspectRegistry() = default;
  explicit AspectRegistry(const std::vector<std::string>& names);

  static std::string canonical(std::string_view name);

  /// Returns the canonical id, or nullopt when the aspect is not registered.
  std::optional<AspectId> find(std::string_view name) const;
  AspectId require(std::string_view name) const;
  const std::set<AspectId>& names() const { return names_; }

 private:
  std::set<AspectId> names_;
};

struct AnnotationScale {
  double min = 1.0;
  double max = 5.0;

  bool contains(double v) const { return v >= min && v <= max; }
};

struct Dialogue {
  std::string dialogue_id;
  std::string language;
  std::vector<Turn> turns;
  /// aspect -> per-turn raw score (aligned with turns; nullopt = not annotated)
  std::map<AspectId, std::vector<std::optional<double>>> turn_annotations;
  std::map<AspectId, double> dialogue_annotations;

  bool operator==(const Dialogue&) const = default;
};

struct EvalInstance {
  std::string instance_id;
  std::vector<Turn> context;
  Turn response;
  std::string language;
};

/// Reads a JSONL corpus (one dialogue per line) and validates it.
/// Throws dialeval::Error(data) naming the line or dialogue on failure.
std::vector<Dialogue> load_dataset(const std::filesystem::path& path, const AnnotationScale& scale,
                                   const AspectRegistry& registry);
std::vector<Dialogue> parse_dataset(std::string_view jsonl, const AnnotationScale& scale,
                                    const AspectRegistry& registry);

nlohmann::json to_json(const Dialogue& d);
Dialogue dialogue_from_json(const nlohmann::json& j, const AnnotationScale& scale,
                            const AspectRegistry& registry);
std::string serialize_dataset(const std::vector<Dialogue>& dialogues);

std::string instance_id(std::string_view dialogue_id, std::size_t turn_index);

/// One instance per turn with index >= 1, context = all preceding turns.
std::vector<EvalInstance> make_turn_instances(const Dialogue& d);

/// `<speaker>: <text>` lines joined by newlines.
std::string render_turns(const std::vector<Turn>& turns);
std::string render_turn(const Turn& t);

/// Rendered length (code points) of context + response as one block.
std::size_t rendered_length(const EvalInstance& inst);

/// Drops the oldest context turns until the rendered instance fits the
/// character budget. The response is never cut.
EvalInstance truncate_context(const EvalInstance& inst, std::size_t budget);

double normalize_annotation(double raw, const AnnotationScale& scale);

}  // namespace dialeval
