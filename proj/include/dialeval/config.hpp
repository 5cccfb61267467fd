#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialeval/corpus.hpp"
#include "dialeval/ensemble.hpp"
#include "dialeval/sampler.hpp"
#include "dialeval/scorers.hpp"
#include "dialeval/stats.hpp"

namespace dialeval {

struct DatasetConfig {
  std::string name;
  std::filesystem::path path;
  std::string language;
};

/// An LLM-judged submetric: variant tag (e.g. "A") and the aspect phrase
/// substituted into the prompt.
struct JudgeAspect {
  std::string tag;
  std::string aspect;
};

struct LlmConfig {
  std::string endpoint;  // "mock://" selects the offline judge
  std::string model = "gpt-3.5-turbo";
  int max_attempts = 3;
  int transport_retries = 3;
  std::size_t concurrency = 4;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff{500};
  std::vector<JudgeAspect> turn_aspects;
  std::vector<JudgeAspect> dialogue_aspects;
  std::filesystem::path replay_transcript;  // used by --offline when present
};

struct AugmentConfig {
  std::filesystem::path translations;
  std::filesystem::path paraphrases;
  double vsp_fraction = 0.05;
  double nsp_fraction = 0.75;
  std::vector<double> eng_fractions{0.1, 0.2, 0.5};
  double paraphrase_fraction = 0.5;  // least similar paraphrases are kept
  bool per_language = true;          // rank within (language, kind) partitions
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "out";
  std::size_t context_budget = 8000;
  std::size_t concurrency = 4;

  AnnotationScale scale;
  AspectRegistry registry;
  AspectMapping mapping;
  std::vector<AspectId> test_turn_aspects;
  std::vector<AspectId> test_dialogue_aspects;

  std::vector<DatasetConfig> datasets;
  std::vector<std::string> sample_corpora;  // dataset names; empty = all
  std::vector<std::string> dev_datasets;    // weight estimation; empty = all
  std::vector<std::string> test_datasets;   // evaluation; empty = all

  std::vector<BackendDescriptor> backends;
  std::map<Family, std::vector<std::string>> memberships = default_memberships();
  LlmConfig llm;

  AugmentConfig augment;
  NspOptions nsp;
  std::filesystem::path stopwords_dir;

  CrsParams crs;
  CorrelationKind weight_correlation = CorrelationKind::spearman;

  const DatasetConfig& dataset(const std::string& name) const;
  /// The named datasets, or every configured dataset when `names` is empty.
  std::vector<DatasetConfig> select(const std::vector<std::string>& names) const;
  const std::vector<AspectId>& test_aspects(Level level) const {
    return level == Level::turn ? test_turn_aspects : test_dialogue_aspects;
  }
  Stopwords stopwords() const;
};

/// Relative paths in the document resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& toml_path);

/// Cross-field checks (memberships reference configured backends, mapping
/// targets are registered, ...). Throws Error(usage).
void validate(const RunConfig& config);

}  // namespace dialeval
