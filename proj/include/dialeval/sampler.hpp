#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dialeval/augment.hpp"
#include "dialeval/corpus.hpp"
#include "dialeval/parallel.hpp"
#include "dialeval/rng.hpp"

namespace dialeval {

/// Per-language stopword lists. The built-in lists are compiled from
/// data/stopwords/<lang>.txt; a directory of the same layout overrides them.
class Stopwords {
 public:
  static const Stopwords& builtin();
  /// Built-in lists with any <lang>.txt found in `dir` replacing its language.
  static Stopwords with_overrides(const std::filesystem::path& dir);
  static std::unordered_set<std::string> parse_list(std::string_view contents);

  void set(std::string language, std::unordered_set<std::string> words);
  /// `word` must already be lowercased. Regional subtags are ignored ("es-MX" -> "es").
  bool contains(std::string_view language, std::string_view word) const;
  const std::unordered_set<std::string>* list(std::string_view language) const;

 private:
  std::map<std::string, std::unordered_set<std::string>, std::less<>> lists_;
};

std::string primary_language(std::string_view tag);

/// Whitespace split; for Chinese, every Han/CJK code point is its own token.
std::vector<std::string> tokenize(std::string_view text, std::string_view language);
/// Inverse of tokenize for whitespace-free tokens.
std::string detokenize(const std::vector<std::string>& tokens, std::string_view language);

enum class Provenance {
  none,
  punct_removal,
  stopword_removal,
  word_reorder,
  word_drop,
  word_repeat,
  drawn_from_dialog,
  random_negative,
};
std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);
bool is_positive(Provenance p);

struct Perturbed {
  std::string text;
  Provenance kind = Provenance::none;
};

/// Applies one specific positive rule. May return an empty string.
std::string apply_positive(std::string_view text, std::string_view language, Provenance kind,
                           const Stopwords& stopwords = Stopwords::builtin());

/// One of {none, punct_removal, stopword_removal}, chosen uniformly. Falls
/// back to `none` when the chosen rule would leave no tokens.
Perturbed make_vsp_positive(std::string_view text, std::string_view language, Rng& rng,
                            const Stopwords& stopwords = Stopwords::builtin());

/// One of {word_reorder, word_drop, word_repeat}, chosen uniformly. Requires
/// at least two tokens; the output always differs from the input.
Perturbed make_vsp_negative(std::string_view text, std::string_view language, Rng& rng);
/// Same, with the rule fixed (word_reorder may still fall back to word_drop).
Perturbed make_vsp_negative(std::string_view text, std::string_view language, Rng& rng, Provenance kind);

inline constexpr double kTokenNoiseProbability = 0.2;
inline constexpr int kReorderAttempts = 20;

/// Lowercased, punctuation-stripped, stopword-free token set.
std::unordered_set<std::string> content_tokens(std::string_view text, std::string_view language,
                                               const Stopwords& stopwords = Stopwords::builtin());

/// Jaccard similarity of content-token sets; 1.0 when both are empty.
double token_coverage(std::string_view candidate, std::string_view reference, std::string_view language,
                      const Stopwords& stopwords = Stopwords::builtin());

struct LabeledSample {
  std::string source_id;        // instance the sample was generated for
  std::string response_source;  // instance the response text was taken from
  std::string language;
  std::vector<Turn> context;
  std::string response;
  int label = 0;
  Provenance provenance = Provenance::none;
  Provenance perturbation = Provenance::none;  // positive heuristic applied to the response
  std::uint64_t seed = 0;

  bool operator==(const LabeledSample&) const = default;
};

struct SiamesePair {
  std::string source_id;
  std::vector<Turn> context;
  std::string response_a;
  std::string response_b;
  int label = 0;

  bool operator==(const SiamesePair&) const = default;
};

struct SkippedItem {
  std::string source_id;
  std::string reason;

  bool operator==(const SkippedItem&) const = default;
};

struct GenerationResult {
  std::vector<LabeledSample> samples;
  std::vector<SkippedItem> skipped;
};

struct NspOptions {
  double coverage_threshold = 0.5;
  int max_negative_attempts = 50;
  std::size_t context_window = 3;
};

/// NSP positives (true next turn) and negatives (turns from other dialogues
/// that pass the token-coverage test), both run through the VSP positive
/// heuristic. Each dialogue draws from its own stream derived from
/// (seed, dialogue_id), so Exec::parallel and Exec::serial agree exactly.
GenerationResult make_nsp_pairs(const std::vector<Dialogue>& dialogues, std::uint64_t seed,
                                const NspOptions& options = {}, const Stopwords& stopwords = Stopwords::builtin(),
                                Exec exec = Exec::parallel);

/// VSP positive/negative pairs for every dialogue turn and every extra
/// sentence (e.g. selected translations). Context is left empty.
GenerationResult make_vsp_samples(const std::vector<Dialogue>& dialogues, const std::vector<AugmentedPair>& extra,
                                  std::uint64_t seed, const Stopwords& stopwords = Stopwords::builtin(),
                                  Exec exec = Exec::parallel);

/// Pairs each sample with a paraphrase of its response, matched by
/// response_source against source_id, or by response text against original.
std::vector<SiamesePair> make_siamese_pairs(const std::vector<LabeledSample>& samples,
                                            const std::vector<AugmentedPair>& paraphrases);

nlohmann::json to_json(const LabeledSample& s);
LabeledSample labeled_sample_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SiamesePair& p);

}  // namespace dialeval
