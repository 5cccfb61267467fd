#include "dialeval/sampler.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "dialeval/error.hpp"
#include "dialeval/text.hpp"
#include "stopwords_data.hpp"

namespace dialeval {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Stopwords

std::unordered_set<std::string> Stopwords::parse_list(std::string_view contents) {
  std::unordered_set<std::string> out;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string word = text::lower(text::trim(contents.substr(pos, end - pos)));
    pos = end + 1;
    if (word.empty() || word.front() == '#') continue;
    out.insert(std::move(word));
  }
  return out;
}

const Stopwords& Stopwords::builtin() {
  static const Stopwords instance = [] {
    Stopwords s;
    s.set("en", parse_list(stopword_data::kEnglish));
    s.set("es", parse_list(stopword_data::kSpanish));
    s.set("zh", parse_list(stopword_data::kChinese));
    return s;
  }();
  return instance;
}

Stopwords Stopwords::with_overrides(const std::filesystem::path& dir) {
  Stopwords s = builtin();
  if (!std::filesystem::is_directory(dir)) throw usage_error("stopword directory '" + dir.string() + "' not found");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path());
    std::ostringstream buf;
    buf << in.rdbuf();
    s.set(entry.path().stem().string(), parse_list(buf.str()));
  }
  return s;
}

void Stopwords::set(std::string language, std::unordered_set<std::string> words) {
  lists_[primary_language(language)] = std::move(words);
}

const std::unordered_set<std::string>* Stopwords::list(std::string_view language) const {
  auto it = lists_.find(primary_language(language));
  return it == lists_.end() ? nullptr : &it->second;
}

bool Stopwords::contains(std::string_view language, std::string_view word) const {
  const auto* l = list(language);
  return l != nullptr && l->contains(std::string(word));
}

std::string primary_language(std::string_view tag) {
  const auto cut = tag.find_first_of("-_");
  return text::lower(tag.substr(0, cut));
}

// ---------------------------------------------------------------------------
// Tokenization

namespace {

bool is_chinese(std::string_view language) { return primary_language(language) == "zh"; }

bool starts_with_cjk(const std::string& token) {
  const auto cps = text::decode(token);
  return !cps.empty() && text::is_cjk_unit(cps.front());
}

}  // namespace

std::vector<std::string> tokenize(std::string_view input, std::string_view language) {
  const bool zh = is_chinese(language);
  std::vector<std::string> tokens;
  std::string current;
  for (char32_t cp : text::decode(input)) {
    if (text::is_space(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (zh && text::is_cjk_unit(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      std::string unit;
      text::append_utf8(unit, cp);
      tokens.push_back(std::move(unit));
    } else {
      text::append_utf8(current, cp);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string detokenize(const std::vector<std::string>& tokens, std::string_view language) {
  const bool zh = is_chinese(language);
  std::string out;
  bool prev_cjk = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool cjk = zh && starts_with_cjk(tokens[i]);
    if (i > 0 && !(cjk || prev_cjk)) out += ' ';
    out += tokens[i];
    prev_cjk = cjk;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Perturbations

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::none: return "none";
    case Provenance::punct_removal: return "punct_removal";
    case Provenance::stopword_removal: return "stopword_removal";
    case Provenance::word_reorder: return "word_reorder";
    case Provenance::word_drop: return "word_drop";
    case Provenance::word_repeat: return "word_repeat";
    case Provenance::drawn_from_dialog: return "drawn_from_dialog";
    case Provenance::random_negative: return "random_negative";
  }
  return "none";
}

Provenance parse_provenance(std::string_view s) {
  for (auto p : {Provenance::none, Provenance::punct_removal, Provenance::stopword_removal, Provenance::word_reorder,
                 Provenance::word_drop, Provenance::word_repeat, Provenance::drawn_from_dialog,
                 Provenance::random_negative})
    if (to_string(p) == s) return p;
  throw data_error("unknown provenance '" + std::string(s) + "'");
}

bool is_positive(Provenance p) {
  return p == Provenance::none || p == Provenance::punct_removal || p == Provenance::stopword_removal ||
         p == Provenance::drawn_from_dialog;
}

std::string apply_positive(std::string_view input, std::string_view language, Provenance kind,
                           const Stopwords& stopwords) {
  auto tokens = tokenize(input, language);
  std::vector<std::string> kept;
  kept.reserve(tokens.size());
  switch (kind) {
    case Provenance::none:
      return std::string(input);
    case Provenance::punct_removal:
      for (auto& t : tokens)
        if (auto s = text::strip_punct(t); !s.empty()) kept.push_back(std::move(s));
      break;
    case Provenance::stopword_removal:
      for (auto& t : tokens)
        if (!stopwords.contains(language, text::lower(text::strip_punct(t)))) kept.push_back(std::move(t));
      break;
    default:
      throw usage_error("apply_positive: '" + std::string(to_string(kind)) + "' is not a positive rule");
  }
  return detokenize(kept, language);
}

Perturbed make_vsp_positive(std::string_view input, std::string_view language, Rng& rng, const Stopwords& stopwords) {
  if (tokenize(input, language).empty()) throw data_error("make_vsp_positive: empty text");
  static constexpr Provenance kRules[] = {Provenance::none, Provenance::punct_removal, Provenance::stopword_removal};
  const Provenance kind = kRules[rng.uniform_index(3)];
  std::string out = apply_positive(input, language, kind, stopwords);
  if (tokenize(out, language).empty()) return {std::string(input), Provenance::none};
  return {std::move(out), kind};
}

namespace {

std::vector<std::string> drop_tokens(const std::vector<std::string>& tokens, Rng& rng) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<std::string> kept;
    for (const auto& t : tokens)
      if (!rng.bernoulli(kTokenNoiseProbability)) kept.push_back(t);
    if (!kept.empty() && kept.size() < tokens.size()) return kept;
  }
  // Only reachable for astronomically unlikely streams; drop one token outright.
  std::vector<std::string> kept = tokens;
  kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(rng.uniform_index(kept.size())));
  return kept;
}

std::vector<std::string> repeat_tokens(const std::vector<std::string>& tokens, Rng& rng) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<std::string> out;
    out.reserve(tokens.size() * 2);
    for (const auto& t : tokens) {
      out.push_back(t);
      if (rng.bernoulli(kTokenNoiseProbability)) out.push_back(t);
    }
    if (out.size() > tokens.size()) return out;
  }
  std::vector<std::string> out = tokens;
  const std::size_t i = rng.uniform_index(out.size());
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(i), out[i]);
  return out;
}

}  // namespace

Perturbed make_vsp_negative(std::string_view input, std::string_view language, Rng& rng, Provenance kind) {
  const auto tokens = tokenize(input, language);
  if (tokens.size() < 2) throw data_error("make_vsp_negative: need at least 2 tokens");
  switch (kind) {
    case Provenance::word_reorder: {
      for (int attempt = 0; attempt < kReorderAttempts; ++attempt) {
        auto shuffled = tokens;
        rng.shuffle(shuffled);
        if (shuffled != tokens) return {detokenize(shuffled, language), Provenance::word_reorder};
      }
      return {detokenize(drop_tokens(tokens, rng), language), Provenance::word_drop};
    }
    case Provenance::word_drop:
      return {detokenize(drop_tokens(tokens, rng), language), Provenance::word_drop};
    case Provenance::word_repeat:
      return {detokenize(repeat_tokens(tokens, rng), language), Provenance::word_repeat};
    default:
      throw usage_error("make_vsp_negative: '" + std::string(to_string(kind)) + "' is not a negative rule");
  }
}

Perturbed make_vsp_negative(std::string_view input, std::string_view language, Rng& rng) {
  if (tokenize(input, language).size() < 2) throw data_error("make_vsp_negative: need at least 2 tokens");
  static constexpr Provenance kRules[] = {Provenance::word_reorder, Provenance::word_drop, Provenance::word_repeat};
  return make_vsp_negative(input, language, rng, kRules[rng.uniform_index(3)]);
}

// ---------------------------------------------------------------------------
// Coverage

std::unordered_set<std::string> content_tokens(std::string_view input, std::string_view language,
                                               const Stopwords& stopwords) {
  std::unordered_set<std::string> out;
  for (const auto& t : tokenize(input, language)) {
    std::string w = text::lower(text::strip_punct(t));
    if (w.empty() || stopwords.contains(language, w)) continue;
    out.insert(std::move(w));
  }
  return out;
}

double token_coverage(std::string_view candidate, std::string_view reference, std::string_view language,
                      const Stopwords& stopwords) {
  const auto a = content_tokens(candidate, language, stopwords);
  const auto b = content_tokens(reference, language, stopwords);
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& w : a) common += b.contains(w) ? 1 : 0;
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Sample generation

namespace {

struct UnitResult {
  std::vector<LabeledSample> samples;
  std::vector<SkippedItem> skipped;
};

GenerationResult concat(std::vector<UnitResult>& units) {
  GenerationResult out;
  for (auto& u : units) {
    std::move(u.samples.begin(), u.samples.end(), std::back_inserter(out.samples));
    std::move(u.skipped.begin(), u.skipped.end(), std::back_inserter(out.skipped));
  }
  return out;
}

/// Flat view over "every turn of every dialogue except dialogue `self`".
class NegativePool {
 public:
  explicit NegativePool(const std::vector<Dialogue>& dialogues) : dialogues_(dialogues) {
    offsets_.reserve(dialogues.size() + 1);
    offsets_.push_back(0);
    for (const auto& d : dialogues) offsets_.push_back(offsets_.back() + d.turns.size());
  }

  std::size_t size_excluding(std::size_t self) const { return offsets_.back() - dialogues_[self].turns.size(); }

  /// Maps k in [0, size_excluding(self)) to (dialogue, turn).
  std::pair<std::size_t, std::size_t> at(std::size_t self, std::size_t k) const {
    if (k >= offsets_[self]) k += dialogues_[self].turns.size();
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), k);
    const auto d = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    return {d, k - offsets_[d]};
  }

 private:
  const std::vector<Dialogue>& dialogues_;
  std::vector<std::size_t> offsets_;
};

UnitResult nsp_for_dialogue(const std::vector<Dialogue>& dialogues, const NegativePool& pool, std::size_t di,
                            std::uint64_t seed, const NspOptions& opt, const Stopwords& stopwords) {
  const Dialogue& d = dialogues[di];
  const std::uint64_t stream_seed = derive_seed(seed, "nsp:" + d.dialogue_id);
  Rng rng(stream_seed);
  UnitResult out;
  const std::size_t pool_size = pool.size_excluding(di);
  for (std::size_t i = 1; i < d.turns.size(); ++i) {
    const std::string sid = instance_id(d.dialogue_id, d.turns[i].turn_index);
    const std::size_t first = i > opt.context_window ? i - opt.context_window : 0;
    std::vector<Turn> context(d.turns.begin() + static_cast<std::ptrdiff_t>(first),
                              d.turns.begin() + static_cast<std::ptrdiff_t>(i));

    const Perturbed pos = make_vsp_positive(d.turns[i].text, d.language, rng, stopwords);
    out.samples.push_back({sid, sid, d.language, context, pos.text, 1, Provenance::drawn_from_dialog, pos.kind,
                           stream_seed});

    bool placed = false;
    for (int attempt = 0; attempt < opt.max_negative_attempts && pool_size > 0; ++attempt) {
      const auto [dj, tj] = pool.at(di, rng.uniform_index(pool_size));
      const Turn& cand = dialogues[dj].turns[tj];
      const Perturbed neg = make_vsp_positive(cand.text, d.language, rng, stopwords);
      if (token_coverage(neg.text, pos.text, d.language, stopwords) >= opt.coverage_threshold) continue;
      out.samples.push_back({sid, instance_id(dialogues[dj].dialogue_id, cand.turn_index), d.language, context,
                             neg.text, 0, Provenance::random_negative, neg.kind, stream_seed});
      placed = true;
      break;
    }
    if (!placed)
      out.skipped.push_back({sid, pool_size == 0 ? "no_negative_pool" : "coverage_attempts_exhausted"});
  }
  return out;
}

struct VspUnit {
  std::string source_id;
  std::string text;
  std::string language;
};

void vsp_for_unit(const VspUnit& u, Rng& rng, std::uint64_t stream_seed, const Stopwords& stopwords,
                  UnitResult& out) {
  if (tokenize(u.text, u.language).empty()) {
    out.skipped.push_back({u.source_id, "empty_text"});
    return;
  }
  const Perturbed pos = make_vsp_positive(u.text, u.language, rng, stopwords);
  out.samples.push_back({u.source_id, u.source_id, u.language, {}, pos.text, 1, pos.kind, pos.kind, stream_seed});
  if (tokenize(u.text, u.language).size() < 2) {
    out.skipped.push_back({u.source_id, "too_short_for_negative"});
    return;
  }
  const Perturbed neg = make_vsp_negative(u.text, u.language, rng);
  out.samples.push_back(
      {u.source_id, u.source_id, u.language, {}, neg.text, 0, neg.kind, Provenance::none, stream_seed});
}

}  // namespace

GenerationResult make_nsp_pairs(const std::vector<Dialogue>& dialogues, std::uint64_t seed, const NspOptions& options,
                                const Stopwords& stopwords, Exec exec) {
  if (dialogues.size() < 2) throw data_error("make_nsp_pairs: negatives need at least 2 dialogues");
  const NegativePool pool(dialogues);
  std::vector<UnitResult> units(dialogues.size());
  const auto n = static_cast<std::ptrdiff_t>(dialogues.size());
  if (exec == Exec::parallel) {
    // Per-dialogue exceptions are captured so they do not escape the region.
    std::vector<std::exception_ptr> errors(dialogues.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        units[i] = nsp_for_dialogue(dialogues, pool, static_cast<std::size_t>(i), seed, options, stopwords);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i)
      units[i] = nsp_for_dialogue(dialogues, pool, static_cast<std::size_t>(i), seed, options, stopwords);
  }
  return concat(units);
}

GenerationResult make_vsp_samples(const std::vector<Dialogue>& dialogues, const std::vector<AugmentedPair>& extra,
                                  std::uint64_t seed, const Stopwords& stopwords, Exec exec) {
  const std::size_t total = dialogues.size() + extra.size();
  std::vector<UnitResult> units(total);
  auto run = [&](std::size_t k) {
    if (k < dialogues.size()) {
      const Dialogue& d = dialogues[k];
      const std::uint64_t s = derive_seed(seed, "vsp:" + d.dialogue_id);
      Rng rng(s);
      for (const auto& t : d.turns)
        vsp_for_unit({instance_id(d.dialogue_id, t.turn_index), t.text, d.language}, rng, s, stopwords, units[k]);
    } else {
      const std::size_t j = k - dialogues.size();
      const AugmentedPair& p = extra[j];
      const std::uint64_t s = derive_seed(seed, "vsp-aug:" + std::to_string(j) + ":" + p.source_id);
      Rng rng(s);
      vsp_for_unit({p.source_id, p.variant, p.language}, rng, s, stopwords, units[k]);
    }
  };
  const auto n = static_cast<std::ptrdiff_t>(total);
  if (exec == Exec::parallel) {
    std::vector<std::exception_ptr> errors(total);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      try {
        run(static_cast<std::size_t>(k));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) run(static_cast<std::size_t>(k));
  }
  return concat(units);
}

std::vector<SiamesePair> make_siamese_pairs(const std::vector<LabeledSample>& samples,
                                            const std::vector<AugmentedPair>& paraphrases) {
  std::unordered_map<std::string, const AugmentedPair*> by_id;
  std::unordered_map<std::string, const AugmentedPair*> by_text;
  for (const auto& p : paraphrases) {
    by_id.try_emplace(p.source_id, &p);
    by_text.try_emplace(p.original, &p);
  }
  std::vector<SiamesePair> out;
  for (const auto& s : samples) {
    const AugmentedPair* match = nullptr;
    if (auto it = by_id.find(s.response_source); it != by_id.end())
      match = it->second;
    else if (auto jt = by_text.find(s.response); jt != by_text.end())
      match = jt->second;
    if (match == nullptr || match->variant == s.response) continue;
    out.push_back({s.source_id, s.context, s.response, match->variant, s.label});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json turns_json(const std::vector<Turn>& turns) {
  json arr = json::array();
  for (const auto& t : turns) arr.push_back({{"speaker", t.speaker}, {"text", t.text}});
  return arr;
}

}  // namespace

json to_json(const LabeledSample& s) {
  return {{"source_id", s.source_id},
          {"response_source", s.response_source},
          {"language", s.language},
          {"context", turns_json(s.context)},
          {"response", s.response},
          {"label", s.label},
          {"provenance", std::string(to_string(s.provenance))},
          {"perturbation", std::string(to_string(s.perturbation))},
          {"seed", s.seed}};
}

LabeledSample labeled_sample_from_json(const json& j) {
  LabeledSample s;
  try {
    s.source_id = j.at("source_id").get<std::string>();
    s.response_source = j.at("response_source").get<std::string>();
    s.language = j.at("language").get<std::string>();
    std::size_t idx = 0;
    for (const auto& t : j.at("context"))
      s.context.push_back({t.at("speaker").get<std::string>(), t.at("text").get<std::string>(), idx++});
    s.response = j.at("response").get<std::string>();
    s.label = j.at("label").get<int>();
    s.provenance = parse_provenance(j.at("provenance").get<std::string>());
    s.perturbation = parse_provenance(j.at("perturbation").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw data_error(std::string("labeled sample: ") + e.what());
  }
  return s;
}

json to_json(const SiamesePair& p) {
  return {{"source_id", p.source_id},
          {"context", turns_json(p.context)},
          {"response_a", p.response_a},
          {"response_b", p.response_b},
          {"label", p.label}};
}

}  // namespace dialeval
