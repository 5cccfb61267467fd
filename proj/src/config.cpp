#include "dialeval/config.hpp"

#include <algorithm>
#include <set>

#include "dialeval/error.hpp"
#include "dialeval/toml.hpp"

namespace dialeval {

using nlohmann::json;
namespace fs = std::filesystem;

const DatasetConfig& RunConfig::dataset(const std::string& name) const {
  for (const auto& d : datasets)
    if (d.name == name) return d;
  throw usage_error("dataset '" + name + "' is not configured");
}

std::vector<DatasetConfig> RunConfig::select(const std::vector<std::string>& names) const {
  if (names.empty()) return datasets;
  std::vector<DatasetConfig> out;
  for (const auto& n : names) out.push_back(dataset(n));
  return out;
}

Stopwords RunConfig::stopwords() const {
  return stopwords_dir.empty() ? Stopwords::builtin() : Stopwords::with_overrides(stopwords_dir);
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw usage_error(std::string("config key '") + key + "' has the wrong type");
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  auto it = doc.find(key);
  if (it == doc.end()) return empty;
  if (!it->is_object()) throw usage_error(std::string("config section [") + key + "] must be a table");
  return *it;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::vector<JudgeAspect> judge_aspects(const json& arr) {
  std::vector<JudgeAspect> out;
  if (arr.is_null()) return out;
  if (!arr.is_array()) throw usage_error("llm aspect lists must be arrays of {tag, aspect}");
  for (const auto& a : arr) {
    if (!a.is_object() || !a.contains("tag") || !a.contains("aspect"))
      throw usage_error("llm aspect entries need 'tag' and 'aspect'");
    out.push_back({a.at("tag").get<std::string>(), a.at("aspect").get<std::string>()});
  }
  return out;
}

}  // namespace

RunConfig config_from_json(const json& doc, const fs::path& base_dir) {
  RunConfig c;
  try {
    c.seed = get_or<std::uint64_t>(doc, "seed", c.seed);
    c.output_dir = resolve(base_dir, get_or<std::string>(doc, "output_dir", "out"));
    c.context_budget = get_or<std::size_t>(doc, "context_budget", c.context_budget);
    c.concurrency = std::max<std::size_t>(1, get_or<std::size_t>(doc, "concurrency", c.concurrency));

    const json& ann = section(doc, "annotations");
    const auto scale = get_or<std::vector<double>>(ann, "scale", {1.0, 5.0});
    if (scale.size() != 2 || !(scale[1] > scale[0])) throw usage_error("annotations.scale must be [min, max] with max > min");
    c.scale = {scale[0], scale[1]};
    c.registry = AspectRegistry(get_or<std::vector<std::string>>(ann, "aspects", {}));

    for (const auto& [dev, test] : section(doc, "aspect_mapping").items())
      c.mapping[AspectRegistry::canonical(dev)] = AspectRegistry::canonical(test.get<std::string>());

    const json& ev = section(doc, "evaluation");
    for (const auto& a : get_or<std::vector<std::string>>(ev, "turn_aspects", {}))
      c.test_turn_aspects.push_back(AspectRegistry::canonical(a));
    for (const auto& a : get_or<std::vector<std::string>>(ev, "dialogue_aspects", {}))
      c.test_dialogue_aspects.push_back(AspectRegistry::canonical(a));
    c.test_datasets = get_or<std::vector<std::string>>(ev, "datasets", {});

    if (auto it = doc.find("datasets"); it != doc.end()) {
      for (const auto& d : *it)
        c.datasets.push_back({d.at("name").get<std::string>(), resolve(base_dir, d.at("path").get<std::string>()),
                              d.value("language", std::string())});
    }

    const json& samples = section(doc, "samples");
    c.sample_corpora = get_or<std::vector<std::string>>(samples, "corpora", {});
    c.nsp.coverage_threshold = get_or<double>(samples, "coverage_threshold", c.nsp.coverage_threshold);
    c.nsp.max_negative_attempts = get_or<int>(samples, "max_negative_attempts", c.nsp.max_negative_attempts);
    c.nsp.context_window = get_or<std::size_t>(samples, "context_window", c.nsp.context_window);
    c.stopwords_dir = resolve(base_dir, get_or<std::string>(samples, "stopwords_dir", ""));

    const json& aug = section(doc, "augment");
    c.augment.translations = resolve(base_dir, get_or<std::string>(aug, "translations", ""));
    c.augment.paraphrases = resolve(base_dir, get_or<std::string>(aug, "paraphrases", ""));
    c.augment.vsp_fraction = get_or<double>(aug, "vsp_fraction", c.augment.vsp_fraction);
    c.augment.nsp_fraction = get_or<double>(aug, "nsp_fraction", c.augment.nsp_fraction);
    c.augment.eng_fractions = get_or<std::vector<double>>(aug, "eng_fractions", c.augment.eng_fractions);
    c.augment.paraphrase_fraction = get_or<double>(aug, "paraphrase_fraction", c.augment.paraphrase_fraction);
    const auto scope = get_or<std::string>(aug, "selection_scope", "per_language");
    if (scope != "per_language" && scope != "pooled") throw usage_error("augment.selection_scope must be per_language or pooled");
    c.augment.per_language = scope == "per_language";

    if (auto it = doc.find("backends"); it != doc.end()) {
      for (const auto& b : *it) {
        BackendDescriptor d;
        d.submetric = SubmetricId::parse(b.at("submetric").get<std::string>());
        d.endpoint = b.at("endpoint").get<std::string>();
        const auto mode = b.value("mode", std::string(d.submetric.family == Family::MLM ? "token_losses" : "scalar_score"));
        if (mode == "scalar_score")
          d.mode = BackendMode::scalar_score;
        else if (mode == "token_losses")
          d.mode = BackendMode::token_losses;
        else
          throw usage_error("backend mode must be scalar_score or token_losses");
        d.timeout = std::chrono::milliseconds(b.value("timeout_ms", 10000));
        d.max_retries = b.value("max_retries", 3);
        d.backoff = std::chrono::milliseconds(b.value("backoff_ms", 100));
        c.backends.push_back(std::move(d));
      }
    }

    const json& ens = section(doc, "ensemble");
    if (auto it = ens.find("members"); it != ens.end()) {
      c.memberships.clear();
      for (const auto& [family, members] : it->items())
        c.memberships[parse_family(family)] = members.get<std::vector<std::string>>();
    } else {
      // Defaults only name the members that actually have a backend.
      for (auto it2 = c.memberships.begin(); it2 != c.memberships.end();) {
        auto& members = it2->second;
        const Family family = it2->first;
        std::erase_if(members, [&](const std::string& m) {
          return std::none_of(c.backends.begin(), c.backends.end(),
                              [&](const BackendDescriptor& b) { return b.submetric == SubmetricId{family, m}; });
        });
        it2 = members.empty() ? c.memberships.erase(it2) : std::next(it2);
      }
    }

    const json& w = section(doc, "weights");
    c.crs.mask_threshold = get_or<double>(w, "mask_threshold", c.crs.mask_threshold);
    c.crs.exponent = get_or<double>(w, "exponent", c.crs.exponent);
    c.crs.guard = get_or<double>(w, "guard", c.crs.guard);
    c.dev_datasets = get_or<std::vector<std::string>>(w, "datasets", {});
    const auto corr = get_or<std::string>(w, "correlation", "spearman");
    if (corr == "spearman")
      c.weight_correlation = CorrelationKind::spearman;
    else if (corr == "pearson")
      c.weight_correlation = CorrelationKind::pearson;
    else
      throw usage_error("weights.correlation must be spearman or pearson");

    const json& llm = section(doc, "llm");
    c.llm.endpoint = get_or<std::string>(llm, "endpoint", "");
    c.llm.model = get_or<std::string>(llm, "model", c.llm.model);
    c.llm.max_attempts = get_or<int>(llm, "max_attempts", c.llm.max_attempts);
    c.llm.transport_retries = get_or<int>(llm, "transport_retries", c.llm.transport_retries);
    c.llm.concurrency = std::max<std::size_t>(1, get_or<std::size_t>(llm, "concurrency", c.llm.concurrency));
    c.llm.timeout = std::chrono::milliseconds(get_or<int>(llm, "timeout_ms", 60000));
    c.llm.backoff = std::chrono::milliseconds(get_or<int>(llm, "backoff_ms", 500));
    c.llm.turn_aspects = judge_aspects(llm.value("turn_aspects", json()));
    c.llm.dialogue_aspects = judge_aspects(llm.value("dialogue_aspects", json()));
    c.llm.replay_transcript = resolve(base_dir, get_or<std::string>(llm, "replay_transcript", ""));
  } catch (const json::exception& e) {
    throw usage_error(std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw usage_error(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

RunConfig load_config(const fs::path& toml_path) {
  const json doc = toml::parse_file(toml_path);
  return config_from_json(doc, toml_path.parent_path());
}

void validate(const RunConfig& c) {
  std::set<SubmetricId> seen;
  for (const auto& b : c.backends) {
    if (b.submetric.family == Family::LLM) throw usage_error("LLM submetrics are configured under [llm], not [[backends]]");
    if (!seen.insert(b.submetric).second) throw usage_error("duplicate backend for " + b.submetric.key());
    if (b.submetric.family == Family::MLM && b.mode != BackendMode::token_losses)
      throw usage_error("MLM backend " + b.submetric.key() + " must use token_losses mode");
    if (b.submetric.family != Family::MLM && b.mode != BackendMode::scalar_score)
      throw usage_error("backend " + b.submetric.key() + " must use scalar_score mode");
  }
  for (const auto& [family, members] : c.memberships) {
    if (family == Family::LLM) throw usage_error("LLM submetrics are not model-ensembled");
    for (const auto& m : members)
      if (!seen.contains(SubmetricId{family, m}))
        throw usage_error("ensemble member " + SubmetricId{family, m}.key() + " has no configured backend");
  }
  std::set<std::string> tags;
  for (const auto* list : {&c.llm.turn_aspects, &c.llm.dialogue_aspects})
    for (const auto& a : *list) {
      if (a.tag.empty() || a.tag.find('-') != std::string::npos)
        throw usage_error("llm aspect tag '" + a.tag + "' must be non-empty and contain no '-'");
      if (!tags.insert(a.tag).second) throw usage_error("duplicate llm aspect tag '" + a.tag + "'");
    }
  for (const auto& [dev, test] : c.mapping) {
    if (!c.registry.find(dev)) throw usage_error("aspect_mapping: unknown development aspect '" + dev + "'");
    if (!c.registry.find(test)) throw usage_error("aspect_mapping: unknown test aspect '" + test + "'");
  }
  for (const auto* list : {&c.test_turn_aspects, &c.test_dialogue_aspects})
    for (const auto& a : *list)
      if (!c.registry.find(a)) throw usage_error("evaluation: unknown aspect '" + a + "'");
  std::set<std::string> names;
  for (const auto& d : c.datasets)
    if (!names.insert(d.name).second) throw usage_error("duplicate dataset name '" + d.name + "'");
  for (const auto* list : {&c.sample_corpora, &c.dev_datasets, &c.test_datasets})
    for (const auto& n : *list) (void)c.dataset(n);
  if (c.context_budget == 0) throw usage_error("context_budget must be positive");
}

}  // namespace dialeval
