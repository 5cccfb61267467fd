#include "dialeval/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <set>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "dialeval/augment.hpp"
#include "dialeval/error.hpp"
#include "dialeval/io.hpp"
#include "dialeval/parallel.hpp"
#include "dialeval/rng.hpp"
#include "dialeval/sampler.hpp"

namespace dialeval {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr std::string_view kToolkitVersion = "0.1.0";

namespace paths {
fs::path samples_dir(const RunConfig& c) { return c.output_dir / "samples"; }
fs::path scores_file(const RunConfig& c, const std::string& d) { return c.output_dir / "scores" / ("scores_" + d + ".jsonl"); }
fs::path score_summary_file(const RunConfig& c, const std::string& d) {
  return c.output_dir / "scores" / ("summary_" + d + ".json");
}
fs::path transcript_file(const RunConfig& c, const std::string& d) {
  return c.output_dir / "scores" / ("llm_transcript_" + d + ".jsonl");
}
fs::path replay_file(const RunConfig& c, const std::string& d) {
  return c.output_dir / "scores" / ("llm_replay_" + d + ".jsonl");
}
fs::path weights_file(const RunConfig& c) { return c.output_dir / "weights.json"; }
fs::path report_dir(const RunConfig& c) { return c.output_dir / "report"; }
}  // namespace paths

HttpReply DispatchTransport::post(const BackendDescriptor& backend, const std::string& body) {
  if (offline_ || backend.endpoint.starts_with("mock://")) return mock_.post(backend, body);
  return http_.post(backend, body);
}

std::unique_ptr<ChatClient> make_chat_client(const LlmConfig& llm, bool offline) {
  if (llm.turn_aspects.empty() && llm.dialogue_aspects.empty()) return nullptr;
  if (offline) {
    if (!llm.replay_transcript.empty()) return std::make_unique<ReplayChatClient>(load_transcript(llm.replay_transcript));
    return std::make_unique<MockChatClient>();
  }
  if (llm.endpoint.starts_with("mock://")) return std::make_unique<MockChatClient>();
  if (llm.endpoint.empty()) throw usage_error("llm.endpoint is required when LLM aspects are configured");
  HttpChatClient::Options o;
  o.endpoint = llm.endpoint;
  if (const char* token = std::getenv("DIALEVAL_LLM_TOKEN")) o.token = token;
  o.timeout = llm.timeout;
  o.transport_retries = llm.transport_retries;
  o.backoff = llm.backoff;
  return std::make_unique<HttpChatClient>(std::move(o));
}

namespace {

std::vector<Dialogue> load(const RunConfig& c, const DatasetConfig& d) {
  auto dialogues = load_dataset(d.path, c.scale, c.registry);
  spdlog::info("loaded {} dialogues from {}", dialogues.size(), d.name);
  return dialogues;
}

template <class T>
std::vector<json> rows_of(const std::vector<T>& items) {
  std::vector<json> rows;
  rows.reserve(items.size());
  for (const auto& x : items) rows.push_back(to_json(x));
  return rows;
}

std::vector<AugmentedPair> select(const std::vector<AugmentedPair>& pairs, double fraction, SelectionDirection dir,
                                  bool per_language) {
  if (pairs.empty()) return {};
  const SelectionPolicy policy{fraction, dir};
  return per_language ? rank_select_partitioned(pairs, policy) : rank_select(pairs, policy);
}

json sample_counts(const GenerationResult& r) {
  std::map<std::string, int> by_provenance;
  int pos = 0;
  for (const auto& s : r.samples) {
    ++by_provenance[std::string(to_string(s.provenance))];
    pos += s.label;
  }
  return {{"samples", r.samples.size()},
          {"positives", pos},
          {"negatives", static_cast<int>(r.samples.size()) - pos},
          {"skipped", r.skipped.size()},
          {"by_provenance", by_provenance}};
}

struct InstanceRef {
  EvalInstance instance;
  std::string dialogue_id;
};

std::vector<InstanceRef> turn_instances(const RunConfig& c, const std::vector<Dialogue>& dialogues) {
  std::vector<InstanceRef> out;
  for (const auto& d : dialogues)
    for (auto& inst : make_turn_instances(d)) out.push_back({truncate_context(inst, c.context_budget), d.dialogue_id});
  return out;
}

struct Failure {
  std::string submetric;
  std::string instance;
  std::string error;
};

}  // namespace

// ---------------------------------------------------------------------------
// gen-samples

void cmd_gen_samples(const RunConfig& c) {
  const auto corpora = c.select(c.sample_corpora);
  if (corpora.empty()) throw usage_error("gen-samples: no corpora configured");
  const Stopwords stopwords = c.stopwords();

  std::vector<Dialogue> all;
  std::vector<std::vector<Dialogue>> per_corpus;
  for (const auto& d : corpora) {
    per_corpus.push_back(load(c, d));
    all.insert(all.end(), per_corpus.back().begin(), per_corpus.back().end());
  }

  json selection = json::object();
  std::vector<AugmentedPair> vsp_extra;
  std::vector<AugmentedPair> paraphrases;
  const fs::path aug_dir = c.output_dir / "augment";
  if (!c.augment.translations.empty()) {
    const auto translations = load_augmentations(c.augment.translations);
    vsp_extra = select(translations, c.augment.vsp_fraction, SelectionDirection::highest_quality, c.augment.per_language);
    const auto nsp = select(translations, c.augment.nsp_fraction, SelectionDirection::highest_quality, c.augment.per_language);
    spdlog::info("VSP translations: selected {} of {} pairs", vsp_extra.size(), translations.size());
    spdlog::info("NSP translations: selected {} of {} pairs", nsp.size(), translations.size());
    io::write_jsonl(aug_dir / "translations_vsp.jsonl", rows_of(vsp_extra));
    io::write_jsonl(aug_dir / "translations_nsp.jsonl", rows_of(nsp));
    selection["vsp_translations"] = {{"available", translations.size()}, {"selected", vsp_extra.size()}};
    selection["nsp_translations"] = {{"available", translations.size()}, {"selected", nsp.size()}};
    for (double f : c.augment.eng_fractions) {
      const auto eng = select(translations, f, SelectionDirection::highest_quality, c.augment.per_language);
      const auto pct = static_cast<int>(std::lround(f * 100.0));
      spdlog::info("ENG sweep {}%: selected {} of {} pairs", pct, eng.size(), translations.size());
      io::write_jsonl(aug_dir / fmt::format("eng_sweep_{:03d}.jsonl", pct), rows_of(eng));
      selection[fmt::format("eng_sweep_{:03d}", pct)] = {{"available", translations.size()}, {"selected", eng.size()}};
    }
  }
  if (!c.augment.paraphrases.empty()) {
    const auto all_paraphrases = load_augmentations(c.augment.paraphrases);
    paraphrases = select(all_paraphrases, c.augment.paraphrase_fraction, SelectionDirection::lowest_quality,
                         c.augment.per_language);
    spdlog::info("paraphrases: selected {} of {} pairs", paraphrases.size(), all_paraphrases.size());
    io::write_jsonl(aug_dir / "paraphrases_selected.jsonl", rows_of(paraphrases));
    selection["paraphrases"] = {{"available", all_paraphrases.size()}, {"selected", paraphrases.size()}};
  }

  const auto vsp = make_vsp_samples(all, vsp_extra, c.seed, stopwords);
  GenerationResult nsp;
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    auto part = make_nsp_pairs(per_corpus[i], derive_seed(c.seed, "corpus:" + corpora[i].name), c.nsp, stopwords);
    nsp.samples.insert(nsp.samples.end(), part.samples.begin(), part.samples.end());
    nsp.skipped.insert(nsp.skipped.end(), part.skipped.begin(), part.skipped.end());
  }
  const auto siamese = make_siamese_pairs(nsp.samples, paraphrases);

  const fs::path dir = paths::samples_dir(c);
  io::write_jsonl(dir / "vsp.jsonl", rows_of(vsp.samples));
  io::write_jsonl(dir / "nsp.jsonl", rows_of(nsp.samples));
  io::write_jsonl(dir / "siamese.jsonl", rows_of(siamese));
  std::vector<json> skipped;
  for (const GenerationResult* r : std::array<const GenerationResult*, 2>{&vsp, &nsp})
    for (const auto& s : r->skipped) skipped.push_back(json{{"source_id", s.source_id}, {"reason", s.reason}});
  io::write_jsonl(dir / "skipped.jsonl", skipped);

  std::vector<std::string> names;
  for (const auto& d : corpora) names.push_back(d.name);
  json summary = {{"seed", c.seed},
                  {"corpora", names},
                  {"dialogues", all.size()},
                  {"vsp", sample_counts(vsp)},
                  {"nsp", sample_counts(nsp)},
                  {"siamese", {{"pairs", siamese.size()}}},
                  {"selection", selection},
                  {"parameters",
                   {{"coverage_threshold", c.nsp.coverage_threshold},
                    {"max_negative_attempts", c.nsp.max_negative_attempts},
                    {"context_window", c.nsp.context_window},
                    {"vsp_fraction", c.augment.vsp_fraction},
                    {"nsp_fraction", c.augment.nsp_fraction},
                    {"eng_fractions", c.augment.eng_fractions},
                    {"paraphrase_fraction", c.augment.paraphrase_fraction},
                    {"selection_scope", c.augment.per_language ? "per_language" : "pooled"}}}};
  io::write_json(dir / "summary.json", summary);
  spdlog::info("wrote {} VSP, {} NSP and {} Siamese samples to {}", vsp.samples.size(), nsp.samples.size(),
               siamese.size(), dir.string());
}

// ---------------------------------------------------------------------------
// score

ScoreRun judge_dataset(const RunConfig& c, const std::string& dataset, const std::vector<Dialogue>& dialogues,
                       ChatClient& client) {
  const auto instances = turn_instances(c, dialogues);
  struct Task {
    Level level;
    std::size_t item;
    const JudgeAspect* aspect;
  };
  std::vector<Task> tasks;
  for (const auto& a : c.llm.turn_aspects)
    for (std::size_t i = 0; i < instances.size(); ++i) tasks.push_back({Level::turn, i, &a});
  for (const auto& a : c.llm.dialogue_aspects)
    for (std::size_t i = 0; i < dialogues.size(); ++i) tasks.push_back({Level::dialogue, i, &a});

  std::vector<std::optional<JudgeResult>> results(tasks.size());
  std::vector<std::vector<TranscriptEntry>> logs(tasks.size());
  std::vector<std::string> errors(tasks.size());
  const JudgeSettings settings{c.llm.model, c.llm.max_attempts};

  for_each_bounded(tasks.size(), c.llm.concurrency, [&](std::size_t k) {
    const Task& t = tasks[k];
    const std::string id =
        t.level == Level::turn ? instances[t.item].instance.instance_id : dialogues[t.item].dialogue_id;
    const std::string prompt = t.level == Level::turn ? build_turn_prompt(instances[t.item].instance, t.aspect->aspect)
                                                      : build_dialogue_prompt(dialogues[t.item], t.aspect->aspect);
    const std::string key = dataset + "|" + std::string(to_string(t.level)) + "|" + id + "|" + t.aspect->tag;
    try {
      results[k] = judge(prompt, t.level, client, settings, &logs[k], key);
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  });

  ScoreRun run;
  std::map<std::string, std::pair<int, int>> counts;  // submetric -> attempted, failed
  std::vector<Failure> failures;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const Task& t = tasks[k];
    const SubmetricId sid{Family::LLM, t.aspect->tag};
    const std::string id =
        t.level == Level::turn ? instances[t.item].instance.instance_id : dialogues[t.item].dialogue_id;
    auto& cnt = counts[sid.key()];
    ++cnt.first;
    run.transcript.insert(run.transcript.end(), logs[k].begin(), logs[k].end());
    if (!results[k]) {
      ++cnt.second;
      failures.push_back({sid.key(), id, errors[k]});
      continue;
    }
    run.records.push_back({dataset, t.level, id, sid, results[k]->parsed.value, results[k]->normalized});
  }

  // Turn-level judgments also reach the dialogue level as per-dialogue means.
  std::map<std::pair<std::string, SubmetricId>, std::vector<const ScoreRecord*>> by_dialogue;
  std::map<std::string, std::size_t> expected;
  for (const auto& ref : instances) ++expected[ref.dialogue_id];
  std::map<std::string, std::string> owner;
  for (const auto& ref : instances) owner[ref.instance.instance_id] = ref.dialogue_id;
  for (const auto& r : run.records)
    if (r.level == Level::turn) by_dialogue[{owner.at(r.instance_id), r.submetric}].push_back(&r);
  std::vector<ScoreRecord> lifted;
  for (const auto& [key, recs] : by_dialogue) {
    if (recs.size() != expected.at(key.first)) continue;
    std::vector<double> raw, norm;
    for (const auto* r : recs) {
      raw.push_back(r->raw);
      norm.push_back(*r->normalized);
    }
    lifted.push_back({dataset, Level::dialogue, key.first, key.second, dialogue_score_from_turns(raw),
                      dialogue_score_from_turns(norm)});
  }
  run.records.insert(run.records.end(), lifted.begin(), lifted.end());
  sort_canonical(run.records);

  json subs = json::object();
  for (const auto& [key, cnt] : counts) {
    subs[key] = {{"attempted", cnt.first}, {"failed", cnt.second}};
    if (cnt.first > 0 && cnt.first == cnt.second) run.fully_failed.push_back(key);
  }
  json fails = json::array();
  for (const auto& f : failures) fails.push_back({{"submetric", f.submetric}, {"instance", f.instance}, {"error", f.error}});
  run.summary = {{"submetrics", subs}, {"failures", fails}};
  return run;
}

ScoreRun score_dataset(const RunConfig& c, const std::string& dataset, const std::vector<Dialogue>& dialogues,
                       ScoreTransport& transport, ChatClient* judge_client) {
  const auto instances = turn_instances(c, dialogues);
  std::vector<ScoreRecord> turn_records;
  std::vector<Failure> failures;
  json subs = json::object();
  std::vector<std::string> fully_failed;

  for (const auto& backend : c.backends) {
    std::vector<std::optional<double>> raw(instances.size());
    std::vector<std::string> errors(instances.size());
    for_each_bounded(instances.size(), c.concurrency, [&](std::size_t i) {
      try {
        raw[i] = score_instance(backend, instances[i].instance, transport);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    int failed = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (raw[i]) {
        turn_records.push_back({dataset, Level::turn, instances[i].instance.instance_id, backend.submetric, *raw[i], {}});
      } else {
        ++failed;
        failures.push_back({backend.submetric.key(), instances[i].instance.instance_id, errors[i]});
      }
    }
    const auto key = backend.submetric.key();
    subs[key] = {{"attempted", instances.size()}, {"failed", failed}};
    if (!instances.empty() && failed == static_cast<int>(instances.size())) {
      fully_failed.push_back(key);
      spdlog::error("{}: every instance failed ({})", key, errors.front());
    } else if (failed > 0) {
      spdlog::warn("{}: {} of {} instances failed", key, failed, instances.size());
    }
  }
  normalize_scores(turn_records);

  // Dialogue level: mean of each dialogue's normalized turn scores, re-normalized.
  std::map<std::string, std::size_t> expected;
  std::map<std::string, std::string> owner;
  for (const auto& ref : instances) {
    ++expected[ref.dialogue_id];
    owner[ref.instance.instance_id] = ref.dialogue_id;
  }
  std::map<std::pair<std::string, SubmetricId>, std::vector<double>> per_dialogue;
  for (const auto& r : turn_records) per_dialogue[{owner.at(r.instance_id), r.submetric}].push_back(*r.normalized);
  std::vector<ScoreRecord> dialogue_records;
  for (const auto& [key, scores] : per_dialogue)
    if (scores.size() == expected.at(key.first))
      dialogue_records.push_back({dataset, Level::dialogue, key.first, key.second, dialogue_score_from_turns(scores), {}});
  normalize_scores(dialogue_records);

  std::vector<ScoreRecord> records = std::move(turn_records);
  records.insert(records.end(), dialogue_records.begin(), dialogue_records.end());

  json ensemble_notes = json::object();
  for (const auto& [family, members] : c.memberships) {
    const std::set<std::string> member_set(members.begin(), members.end());
    std::vector<ScoreRecord> family_records;
    for (const auto& r : records)
      if (r.submetric.family == family && member_set.contains(r.submetric.variant)) family_records.push_back(r);
    if (family_records.empty()) continue;
    try {
      const auto ens = model_ensemble(family_records, family, members);
      records.insert(records.end(), ens.begin(), ens.end());
      ensemble_notes[std::string(to_string(family))] = "complete";
    } catch (const Error& e) {
      ensemble_notes[std::string(to_string(family))] = e.what();
      spdlog::warn("ensemble {} skipped: {}", to_string(family), e.what());
    }
  }

  ScoreRun run;
  if (judge_client) {
    auto judged = judge_dataset(c, dataset, dialogues, *judge_client);
    records.insert(records.end(), judged.records.begin(), judged.records.end());
    run.transcript = std::move(judged.transcript);
    for (const auto& [k, v] : judged.summary.at("submetrics").items()) subs[k] = v;
    for (const auto& f : judged.summary.at("failures"))
      failures.push_back({f.at("submetric"), f.at("instance"), f.at("error")});
    fully_failed.insert(fully_failed.end(), judged.fully_failed.begin(), judged.fully_failed.end());
  }
  sort_canonical(records);

  json fails = json::array();
  for (const auto& f : failures) fails.push_back({{"submetric", f.submetric}, {"instance", f.instance}, {"error", f.error}});
  std::sort(fully_failed.begin(), fully_failed.end());
  run.records = std::move(records);
  run.fully_failed = fully_failed;
  run.summary = {{"dataset", dataset},
                 {"turn_instances", instances.size()},
                 {"dialogues", dialogues.size()},
                 {"records", run.records.size()},
                 {"submetrics", subs},
                 {"ensembles", ensemble_notes},
                 {"failures", fails},
                 {"fully_failed", fully_failed}};
  return run;
}

void cmd_score(const RunConfig& c, const std::optional<std::string>& dataset, bool offline) {
  std::vector<DatasetConfig> targets = dataset ? std::vector{c.dataset(*dataset)} : c.datasets;
  if (targets.empty()) throw usage_error("score: no datasets configured");
  DispatchTransport transport(offline);
  const auto client = make_chat_client(c.llm, offline);
  std::vector<std::string> failed;
  for (const auto& d : targets) {
    const auto dialogues = load(c, d);
    const auto run = score_dataset(c, d.name, dialogues, transport, client.get());
    io::write_jsonl(paths::scores_file(c, d.name), rows_of(run.records));
    io::write_json(paths::score_summary_file(c, d.name), run.summary);
    if (client) io::write_jsonl(paths::transcript_file(c, d.name), rows_of(run.transcript));
    spdlog::info("{}: wrote {} score records", d.name, run.records.size());
    for (const auto& f : run.fully_failed) failed.push_back(d.name + ":" + f);
  }
  if (!failed.empty()) {
    std::string list;
    for (const auto& f : failed) list += (list.empty() ? "" : ", ") + f;
    throw backend_error("submetrics failed on every instance: " + list);
  }
}

void cmd_replay(const RunConfig& c, const std::optional<std::string>& dataset, const fs::path& transcript) {
  if (c.llm.turn_aspects.empty() && c.llm.dialogue_aspects.empty())
    throw usage_error("replay: no LLM aspects configured");
  ReplayChatClient client(load_transcript(transcript));
  std::vector<DatasetConfig> targets = dataset ? std::vector{c.dataset(*dataset)} : c.datasets;
  RunConfig serial = c;
  serial.llm.concurrency = 1;
  std::vector<std::string> failed;
  for (const auto& d : targets) {
    const auto dialogues = load(c, d);
    const auto run = judge_dataset(serial, d.name, dialogues, client);
    io::write_jsonl(paths::replay_file(c, d.name), rows_of(run.records));
    spdlog::info("{}: replayed {} judge records", d.name, run.records.size());
    for (const auto& f : run.fully_failed) failed.push_back(d.name + ":" + f);
  }
  if (!failed.empty()) throw backend_error("replay failed for " + std::to_string(failed.size()) + " submetric(s)");
}

std::vector<ScoreRecord> load_scores(const fs::path& path) {
  std::vector<ScoreRecord> out;
  for (const auto& row : io::read_jsonl(path)) out.push_back(score_record_from_json(row));
  return out;
}

// ---------------------------------------------------------------------------
// estimate-weights

std::vector<SubmetricId> fusion_submetrics(const std::vector<ScoreRecord>& records, Level level) {
  std::set<SubmetricId> ids;
  for (const auto& r : records)
    if (r.level == level && (r.submetric.family == Family::LLM || r.submetric.variant == kEnsembleVariant))
      ids.insert(r.submetric);
  return {ids.begin(), ids.end()};
}

std::map<std::string, double> annotations(const std::vector<Dialogue>& dialogues, Level level, const AspectId& aspect,
                                          const AnnotationScale& scale) {
  std::map<std::string, double> out;
  for (const auto& d : dialogues) {
    if (level == Level::dialogue) {
      if (auto it = d.dialogue_annotations.find(aspect); it != d.dialogue_annotations.end())
        out[d.dialogue_id] = normalize_annotation(it->second, scale);
      continue;
    }
    auto it = d.turn_annotations.find(aspect);
    if (it == d.turn_annotations.end()) continue;
    for (std::size_t i = 1; i < it->second.size(); ++i)
      if (it->second[i]) out[instance_id(d.dialogue_id, i)] = normalize_annotation(*it->second[i], scale);
  }
  return out;
}

namespace {

std::set<AspectId> annotated_aspects(const std::vector<Dialogue>& dialogues, Level level) {
  std::set<AspectId> out;
  for (const auto& d : dialogues) {
    if (level == Level::dialogue)
      for (const auto& [a, v] : d.dialogue_annotations) out.insert(a);
    else
      for (const auto& [a, v] : d.turn_annotations) out.insert(a);
  }
  return out;
}

std::map<std::string, std::map<SubmetricId, double>> scores_by_instance(const std::vector<ScoreRecord>& records,
                                                                        Level level) {
  std::map<std::string, std::map<SubmetricId, double>> out;
  for (const auto& r : records)
    if (r.level == level && r.normalized) out[r.instance_id][r.submetric] = *r.normalized;
  return out;
}

}  // namespace

StatTable development_stats(const std::vector<ScoreRecord>& records, const std::vector<Dialogue>& dialogues,
                            Level level, CorrelationKind kind, const AnnotationScale& scale) {
  const auto submetrics = fusion_submetrics(records, level);
  const auto scores = scores_by_instance(records, level);
  struct Slot {
    AspectId aspect;
    SubmetricId submetric;
  };
  std::vector<Slot> slots;
  std::vector<CorrelationCell> cells;
  for (const auto& aspect : annotated_aspects(dialogues, level)) {
    const auto human = annotations(dialogues, level, aspect, scale);
    for (const auto& sid : submetrics) {
      CorrelationCell cell;
      for (const auto& [id, h] : human) {
        auto it = scores.find(id);
        if (it == scores.end()) continue;
        auto s = it->second.find(sid);
        if (s == it->second.end()) continue;
        cell.x.push_back(s->second);
        cell.y.push_back(h);
      }
      slots.push_back({aspect, sid});
      cells.push_back(std::move(cell));
    }
  }
  const auto stats = correlate_cells(cells, kind);
  StatTable table;
  for (std::size_t i = 0; i < slots.size(); ++i) table[slots[i].aspect][slots[i].submetric] = stats[i];
  return table;
}

WeightEstimate estimate_weights(const RunConfig& c,
                                const std::vector<std::pair<std::vector<ScoreRecord>, std::vector<Dialogue>>>& dev,
                                const std::vector<std::string>& sources) {
  WeightEstimate est;
  for (Level level : {Level::turn, Level::dialogue}) {
    const auto& targets = c.test_aspects(level);
    if (targets.empty()) continue;
    std::vector<WeightTable> tables;
    for (std::size_t k = 0; k < dev.size(); ++k) {
      const auto stats = development_stats(dev[k].first, dev[k].second, level, c.weight_correlation, c.scale);
      WeightTable t;
      t.params = c.crs;
      t.sources = {sources[k]};
      for (const auto& [aspect, row_stats] : stats) {
        if (!c.mapping.contains(aspect)) continue;
        const std::string where = fmt::format("[{} {}] {}", to_string(level), sources[k], aspect);
        try {
          auto row = crs_row(row_stats, c.crs, aspect);
          std::string kept, masked;
          for (const auto& [id, w] : row.weights)
            if (w != 0.0) kept += fmt::format("{}{}={:.4f}", kept.empty() ? "" : " ", id.key(), w);
          for (const auto& m : row.masked) masked += (masked.empty() ? "" : " ") + m.key();
          est.decisions.push_back(row.fallback ? fmt::format("{}: fallback, kept {}", where, kept)
                                               : fmt::format("{}: kept {}; masked {}", where, kept, masked));
          t.rows[aspect] = std::move(row);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::degenerate) throw;
          est.decisions.push_back(fmt::format("{}: skipped ({})", where, e.what()));
        }
      }
      tables.push_back(std::move(t));
    }
    std::set<AspectId> covered;
    for (const auto& t : tables)
      for (const auto& [aspect, row] : t.rows) covered.insert(c.mapping.at(aspect));
    for (const auto& target : targets)
      if (!covered.contains(target))
        throw degenerate_error(fmt::format("no usable submetric for {} aspect '{}'", to_string(level), target));
    auto merged = map_and_average(tables, c.mapping, targets);
    merged.params = c.crs;
    merged.sources = sources;
    est.levels[level] = std::move(merged);
  }
  return est;
}

json weights_document(const WeightEstimate& est, const RunConfig& c) {
  json levels = json::object();
  for (const auto& [level, table] : est.levels) levels[std::string(to_string(level))] = to_json(table);
  return {{"version", kToolkitVersion},
          {"correlation", c.weight_correlation == CorrelationKind::spearman ? "spearman" : "pearson"},
          {"levels", levels}};
}

std::map<Level, WeightTable> load_weights(const fs::path& path) {
  const json doc = io::read_json(path);
  std::map<Level, WeightTable> out;
  if (!doc.contains("levels") || !doc.at("levels").is_object()) throw data_error(path.string() + ": missing 'levels'");
  for (const auto& [level, table] : doc.at("levels").items()) out[parse_level(level)] = weight_table_from_json(table);
  return out;
}

void cmd_estimate_weights(const RunConfig& c, const fs::path& weights_out) {
  std::vector<std::pair<std::vector<ScoreRecord>, std::vector<Dialogue>>> dev;
  std::vector<std::string> sources;
  for (const auto& d : c.select(c.dev_datasets)) {
    dev.emplace_back(load_scores(paths::scores_file(c, d.name)), load(c, d));
    sources.push_back(d.name);
  }
  if (dev.empty()) throw usage_error("estimate-weights: no development datasets");
  const auto est = estimate_weights(c, dev, sources);
  for (const auto& line : est.decisions) spdlog::info("{}", line);
  io::write_json(weights_out, weights_document(est, c));
  spdlog::info("wrote {}", weights_out.string());
}

// ---------------------------------------------------------------------------
// evaluate

EvalReport cmd_evaluate(const RunConfig& c, const fs::path& weights_path) {
  const auto weights = load_weights(weights_path);
  std::vector<ReportInput> inputs;
  std::vector<json> fused_rows;
  for (const auto& d : c.select(c.test_datasets)) {
    const auto records = load_scores(paths::scores_file(c, d.name));
    const auto dialogues = load(c, d);
    const std::string language = !d.language.empty() ? d.language : (dialogues.empty() ? "" : dialogues.front().language);
    for (Level level : {Level::turn, Level::dialogue}) {
      const auto& aspects = c.test_aspects(level);
      if (aspects.empty()) continue;
      auto wt = weights.find(level);
      if (wt == weights.end()) throw data_error(fmt::format("weights have no {} level table", to_string(level)));
      const auto scores = scores_by_instance(records, level);
      for (const auto& aspect : aspects) {
        auto row = wt->second.rows.find(aspect);
        if (row == wt->second.rows.end())
          throw data_error(fmt::format("weights have no {} row for '{}'", to_string(level), aspect));
        const auto human = annotations(dialogues, level, aspect, c.scale);
        if (human.empty())
          throw data_error(fmt::format("{}: no {} annotations for '{}'", d.name, to_string(level), aspect));
        ReportInput in{d.name, language, level, aspect, {}, {}};
        for (const auto& [id, h] : human) {
          auto it = scores.find(id);
          if (it == scores.end()) throw data_error(fmt::format("{}: no scores for {} instance '{}'", d.name, to_string(level), id));
          const double f = fuse(it->second, row->second);
          in.fused.push_back(f);
          in.human.push_back(h);
          fused_rows.push_back({{"dataset", d.name},
                                {"level", to_string(level)},
                                {"aspect", aspect},
                                {"instance_id", id},
                                {"fused", f},
                                {"human", h}});
        }
        inputs.push_back(std::move(in));
      }
    }
  }
  if (inputs.empty()) throw usage_error("evaluate: nothing to evaluate");
  const auto report = build_report(inputs);
  const fs::path dir = paths::report_dir(c);
  io::write_json(dir / "report.json", to_json(report));
  io::write_text(dir / "report.txt", render_text(report));
  io::write_jsonl(dir / "fused_scores.jsonl", fused_rows);
  spdlog::info("wrote report to {}", dir.string());
  return report;
}

}  // namespace dialeval
