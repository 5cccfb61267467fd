#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialeval/config.hpp"
#include "dialeval/corpus.hpp"
#include "dialeval/ensemble.hpp"
#include "dialeval/llmjudge.hpp"
#include "dialeval/report.hpp"
#include "dialeval/scorers.hpp"

namespace dialeval {

namespace paths {
std::filesystem::path samples_dir(const RunConfig& c);
std::filesystem::path scores_file(const RunConfig& c, const std::string& dataset);
std::filesystem::path score_summary_file(const RunConfig& c, const std::string& dataset);
std::filesystem::path transcript_file(const RunConfig& c, const std::string& dataset);
std::filesystem::path replay_file(const RunConfig& c, const std::string& dataset);
std::filesystem::path weights_file(const RunConfig& c);
std::filesystem::path report_dir(const RunConfig& c);
}  // namespace paths

/// Routes mock:// endpoints (or everything, when offline) to the mock
/// backend and the rest over HTTP.
class DispatchTransport final : public ScoreTransport {
 public:
  explicit DispatchTransport(bool offline) : offline_(offline) {}
  HttpReply post(const BackendDescriptor& backend, const std::string& body) override;

 private:
  bool offline_;
  MockScoreTransport mock_;
  HttpScoreTransport http_;
};

/// Offline: replay transcript when configured, else the mock judge.
/// Online: mock judge for "mock://", else HTTP with DIALEVAL_LLM_TOKEN.
/// Returns nullptr when no LLM aspects are configured.
std::unique_ptr<ChatClient> make_chat_client(const LlmConfig& llm, bool offline);

struct ScoreRun {
  std::vector<ScoreRecord> records;  // canonical order
  std::vector<TranscriptEntry> transcript;
  nlohmann::json summary;
  std::vector<std::string> fully_failed;  // submetric keys with no successful instance
};

/// Scores every turn instance and dialogue of one dataset with the
/// configured backends and judge, then normalizes, aggregates dialogue
/// level scores and builds model ensembles.
ScoreRun score_dataset(const RunConfig& config, const std::string& dataset, const std::vector<Dialogue>& dialogues,
                       ScoreTransport& transport, ChatClient* judge_client);

/// LLM-judge records only (turn and dialogue level), as score_dataset makes them.
ScoreRun judge_dataset(const RunConfig& config, const std::string& dataset, const std::vector<Dialogue>& dialogues,
                       ChatClient& client);

std::vector<ScoreRecord> load_scores(const std::filesystem::path& path);

/// Submetrics that take part in fusion at `level`: family ensembles and
/// LLM aspects.
std::vector<SubmetricId> fusion_submetrics(const std::vector<ScoreRecord>& records, Level level);

/// instance id -> normalized annotation, for instances annotated with `aspect`.
std::map<std::string, double> annotations(const std::vector<Dialogue>& dialogues, Level level, const AspectId& aspect,
                                          const AnnotationScale& scale);

/// Per-aspect correlation of each fusion submetric with the annotations of
/// one development dataset.
StatTable development_stats(const std::vector<ScoreRecord>& records, const std::vector<Dialogue>& dialogues,
                            Level level, CorrelationKind kind, const AnnotationScale& scale);

struct WeightEstimate {
  std::map<Level, WeightTable> levels;
  std::vector<std::string> decisions;  // human-readable mask/fallback log
};

/// crs_weights per development dataset, then map_and_average per level.
WeightEstimate estimate_weights(const RunConfig& config,
                                const std::vector<std::pair<std::vector<ScoreRecord>, std::vector<Dialogue>>>& dev,
                                const std::vector<std::string>& sources);

nlohmann::json weights_document(const WeightEstimate& estimate, const RunConfig& config);
std::map<Level, WeightTable> load_weights(const std::filesystem::path& path);

// Subcommands. Each throws dialeval::Error on failure.
void cmd_gen_samples(const RunConfig& config);
void cmd_score(const RunConfig& config, const std::optional<std::string>& dataset, bool offline);
void cmd_estimate_weights(const RunConfig& config, const std::filesystem::path& weights_out);
EvalReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& weights_path);
void cmd_replay(const RunConfig& config, const std::optional<std::string>& dataset,
                const std::filesystem::path& transcript);

}  // namespace dialeval
