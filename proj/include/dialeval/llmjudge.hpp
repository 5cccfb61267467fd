#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialeval/corpus.hpp"

namespace dialeval {

inline constexpr std::string_view kSingleScoreInstruction = "Provide a single score and nothing else.";
inline constexpr std::string_view kRepromptInstruction = "Reply with a single integer from 1 to 5.";

std::string build_turn_prompt(const EvalInstance& instance, std::string_view aspect);
std::string build_dialogue_prompt(const Dialogue& dialogue, std::string_view aspect);

enum class ParseMethod { single_integer, per_turn_average, reprompted };
std::string_view to_string(ParseMethod m);

struct ParsedScore {
  double value = 0.0;  // in [1, 5]
  ParseMethod method = ParseMethod::single_integer;
};

/// Standalone integers in [1, 5], in order of appearance. A standalone
/// integer is a maximal digit run that is not part of a range ("1-5"), a
/// decimal ("3.5"), a longer number, a scale reference ("out of 5", "/5",
/// "scale of 1") or a turn label ("Turn 2:").
std::vector<int> extract_scores(std::string_view reply);

/// Turn level: first extracted score. Dialogue level: one score as-is,
/// several scores averaged (per-turn listings). nullopt when none found.
std::optional<ParsedScore> parse_score(std::string_view reply, Level level);

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct JudgeRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::string model_name;
  int max_attempts = 3;
};

nlohmann::json request_body(const JudgeRequest& request);

/// Returns the assistant text of the first choice. Throws Error(backend)
/// when the service cannot be reached.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const JudgeRequest& request) = 0;
};

/// OpenAI-style chat-completion endpoint.
class HttpChatClient final : public ChatClient {
 public:
  struct Options {
    std::string endpoint;
    std::string token;  // bearer token; empty = no Authorization header
    std::chrono::milliseconds timeout{60000};
    int transport_retries = 3;
    std::chrono::milliseconds backoff{500};
  };
  explicit HttpChatClient(Options options) : options_(std::move(options)) {}
  std::string complete(const JudgeRequest& request) override;

 private:
  Options options_;
};

/// Deterministic offline judge. Replies are a pure function of the prompt:
/// mostly a bare integer, sometimes a per-turn listing at dialogue level, and
/// occasionally a refusal on the first attempt to exercise re-prompting.
class MockChatClient final : public ChatClient {
 public:
  std::string complete(const JudgeRequest& request) override;
};

struct TranscriptEntry {
  std::string key;  // "<dataset>|<level>|<instance>|<aspect tag>"
  int attempt = 1;
  nlohmann::json request;
  std::string reply;
};

nlohmann::json to_json(const TranscriptEntry& e);
TranscriptEntry transcript_entry_from_json(const nlohmann::json& j);
std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path);

/// Answers requests from a recorded transcript, matched by the exact
/// message list. Throws Error(backend) for unrecorded requests.
class ReplayChatClient final : public ChatClient {
 public:
  explicit ReplayChatClient(const std::vector<TranscriptEntry>& transcript);
  std::string complete(const JudgeRequest& request) override;

 private:
  std::map<std::string, std::string> replies_;
};

struct JudgeSettings {
  std::string model_name = "gpt-3.5-turbo";
  int max_attempts = 3;
};

struct JudgeResult {
  double normalized = 0.0;  // (value - 1) / 4
  ParsedScore parsed;
  int requests = 0;
};

/// Prompts, parses and re-prompts up to max_attempts times. Every exchange
/// is appended to `log` when given. Throws Error(backend) on judge failure.
JudgeResult judge(const std::string& prompt, Level level, ChatClient& client, const JudgeSettings& settings,
                  std::vector<TranscriptEntry>* log = nullptr, std::string_view log_key = {});

double normalize_judge_score(double value);

/// Mean over instances of the mean absolute deviation of each instance's
/// scores (one row per run) from their mean.
double stability_mad(const std::vector<std::vector<double>>& runs);

}  // namespace dialeval
