#include "dialeval/llmjudge.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <thread>

#include "dialeval/error.hpp"
#include "dialeval/http.hpp"
#include "dialeval/sampler.hpp"
#include "dialeval/text.hpp"

namespace dialeval {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Prompts

std::string build_turn_prompt(const EvalInstance& instance, std::string_view aspect) {
  std::string p = "Given the Context, evaluate from 1-5 the Response in terms of ";
  p += aspect;
  p += ". ";
  p += kSingleScoreInstruction;
  p += "\n\nContext:\n";
  p += render_turns(instance.context);
  p += "\n\nResponse:\n";
  p += render_turn(instance.response);
  return p;
}

std::string build_dialogue_prompt(const Dialogue& dialogue, std::string_view aspect) {
  std::string p = "Evaluate the following dialogue from 1-5 in terms of ";
  p += aspect;
  p += ". ";
  p += kSingleScoreInstruction;
  p += "\n\n";
  p += render_turns(dialogue.turns);
  return p;
}

// ---------------------------------------------------------------------------
// Parsing

std::string_view to_string(ParseMethod m) {
  switch (m) {
    case ParseMethod::single_integer: return "single_integer";
    case ParseMethod::per_turn_average: return "per_turn_average";
    case ParseMethod::reprompted: return "reprompted";
  }
  return "single_integer";
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Lowercased word immediately before position `pos`, skipping spaces, '#' and ':'.
std::string word_before(std::string_view s, std::size_t pos) {
  std::size_t e = pos;
  while (e > 0 && (s[e - 1] == ' ' || s[e - 1] == '#' || s[e - 1] == '\t')) --e;
  std::size_t b = e;
  while (b > 0 && std::isalpha(static_cast<unsigned char>(s[b - 1]))) --b;
  return lower_ascii(s.substr(b, e - b));
}

/// Text before `pos` with trailing blanks removed, lowercased (last 16 bytes).
std::string tail_before(std::string_view s, std::size_t pos) {
  std::size_t e = pos;
  while (e > 0 && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  const std::size_t b = e > 16 ? e - 16 : 0;
  return lower_ascii(s.substr(b, e - b));
}

bool followed_by_to_number(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  while (i < s.size() && s[i] == ' ') ++i;
  if (i + 2 > s.size() || lower_ascii(s.substr(i, 2)) != "to") return false;
  i += 2;
  if (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) return false;
  while (i < s.size() && s[i] == ' ') ++i;
  return i < s.size() && is_digit(s[i]);
}

constexpr std::array<std::string_view, 6> kTurnLabels = {"turn", "response", "utterance", "round", "speaker", "dialogue"};

}  // namespace

std::vector<int> extract_scores(std::string_view s) {
  std::vector<int> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    const std::size_t b = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    const std::size_t e = i;
    if (e - b > 2) continue;
    const int value = std::stoi(std::string(s.substr(b, e - b)));
    if (value < 1 || value > 5) continue;

    const char prev = b > 0 ? s[b - 1] : '\0';
    const char next = e < s.size() ? s[e] : '\0';
    if (prev == '-' || next == '-') continue;                            // ranges, negatives
    if (prev == '.' && b >= 2 && is_digit(s[b - 2])) continue;           // fractional part
    if (next == '.' && e + 1 < s.size() && is_digit(s[e + 1])) continue;  // integer part of a decimal
    if (prev == '/') continue;                                          // "4/5"
    if (prev == ',' && b >= 2 && is_digit(s[b - 2])) continue;           // "3,5"
    if (next == ',' && e + 1 < s.size() && is_digit(s[e + 1])) continue;

    const std::string before = tail_before(s, b);
    if (before.ends_with("out of") || before.ends_with("scale of")) continue;
    if (before.ends_with(" to") || before == "to") {
      // "... 1 to 5": the upper bound of a stated scale
      std::size_t k = b;
      while (k > 0 && s[k - 1] == ' ') --k;
      k -= 2;
      while (k > 0 && s[k - 1] == ' ') --k;
      if (k > 0 && is_digit(s[k - 1])) continue;
    }
    if (followed_by_to_number(s, e)) continue;
    // "Turn 2: 5" labels the score that follows; "the dialogue 4 out of 5" does not.
    std::size_t after = e;
    while (after < s.size() && (s[after] == ' ' || s[after] == '\t')) ++after;
    const bool terminated = after < s.size() && (s[after] == ':' || s[after] == ')' || s[after] == '=');
    const std::string label = word_before(s, b);
    if (terminated && std::find(kTurnLabels.begin(), kTurnLabels.end(), label) != kTurnLabels.end()) continue;
    out.push_back(value);
  }
  return out;
}

std::optional<ParsedScore> parse_score(std::string_view reply, Level level) {
  const auto scores = extract_scores(reply);
  if (scores.empty()) return std::nullopt;
  if (level == Level::turn || scores.size() == 1)
    return ParsedScore{static_cast<double>(scores.front()), ParseMethod::single_integer};
  double sum = 0.0;
  for (int v : scores) sum += v;
  return ParsedScore{sum / static_cast<double>(scores.size()), ParseMethod::per_turn_average};
}

// ---------------------------------------------------------------------------
// Clients

json request_body(const JudgeRequest& request) {
  json msgs = json::array();
  for (const auto& m : request.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", request.model_name}, {"temperature", request.temperature}, {"messages", std::move(msgs)}};
}

std::string HttpChatClient::complete(const JudgeRequest& request) {
  const std::string body = request_body(request).dump();
  std::vector<std::pair<std::string, std::string>> headers;
  if (!options_.token.empty()) headers.emplace_back("Authorization", "Bearer " + options_.token);
  const int attempts = std::max(1, options_.transport_retries);
  auto delay = options_.backoff;
  std::string last_failure;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    try {
      const HttpReply reply = http_post_json(options_.endpoint, body, headers, options_.timeout);
      if (reply.status == 200) {
        try {
          return json::parse(reply.body).at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
          throw backend_error(std::string("chat completion protocol error: ") + e.what());
        }
      }
      if (reply.status >= 400 && reply.status < 500 && reply.status != 429)
        throw backend_error("chat completion rejected: HTTP " + std::to_string(reply.status));
      last_failure = "HTTP " + std::to_string(reply.status);
    } catch (const TransportFailure& e) {
      last_failure = e.what();
    }
    if (attempt < attempts && delay.count() > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw backend_error("chat completion endpoint unavailable after " + std::to_string(attempts) +
                      " attempts: " + last_failure);
}

namespace {

std::uint64_t fnv(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 29;
  return h;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t e = s.find('\n', pos);
    if (e == std::string_view::npos) e = s.size();
    out.emplace_back(s.substr(pos, e - pos));
    pos = e + 1;
  }
  return out;
}

std::string strip_speaker(const std::string& line) {
  const auto c = line.find(": ");
  return c == std::string::npos ? line : line.substr(c + 2);
}

int mock_score(double overlap, std::uint64_t h) {
  const double noise = static_cast<double>(h % 1000) / 1000.0;
  const double q = 0.45 * noise + 0.55 * std::min(1.0, 2.0 * overlap);
  return 1 + static_cast<int>(std::lround(4.0 * q));
}

}  // namespace

std::string MockChatClient::complete(const JudgeRequest& request) {
  if (request.messages.empty()) throw backend_error("mock chat: empty request");
  const std::string& prompt = request.messages.front().content;
  const std::uint64_t h = fnv(prompt);
  const bool first_attempt = request.messages.size() == 1;
  if (first_attempt && h % 11 == 0) return "I'm sorry, but I can't provide a rating for this conversation.";

  const auto lines = split_lines(prompt);
  if (prompt.starts_with("Given the Context")) {
    // Response is the last line, the last context line sits two lines above it.
    const std::string response = strip_speaker(lines.back());
    std::string previous;
    for (std::size_t i = lines.size(); i-- > 0;)
      if (lines[i] == "Response:" && i >= 2) {
        previous = strip_speaker(lines[i - 2]);
        break;
      }
    const int s = mock_score(token_coverage(response, previous, "zh"), h);
    if (!first_attempt) return std::to_string(s);
    return (h % 5 == 1) ? "I would rate it " + std::to_string(s) + " out of 5." : std::to_string(s);
  }

  std::vector<std::string> turns;
  for (std::size_t i = 2; i < lines.size(); ++i)
    if (!lines[i].empty()) turns.push_back(strip_speaker(lines[i]));
  std::vector<int> per_turn;
  for (std::size_t i = 1; i < turns.size(); ++i)
    per_turn.push_back(mock_score(token_coverage(turns[i], turns[i - 1], "zh"), fnv(prompt + std::to_string(i))));
  if (per_turn.empty()) per_turn.push_back(mock_score(0.0, h));
  if (first_attempt && h % 3 == 0 && per_turn.size() > 1) {
    std::string out;
    for (std::size_t i = 0; i < per_turn.size(); ++i)
      out += "Turn " + std::to_string(i + 2) + ": " + std::to_string(per_turn[i]) + "\n";
    return out;
  }
  double sum = 0.0;
  for (int v : per_turn) sum += v;
  return std::to_string(static_cast<int>(std::lround(sum / static_cast<double>(per_turn.size()))));
}

json to_json(const TranscriptEntry& e) {
  return {{"key", e.key}, {"attempt", e.attempt}, {"request", e.request}, {"reply", e.reply}};
}

TranscriptEntry transcript_entry_from_json(const json& j) {
  try {
    return {j.at("key").get<std::string>(), j.at("attempt").get<int>(), j.at("request"),
            j.at("reply").get<std::string>()};
  } catch (const json::exception& e) {
    throw data_error(std::string("transcript entry: ") + e.what());
  }
}

std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open transcript '" + path.string() + "'");
  std::vector<TranscriptEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(transcript_entry_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw data_error(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ReplayChatClient::ReplayChatClient(const std::vector<TranscriptEntry>& transcript) {
  for (const auto& e : transcript) replies_[e.request.at("messages").dump()] = e.reply;
}

std::string ReplayChatClient::complete(const JudgeRequest& request) {
  const std::string key = request_body(request).at("messages").dump();
  auto it = replies_.find(key);
  if (it == replies_.end()) throw backend_error("replay: request not present in transcript");
  return it->second;
}

// ---------------------------------------------------------------------------
// Judging

double normalize_judge_score(double value) { return (value - 1.0) / 4.0; }

JudgeResult judge(const std::string& prompt, Level level, ChatClient& client, const JudgeSettings& settings,
                  std::vector<TranscriptEntry>* log, std::string_view log_key) {
  JudgeRequest request;
  request.model_name = settings.model_name;
  request.temperature = 0.0;
  request.max_attempts = std::max(1, settings.max_attempts);
  request.messages.push_back({"user", prompt});
  JudgeResult result;
  for (int attempt = 1; attempt <= request.max_attempts; ++attempt) {
    const std::string reply = client.complete(request);
    ++result.requests;
    if (log) log->push_back({std::string(log_key), attempt, request_body(request), reply});
    if (auto parsed = parse_score(reply, level)) {
      if (attempt > 1) parsed->method = ParseMethod::reprompted;
      result.parsed = *parsed;
      result.normalized = normalize_judge_score(parsed->value);
      return result;
    }
    request.messages.push_back({"assistant", reply});
    request.messages.push_back({"user", std::string(kRepromptInstruction)});
  }
  throw backend_error("judge failure: no score after " + std::to_string(request.max_attempts) + " attempts" +
                      (log_key.empty() ? std::string() : " for '" + std::string(log_key) + "'"));
}

double stability_mad(const std::vector<std::vector<double>>& runs) {
  if (runs.size() < 2) throw data_error("stability_mad: need at least 2 runs");
  const std::size_t n = runs.front().size();
  for (const auto& r : runs)
    if (r.size() != n) throw data_error("stability_mad: ragged run matrix");
  if (n == 0) throw data_error("stability_mad: no instances");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& r : runs) mean += r[i];
    mean /= static_cast<double>(runs.size());
    double dev = 0.0;
    for (const auto& r : runs) dev += std::abs(r[i] - mean);
    total += dev / static_cast<double>(runs.size());
  }
  return total / static_cast<double>(n);
}

}  // namespace dialeval
