#include <doctest.h>

#include "dialeval/error.hpp"
#include "dialeval/llmjudge.hpp"
#include "oracles.hpp"
#include "parser_fixtures.hpp"

using namespace dialeval;

namespace {

class ScriptedClient final : public ChatClient {
 public:
  explicit ScriptedClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const JudgeRequest& request) override {
    requests.push_back(request);
    return replies_[std::min(requests.size() - 1, replies_.size() - 1)];
  }
  std::vector<JudgeRequest> requests;

 private:
  std::vector<std::string> replies_;
};

EvalInstance instance(bool with_context = true) {
  EvalInstance inst;
  inst.instance_id = "d#1";
  inst.language = "en";
  if (with_context) inst.context = {{"A", "Hi, how are you?", 0}};
  inst.response = {"B", "Great, thanks!", 1};
  return inst;
}

}  // namespace

TEST_CASE("turn prompt") {
  const auto p = build_turn_prompt(instance(), "appropriateness");
  CHECK(p.starts_with("Given the Context, evaluate from 1-5 the Response in terms of appropriateness. "
                      "Provide a single score and nothing else."));
  CHECK(p.find("Context:\nA: Hi, how are you?") != std::string::npos);
  CHECK(p.ends_with("Response:\nB: Great, thanks!"));
}

TEST_CASE("turn prompt with empty context") {
  const auto p = build_turn_prompt(instance(false), "relevance");
  CHECK(p.find("Context:") != std::string::npos);
  CHECK(p.find("Response:\nB: Great, thanks!") != std::string::npos);
}

TEST_CASE("dialogue prompt") {
  Dialogue d;
  d.dialogue_id = "d";
  d.turns = {{"A", "Hello", 0}, {"B", "Hi", 1}};
  const auto p = build_dialogue_prompt(d, "coherence");
  CHECK(p.starts_with("Evaluate the following dialogue from 1-5 in terms of coherence. "
                      "Provide a single score and nothing else."));
  CHECK(p.ends_with("A: Hello\nB: Hi"));
}

TEST_CASE("reply parser fixtures") {
  REQUIRE(parser_fixtures().size() >= 20);
  for (const auto& f : parser_fixtures()) {
    CAPTURE(f.reply);
    const auto got = parse_score(f.reply, f.level);
    REQUIRE(got.has_value() == f.value.has_value());
    if (!got) continue;
    CHECK(got->value == doctest::Approx(*f.value));
    CHECK(got->method == f.method);
    CHECK(got->value >= 1.0);
    CHECK(got->value <= 5.0);
  }
}

TEST_CASE("extract_scores skips ranges, decimals and labels") {
  CHECK(extract_scores("1-5 scale, I say 4") == std::vector<int>{4});
  CHECK(extract_scores("3.5 or 2") == std::vector<int>{2});
  CHECK(extract_scores("45 then 3") == std::vector<int>{3});
  CHECK(extract_scores("Turn 2: 5") == std::vector<int>{5});
}

TEST_CASE("judge normalization") {
  CHECK(normalize_judge_score(1) == 0.0);
  CHECK(normalize_judge_score(3) == 0.5);
  CHECK(normalize_judge_score(5) == 1.0);
  ScriptedClient five({"5"}), one({"1"});
  CHECK(judge("p", Level::turn, five, {}).normalized == 1.0);
  CHECK(judge("p", Level::turn, one, {}).normalized == 0.0);
}

TEST_CASE("judge re-prompts") {
  ScriptedClient client({"I cannot rate this.", "3"});
  std::vector<TranscriptEntry> log;
  const auto r = judge("prompt text", Level::turn, client, {}, &log, "k");
  CHECK(r.normalized == 0.5);
  CHECK(r.parsed.method == ParseMethod::reprompted);
  CHECK(r.requests == 2);
  REQUIRE(client.requests.size() == 2);
  const auto& second = client.requests[1].messages;
  REQUIRE(second.size() == 3);
  CHECK(second[1].role == "assistant");
  CHECK(second[1].content == "I cannot rate this.");
  CHECK(second[2].content.find(kRepromptInstruction) != std::string::npos);
  CHECK(client.requests[0].temperature == 0.0);
  REQUIRE(log.size() == 2);
  CHECK(log[1].attempt == 2);
}

TEST_CASE("judge gives up after max_attempts") {
  ScriptedClient client({"no idea"});
  JudgeSettings s;
  s.max_attempts = 3;
  try {
    judge("p", Level::turn, client, s);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::backend);
  }
  CHECK(client.requests.size() == 3);
}

TEST_CASE("request body") {
  JudgeRequest r{{{"user", "hi"}}, 0.0, "m", 3};
  const auto body = request_body(r);
  CHECK(body.at("model") == "m");
  CHECK(body.at("temperature") == 0.0);
  CHECK(body.at("messages").at(0).at("role") == "user");
}

TEST_CASE("mock and replay clients agree") {
  MockChatClient mock;
  std::vector<TranscriptEntry> log;
  std::vector<double> scores;
  for (int i = 0; i < 40; ++i) {
    EvalInstance inst = instance();
    inst.response.text = "reply number " + std::to_string(i);
    scores.push_back(judge(build_turn_prompt(inst, "relevance"), Level::turn, mock, {}, &log, std::to_string(i)).normalized);
  }
  ReplayChatClient replay(log);
  for (int i = 0; i < 40; ++i) {
    EvalInstance inst = instance();
    inst.response.text = "reply number " + std::to_string(i);
    CHECK(judge(build_turn_prompt(inst, "relevance"), Level::turn, replay, {}).normalized == scores[i]);
  }
  JudgeRequest unknown{{{"user", "never recorded"}}, 0.0, "m", 3};
  CHECK_THROWS_AS(replay.complete(unknown), Error);
  for (const auto& e : log) CHECK(transcript_entry_from_json(to_json(e)).reply == e.reply);
}

TEST_CASE("stability_mad") {
  CHECK(stability_mad({{0.5}, {0.5}, {0.5}}) == 0.0);
  CHECK(stability_mad({{0.0}, {1.0}}) == 0.5);
  CHECK(stability_mad({{0.5, 0.5}, {0.55, 0.5}}) == doctest::Approx(0.0125));
  const std::vector<std::vector<double>> m = {{0.25, 1.0, 0.5}, {0.5, 0.75, 0.5}, {0.25, 1.0, 0.0}};
  CHECK(stability_mad(m) == doctest::Approx(oracle::stability_mad(m)));
  CHECK(stability_mad({m[2], m[0], m[1]}) == doctest::Approx(stability_mad(m)));
  CHECK_THROWS_AS(stability_mad({{0.1, 0.2}, {0.3}}), Error);
  CHECK_THROWS_AS(stability_mad({{0.1}}), Error);
}
