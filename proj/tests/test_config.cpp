#include <doctest.h>

#include "dialeval/config.hpp"
#include "dialeval/error.hpp"
#include "dialeval/toml.hpp"

using namespace dialeval;
using nlohmann::json;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::data;
}

}  // namespace

TEST_CASE("toml scalars, tables and arrays") {
  const auto doc = toml::parse(R"(
# comment
seed = 7
ratio = 0.25          # trailing comment
name = "a \"quoted\" # not a comment"
lit = 'C:\path'
flag = true
neg = -3
list = [1, 2,
  3,]
[outer.inner]
"spaced key" = "x"
[[items]]
k = 1
[[items]]
k = 2
point = { x = 1, y = "two" }
)");
  CHECK(doc["seed"] == 7);
  CHECK(doc["ratio"] == 0.25);
  CHECK(doc["name"] == "a \"quoted\" # not a comment");
  CHECK(doc["lit"] == "C:\\path");
  CHECK(doc["flag"] == true);
  CHECK(doc["neg"] == -3);
  CHECK(doc["list"] == json::array({1, 2, 3}));
  CHECK(doc["outer"]["inner"]["spaced key"] == "x");
  REQUIRE(doc["items"].size() == 2);
  CHECK(doc["items"][1]["k"] == 2);
  CHECK(doc["items"][1]["point"]["y"] == "two");
}

TEST_CASE("toml errors carry line numbers") {
  try {
    toml::parse("a = 1\nb = \n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::usage);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  CHECK_THROWS_AS(toml::parse("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(toml::parse("a = \"open\n"), Error);
  CHECK_THROWS_AS(toml::parse("[table\n"), Error);
}

TEST_CASE("toy config loads") {
  const auto c = load_config(DIALEVAL_SOURCE_DIR "/config/toy.toml");
  CHECK(c.seed == 42);
  CHECK(c.datasets.size() == 3);
  CHECK(c.backends.size() == 9);
  CHECK(c.llm.turn_aspects.size() == 4);
  CHECK(c.mapping.at("coherence") == "relevance");
  CHECK(c.augment.per_language);
  CHECK(c.crs.guard == 0.1);
  CHECK(c.dataset("toy_zh").language == "zh");
  CHECK(c.select({}).size() == 3);
  CHECK(c.select({"toy_es"}).front().name == "toy_es");
  CHECK(kind_of([&] { c.dataset("missing"); }) == ErrorKind::usage);
}

TEST_CASE("config validation") {
  const json base = {
      {"annotations", {{"aspects", {"relevance"}}}},
      {"datasets", json::array({{{"name", "d"}, {"path", "d.jsonl"}}})},
  };
  CHECK_NOTHROW(config_from_json(base, "."));

  auto with = [&](const json& patch) {
    json doc = base;
    doc.merge_patch(patch);
    return [doc] { config_from_json(doc, "."); };
  };
  CHECK(kind_of(with({{"backends", json::array({{{"submetric", "LLM-A"}, {"endpoint", "mock://x"}}})}})) ==
        ErrorKind::usage);
  CHECK(kind_of(with({{"backends", json::array({{{"submetric", "VSP-EN"}, {"endpoint", "mock://x"}},
                                                {{"submetric", "VSP-EN"}, {"endpoint", "mock://y"}}})}})) ==
        ErrorKind::usage);
  CHECK(kind_of(with({{"backends", json::array({{{"submetric", "MLM-X"}, {"endpoint", "mock://x"},
                                                 {"mode", "scalar_score"}}})}})) == ErrorKind::usage);
  CHECK(kind_of(with({{"ensemble", {{"members", {{"VSP", {"EN"}}}}}}})) == ErrorKind::usage);
  CHECK(kind_of(with({{"llm", {{"turn_aspects", json::array({{{"tag", "A-1"}, {"aspect", "relevance"}}})}}}})) ==
        ErrorKind::usage);
  CHECK(kind_of(with({{"aspect_mapping", {{"relevance", "fluency"}}}})) == ErrorKind::usage);
  CHECK(kind_of(with({{"evaluation", {{"turn_aspects", {"fluency"}}}}})) == ErrorKind::usage);
  CHECK(kind_of(with({{"weights", {{"datasets", {"other"}}}}})) == ErrorKind::usage);
  CHECK(kind_of(with({{"weights", {{"correlation", "kendall"}}}})) == ErrorKind::usage);
  CHECK(kind_of(with({{"augment", {{"selection_scope", "global"}}}})) == ErrorKind::usage);
  CHECK(kind_of(with({{"annotations", {{"scale", {5, 1}}}}})) == ErrorKind::usage);
  CHECK(kind_of(with({{"seed", "forty-two"}})) == ErrorKind::usage);
  CHECK(kind_of(with({{"context_budget", 0}})) == ErrorKind::usage);
}
