#include "dialeval/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>
#include <tuple>

#include "dialeval/error.hpp"
#include "dialeval/sampler.hpp"

namespace dialeval {

using nlohmann::json;

json to_json(const ScoreRecord& r) {
  json j = {{"dataset", r.dataset},
            {"level", std::string(to_string(r.level))},
            {"instance_id", r.instance_id},
            {"submetric", r.submetric.key()},
            {"raw", r.raw}};
  j["normalized"] = r.normalized ? json(*r.normalized) : json(nullptr);
  return j;
}

ScoreRecord score_record_from_json(const json& j) {
  ScoreRecord r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    r.level = parse_level(j.at("level").get<std::string>());
    r.instance_id = j.at("instance_id").get<std::string>();
    r.submetric = SubmetricId::parse(j.at("submetric").get<std::string>());
    r.raw = j.at("raw").get<double>();
    if (auto it = j.find("normalized"); it != j.end() && !it->is_null()) r.normalized = it->get<double>();
  } catch (const json::exception& e) {
    throw data_error(std::string("score record: ") + e.what());
  }
  return r;
}

void sort_canonical(std::vector<ScoreRecord>& records) {
  std::sort(records.begin(), records.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    return std::tie(a.dataset, a.level, a.instance_id, a.submetric) <
           std::tie(b.dataset, b.level, b.instance_id, b.submetric);
  });
}

// ---------------------------------------------------------------------------
// Transports

HttpReply HttpScoreTransport::post(const BackendDescriptor& backend, const std::string& body) {
  return http_post_json(backend.endpoint, body, {}, backend.timeout);
}

namespace {

double hash01(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

double MockScoreTransport::scalar_score(const json& request) {
  const auto submetric = request.at("submetric").get<std::string>();
  const auto language = request.at("language").get<std::string>();
  const auto response = request.at("response").get<std::string>();
  const auto& context = request.at("context");
  double overlap = 0.0;
  if (!context.empty()) overlap = token_coverage(response, context.back().at("text").get<std::string>(), language);
  // Each submetric leans on the overlap signal to a different, fixed degree.
  const double lean = 0.3 + 0.5 * hash01("lean|" + submetric);
  const double noise = hash01(submetric + "|" + response);
  return (1.0 - lean) * noise + lean * overlap;
}

std::vector<double> MockScoreTransport::token_losses(const json& request) {
  const auto submetric = request.at("submetric").get<std::string>();
  const auto language = request.at("language").get<std::string>();
  const auto tokens = tokenize(request.at("response").get<std::string>(), language);
  std::vector<double> out;
  out.reserve(std::max<std::size_t>(tokens.size(), 1));
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out.push_back(4.0 * hash01(submetric + "|" + std::to_string(i) + "|" + tokens[i]));
  if (out.empty()) out.push_back(0.0);
  return out;
}

HttpReply MockScoreTransport::post(const BackendDescriptor& backend, const std::string& body) {
  const std::string& ep = backend.endpoint;
  if (ep == "mock://unavailable") throw TransportFailure("mock backend unavailable");
  if (ep.starts_with("mock://status/")) return {std::stoi(ep.substr(14)), "{}"};
  if (ep == "mock://garbage") return {200, "not json"};
  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error&) {
    return {400, R"({"error":"bad request"})"};
  }
  if (backend.mode == BackendMode::token_losses) return {200, json{{"token_losses", token_losses(req)}}.dump()};
  return {200, json{{"score", scalar_score(req)}}.dump()};
}

// ---------------------------------------------------------------------------
// Scoring

json score_request(const BackendDescriptor& backend, const EvalInstance& instance) {
  json ctx = json::array();
  for (const auto& t : instance.context) ctx.push_back({{"speaker", t.speaker}, {"text", t.text}});
  return {{"submetric", backend.submetric.key()},
          {"language", instance.language},
          {"context", std::move(ctx)},
          {"response", instance.response.text}};
}

double aggregate_mlm(std::span<const double> token_losses) {
  if (token_losses.empty()) throw data_error("aggregate_mlm: empty token loss list");
  double sum = 0.0;
  for (double x : token_losses) {
    if (!std::isfinite(x) || x < 0.0) throw data_error("aggregate_mlm: token losses must be finite and non-negative");
    sum += x;
  }
  return sum;
}

namespace {

double parse_reply(const BackendDescriptor& backend, const EvalInstance& instance, const std::string& body) {
  const std::string where = backend.submetric.key() + " / " + instance.instance_id;
  json reply;
  try {
    reply = json::parse(body);
  } catch (const json::parse_error&) {
    throw backend_error("protocol error (" + where + "): reply is not JSON");
  }
  try {
    if (backend.mode == BackendMode::token_losses) {
      const auto losses = reply.at("token_losses").get<std::vector<double>>();
      return aggregate_mlm(losses);
    }
    const double s = reply.at("score").get<double>();
    if (!std::isfinite(s)) throw backend_error("protocol error (" + where + "): non-finite score");
    return s;
  } catch (const json::exception& e) {
    throw backend_error("protocol error (" + where + "): " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::backend) throw;
    throw backend_error("protocol error (" + where + "): " + e.what());
  }
}

}  // namespace

double score_instance(const BackendDescriptor& backend, const EvalInstance& instance, ScoreTransport& transport) {
  const std::string body = score_request(backend, instance).dump();
  const int attempts = std::max(1, backend.max_retries);
  auto delay = backend.backoff;
  std::string last_failure;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    try {
      const HttpReply reply = transport.post(backend, body);
      if (reply.status == 200) return parse_reply(backend, instance, reply.body);
      if (reply.status >= 400 && reply.status < 500)
        throw backend_error("protocol error (" + backend.submetric.key() + " / " + instance.instance_id +
                            "): HTTP " + std::to_string(reply.status));
      last_failure = "HTTP " + std::to_string(reply.status);
    } catch (const TransportFailure& e) {
      last_failure = e.what();
    }
    if (attempt < attempts && delay.count() > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw backend_error("backend " + backend.submetric.key() + " unavailable for instance '" + instance.instance_id +
                      "' after " + std::to_string(attempts) + " attempts: " + last_failure);
}

// ---------------------------------------------------------------------------
// Normalization and ensembling

void normalize_scores(std::vector<ScoreRecord>& records) {
  using Key = std::tuple<std::string, Level, SubmetricId>;
  std::map<Key, std::pair<double, double>> range;
  for (const auto& r : records) {
    auto [it, inserted] = range.try_emplace(Key{r.dataset, r.level, r.submetric}, r.raw, r.raw);
    if (!inserted) {
      it->second.first = std::min(it->second.first, r.raw);
      it->second.second = std::max(it->second.second, r.raw);
    }
  }
  for (auto& r : records) {
    const auto [lo, hi] = range.at(Key{r.dataset, r.level, r.submetric});
    r.normalized = hi > lo ? (r.raw - lo) / (hi - lo) : 0.5;
  }
}

std::vector<ScoreRecord> model_ensemble(const std::vector<ScoreRecord>& records, Family family,
                                        const std::vector<std::string>& members) {
  if (members.empty()) throw usage_error("model_ensemble: empty membership for " + std::string(to_string(family)));
  const std::set<std::string> member_set(members.begin(), members.end());
  using Key = std::tuple<std::string, Level, std::string>;
  std::map<Key, std::map<std::string, double>> by_instance;
  for (const auto& r : records) {
    if (r.submetric.family != family || !member_set.contains(r.submetric.variant)) continue;
    if (!r.normalized) throw data_error("model_ensemble: record for '" + r.instance_id + "' is not normalized");
    by_instance[Key{r.dataset, r.level, r.instance_id}][r.submetric.variant] = *r.normalized;
  }
  std::vector<ScoreRecord> out;
  std::vector<std::string> incomplete;
  for (const auto& [key, scores] : by_instance) {
    if (scores.size() != member_set.size()) {
      incomplete.push_back(std::get<2>(key));
      continue;
    }
    double sum = 0.0;
    for (const auto& m : member_set) sum += scores.at(m);
    const double mean = sum / static_cast<double>(member_set.size());
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                   SubmetricId{family, std::string(kEnsembleVariant)}, mean, mean});
  }
  if (!incomplete.empty()) {
    std::string list;
    for (std::size_t i = 0; i < incomplete.size() && i < 20; ++i) list += (i ? ", " : "") + incomplete[i];
    if (incomplete.size() > 20) list += ", ...";
    throw data_error("incomplete " + std::string(to_string(family)) + " ensemble for instances: " + list);
  }
  return out;
}

double dialogue_score_from_turns(std::span<const double> turn_scores) {
  if (turn_scores.empty()) throw data_error("dialogue_score_from_turns: no turn scores");
  return std::accumulate(turn_scores.begin(), turn_scores.end(), 0.0) / static_cast<double>(turn_scores.size());
}

std::map<Family, std::vector<std::string>> default_memberships() {
  return {{Family::VSP, {"EN", "PA"}},
          {Family::NSP, {"PA", "ML75", "Siamese"}},
          {Family::MLM, {"XLMR"}},
          {Family::ENG, {"ML10", "ML20", "ML50"}}};
}

}  // namespace dialeval
