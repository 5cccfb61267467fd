#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialeval/corpus.hpp"
#include "dialeval/http.hpp"
#include "dialeval/submetric.hpp"

namespace dialeval {

/// One submetric's score for one instance (a turn instance or a whole dialogue).
struct ScoreRecord {
  std::string dataset;
  Level level = Level::turn;
  std::string instance_id;
  SubmetricId submetric;
  double raw = 0.0;
  std::optional<double> normalized;

  bool operator==(const ScoreRecord&) const = default;
};

nlohmann::json to_json(const ScoreRecord& r);
ScoreRecord score_record_from_json(const nlohmann::json& j);
/// Canonical order: (dataset, level, instance_id, submetric).
void sort_canonical(std::vector<ScoreRecord>& records);

enum class BackendMode { scalar_score, token_losses };

struct BackendDescriptor {
  SubmetricId submetric;
  std::string endpoint;
  BackendMode mode = BackendMode::scalar_score;
  std::chrono::milliseconds timeout{10000};
  int max_retries = 3;  // total attempts per request
  std::chrono::milliseconds backoff{100};  // doubled after each failed attempt
};

/// Wire transport for POST /v1/score. Throws TransportFailure when no reply.
class ScoreTransport {
 public:
  virtual ~ScoreTransport() = default;
  virtual HttpReply post(const BackendDescriptor& backend, const std::string& body) = 0;
};

class HttpScoreTransport final : public ScoreTransport {
 public:
  HttpReply post(const BackendDescriptor& backend, const std::string& body) override;
};

/// Deterministic offline backend. Scalar mode: a hash-seeded pseudo-score
/// blended with lexical overlap between the response and the last context
/// turn. Token-loss mode: one hash-seeded pseudo-loss per response token.
/// Endpoints "mock://unavailable", "mock://status/<code>" and "mock://garbage"
/// simulate failures.
class MockScoreTransport final : public ScoreTransport {
 public:
  HttpReply post(const BackendDescriptor& backend, const std::string& body) override;
  static double scalar_score(const nlohmann::json& request);
  static std::vector<double> token_losses(const nlohmann::json& request);
};

nlohmann::json score_request(const BackendDescriptor& backend, const EvalInstance& instance);

/// Sends one instance to a backend, retrying transport failures and non-4xx
/// statuses with exponential backoff. Token-loss replies are summed.
/// Throws Error(backend) naming the instance when attempts are exhausted or
/// the reply violates the protocol.
double score_instance(const BackendDescriptor& backend, const EvalInstance& instance, ScoreTransport& transport);

/// Sum of per-token MLM losses (higher = less fluent).
double aggregate_mlm(std::span<const double> token_losses);

/// Min-max normalization within each (dataset, level, submetric) group;
/// constant groups map to 0.5.
void normalize_scores(std::vector<ScoreRecord>& records);

/// Per-instance mean of the members' normalized scores, emitted with
/// variant "ensemble". Throws Error(data) listing instances that lack a member.
std::vector<ScoreRecord> model_ensemble(const std::vector<ScoreRecord>& records, Family family,
                                        const std::vector<std::string>& members);

double dialogue_score_from_turns(std::span<const double> turn_scores);

/// Default model-level ensemble memberships.
std::map<Family, std::vector<std::string>> default_memberships();

}  // namespace dialeval
