#pragma once

#include <functional>
#include <memory>
#include <semaphore>
#include <string>

#include "hsp/oracles.hpp"
#include "hsp/retrieval.hpp"
#include "hsp/serialize.hpp"

namespace hsp::remote {

struct RemoteConfig {
  /// Full chat-completions URL, e.g. "https://api.example.com/v1/chat/completions".
  std::string endpoint;
  std::string model = "gpt-4";
  int max_tokens = 512;
  double temperature = 0.0;
  int attempts = 3;
  /// Waits between attempts are base, 2*base, 4*base...
  double backoff_seconds = 1.0;
  int max_in_flight = 4;
  double timeout_seconds = 60.0;
  std::string api_key;
};

/// Name of the environment variable holding the API key.
inline constexpr const char* kApiKeyEnv = "HINDSIGHT_API_KEY";
std::string api_key_from_env();

/// 2xx response whose body is not a chat completion.
class ResponseParseError : public ParseError {
 public:
  ResponseParseError(const std::string& message, std::string raw) : ParseError(message), raw_(std::move(raw)) {}
  const std::string& raw_body() const { return raw_; }

 private:
  std::string raw_;
};

/// Receives one JSON event per request, response or failure. The API key
/// never appears in events.
using Logger = std::function<void(const Json&)>;

class RemoteClient {
 public:
  explicit RemoteClient(RemoteConfig cfg, Logger log = {});

  /// One chat completion, retried on transport errors and non-2xx statuses.
  /// Throws OracleUnavailable once attempts run out.
  std::string complete(const std::string& system, const std::string& user);

  Json request_body(const std::string& system, const std::string& user) const;
  const RemoteConfig& config() const { return cfg_; }

 private:
  RemoteConfig cfg_;
  Logger log_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

/// Splits a built prompt into the system part (the role description) and the
/// user part (everything after it).
std::pair<std::string, std::string> split_prompt(const std::string& prompt, const std::string& base_info);

/// Last non-empty line, trimmed.
std::string final_line(std::string_view text);

/// "optimal"/"acceptable"/"bad" -> 2/1/0, else a leading number. Empty when
/// neither is found.
std::optional<double> parse_verdict(std::string_view line);

/// Reads "key: value" lines or "key: value; key: value" pairs and repairs
/// each field to the nearest legal value; the result always validates.
world::PddlArgs parse_adapter_answer(std::string_view text, const std::vector<world::ObjectClass>& visible);

/// Where in-context samples come from. A missing pool means zero-shot prompts.
struct SampleSource {
  const retrieval::SamplePool* pool = nullptr;
  std::size_t k = 0;
  std::vector<std::string> exclude_sources;
};

class RemoteActor : public oracles::ActorOracle {
 public:
  RemoteActor(RemoteClient& client, prompts::Role role, SampleSource samples, Logger log = {});
  std::vector<world::SubGoal> propose(const oracles::OracleContext& ctx, int m) override;
  std::string name() const override;

 private:
  RemoteClient& client_;
  prompts::Role role_;
  SampleSource samples_;
  Logger log_;
};

class RemoteCritic : public oracles::CriticOracle {
 public:
  RemoteCritic(RemoteClient& client, SampleSource samples, Logger log = {});
  double score(const oracles::OracleContext& ctx, const oracles::RolloutCandidate& candidate) override;

 private:
  RemoteClient& client_;
  SampleSource samples_;
  Logger log_;
};

class RemoteAdapter : public oracles::AdapterOracle {
 public:
  RemoteAdapter(RemoteClient& client, SampleSource samples, Logger log = {});
  world::PddlArgs predict(const oracles::AdapterQuery& q) override;

 private:
  RemoteClient& client_;
  SampleSource samples_;
  Logger log_;
};

/// The model writes the summary; the belief is advanced with the transition
/// table so later nodes still have a state to hand to other oracles.
class RemoteGenerator : public oracles::Generator {
 public:
  explicit RemoteGenerator(RemoteClient& client) : client_(client) {}
  oracles::PredictedState next_state(const oracles::OracleContext& ctx, const oracles::PredictedState& current,
                                     const world::SubGoal& g) override;

 private:
  RemoteClient& client_;
};

}  // namespace hsp::remote
