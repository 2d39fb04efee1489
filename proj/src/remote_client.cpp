#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "hsp/remote.hpp"

namespace hsp::remote {

std::string api_key_from_env() {
  const char* key = std::getenv(kApiKeyEnv);
  return key ? key : "";
}

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

/// Releases an in-flight slot on scope exit.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

RemoteClient::RemoteClient(RemoteConfig cfg, Logger log) : cfg_(std::move(cfg)), log_(std::move(log)) {
  if (cfg_.endpoint.empty()) throw std::invalid_argument("remote oracle: no endpoint configured");
  if (cfg_.api_key.empty()) {
    throw std::invalid_argument(std::string("remote oracle: API key missing (set ") + kApiKeyEnv + ")");
  }
  if (cfg_.attempts < 1) throw std::invalid_argument("remote oracle: attempts must be >= 1");
  std::tie(origin_, path_) = split_url(cfg_.endpoint);
  slots_ = std::make_unique<std::counting_semaphore<>>(std::max(1, cfg_.max_in_flight));
}

Json RemoteClient::request_body(const std::string& system, const std::string& user) const {
  Json body;
  body["model"] = cfg_.model;
  body["messages"] = Json::array({
      {{"role", "system"}, {"content", system}},
      {{"role", "user"}, {"content", user}},
  });
  body["temperature"] = cfg_.temperature;
  body["max_tokens"] = cfg_.max_tokens;
  return body;
}

std::string RemoteClient::complete(const std::string& system, const std::string& user) {
  const Json body = request_body(system, user);
  const std::string payload = body.dump();
  const httplib::Headers headers{{"Authorization", "Bearer " + cfg_.api_key}};
  std::string last_error;

  for (int attempt = 1; attempt <= cfg_.attempts; ++attempt) {
    if (attempt > 1) {
      const double wait = cfg_.backoff_seconds * static_cast<double>(1 << (attempt - 2));
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    if (log_) log_({{"event", "request"}, {"attempt", attempt}, {"endpoint", cfg_.endpoint}, {"body", body}});

    httplib::Result res;
    {
      SlotGuard slot(*slots_);
      httplib::Client client(origin_);
      const auto timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
      res = client.Post(path_, headers, payload, "application/json");
    }

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      if (log_) log_({{"event", "error"}, {"attempt", attempt}, {"error", last_error}});
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      if (log_) log_({{"event", "error"}, {"attempt", attempt}, {"status", res->status}, {"body", res->body}});
      continue;
    }
    if (log_) log_({{"event", "response"}, {"attempt", attempt}, {"status", res->status}, {"body", res->body}});

    try {
      const Json reply = Json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw ResponseParseError(std::string("malformed chat completion: ") + e.what(), res->body);
    }
  }
  throw oracles::OracleUnavailable("remote oracle unavailable after " + std::to_string(cfg_.attempts) +
                                   " attempts: " + last_error);
}

}  // namespace hsp::remote
