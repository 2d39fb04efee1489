#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hsp/serialize.hpp"

namespace httplib {
class Server;
}

namespace hsp::remote {

/// One scripted reply: a chat completion carrying `content`, an error status,
/// or a raw body sent as-is.
struct MockReply {
  int status = 200;
  std::string content;
  std::optional<std::string> raw_body;
  int delay_ms = 0;
};

/// Replies for requests whose system message contains `match` (empty matches
/// everything). Replies are served in order; the last one repeats when
/// `repeat_last` is set, otherwise an exhausted route answers 503.
struct MockRoute {
  std::string match;
  std::vector<MockReply> replies;
  bool repeat_last = true;
};

/// {"routes": [{"match": "...", "repeat_last": true, "replies": ["text",
/// {"status": 500}, {"raw": "not json"},
/// {"content": "slow", "delay_ms": 50}]}]}
std::vector<MockRoute> routes_from_json(const Json& j);

struct RecordedRequest {
  Json body;
  std::string authorization;
  std::string route;  // match string of the route that answered, or "" if none
};

/// Local OpenAI-compatible endpoint for tests and offline demos. Serves
/// POST <any path> on 127.0.0.1 from a background thread.
class MockServer {
 public:
  explicit MockServer(std::vector<MockRoute> routes, int port = 0);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const { return port_; }
  std::string endpoint() const;
  std::vector<RecordedRequest> requests() const;
  /// Highest number of requests handled at the same time so far.
  int peak_concurrency() const;
  /// Blocks until stop() is called from another thread (or a signal).
  void wait();
  void stop();

 private:
  struct RouteState {
    MockRoute route;
    std::size_t next = 0;
  };

  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::vector<RouteState> routes_;
  std::vector<RecordedRequest> requests_;
  int active_ = 0;
  int peak_ = 0;
};

}  // namespace hsp::remote
