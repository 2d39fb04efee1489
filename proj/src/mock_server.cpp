#include "hsp/mock_server.hpp"

#include <httplib.h>

namespace hsp::remote {

std::vector<MockRoute> routes_from_json(const Json& j) {
  std::vector<MockRoute> out;
  try {
    for (const auto& r : j.at("routes")) {
      MockRoute route;
      route.match = r.value("match", "");
      route.repeat_last = r.value("repeat_last", true);
      for (const auto& reply : r.at("replies")) {
        MockReply m;
        if (reply.is_string()) {
          m.content = reply.get<std::string>();
        } else {
          m.status = reply.value("status", 200);
          m.content = reply.value("content", "");
          if (reply.contains("raw")) m.raw_body = reply.at("raw").get<std::string>();
          m.delay_ms = reply.value("delay_ms", 0);
        }
        route.replies.push_back(std::move(m));
      }
      out.push_back(std::move(route));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("mock script: ") + e.what());
  }
  return out;
}

namespace {

std::string completion_body(const std::string& content) {
  Json body;
  body["id"] = "mock";
  body["object"] = "chat.completion";
  body["choices"] = Json::array(
      {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}, {"finish_reason", "stop"}}});
  return body.dump();
}

}  // namespace

MockServer::MockServer(std::vector<MockRoute> routes, int port) : server_(std::make_unique<httplib::Server>()) {
  for (auto& r : routes) routes_.push_back({std::move(r), 0});

  server_->Post(R"(.*)", [this](const httplib::Request& req, httplib::Response& res) {
    RecordedRequest rec;
    rec.authorization = req.get_header_value("Authorization");
    std::string system;
    try {
      rec.body = Json::parse(req.body);
      for (const auto& m : rec.body.at("messages")) {
        if (m.at("role") == "system") system = m.at("content").get<std::string>();
      }
    } catch (const Json::exception&) {
      res.status = 400;
      res.set_content(R"({"error":"bad request"})", "application/json");
      return;
    }

    std::unique_lock lock(mu_);
    peak_ = std::max(peak_, ++active_);
    RouteState* hit = nullptr;
    for (auto& r : routes_) {
      if (system.find(r.route.match) != std::string::npos) {
        hit = &r;
        break;
      }
    }
    if (hit) rec.route = hit->route.match;
    requests_.push_back(std::move(rec));

    const MockReply* reply = nullptr;
    if (hit && !hit->route.replies.empty()) {
      if (hit->next < hit->route.replies.size()) {
        reply = &hit->route.replies[hit->next++];
      } else if (hit->route.repeat_last) {
        reply = &hit->route.replies.back();
      }
    }
    if (!reply) {
      --active_;
      res.status = 503;
      res.set_content(R"({"error":"no scripted reply"})", "application/json");
      return;
    }
    const MockReply chosen = *reply;
    if (chosen.delay_ms > 0) {
      lock.unlock();
      std::this_thread::sleep_for(std::chrono::milliseconds(chosen.delay_ms));
      lock.lock();
    }
    --active_;
    reply = &chosen;
    res.status = reply->status;
    if (reply->raw_body) {
      res.set_content(*reply->raw_body, "application/json");
    } else if (reply->status >= 200 && reply->status < 300) {
      res.set_content(completion_body(reply->content), "application/json");
    } else {
      res.set_content(R"({"error":"scripted failure"})", "application/json");
    }
  });

  if (port == 0) {
    port_ = server_->bind_to_any_port("127.0.0.1");
  } else if (server_->bind_to_port("127.0.0.1", port)) {
    port_ = port;
  } else {
    port_ = -1;
  }
  if (port_ < 0) throw std::runtime_error("mock server: could not bind a port");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockServer::~MockServer() { stop(); }

void MockServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void MockServer::wait() {
  while (server_->is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

std::string MockServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

int MockServer::peak_concurrency() const {
  std::lock_guard lock(mu_);
  return peak_;
}

std::vector<RecordedRequest> MockServer::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

}  // namespace hsp::remote
