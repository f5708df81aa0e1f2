#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace skillforge::testkit {

// Chat-completions look-alike on 127.0.0.1 that answers every request with `reply(request)`
// and reports the given usage.
class StubEndpoint {
 public:
  using Reply = std::function<std::string(const nlohmann::json&)>;

  StubEndpoint(Reply reply, std::int64_t prompt_tokens, std::int64_t completion_tokens)
      : reply_(std::move(reply)), prompt_tokens_(prompt_tokens), completion_tokens_(completion_tokens) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      auto body = nlohmann::json::parse(req.body);
      last_request_ = body;
      nlohmann::json out{
          {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", reply_(body)}}}}}},
          {"usage", {{"prompt_tokens", prompt_tokens_}, {"completion_tokens", completion_tokens_}}}};
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int calls() const { return calls_; }
  nlohmann::json last_request() const { return last_request_; }

 private:
  Reply reply_;
  std::int64_t prompt_tokens_;
  std::int64_t completion_tokens_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
  nlohmann::json last_request_;
};

}  // namespace skillforge::testkit
