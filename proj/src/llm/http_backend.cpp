#include <httplib.h>

#include "skillforge/llm/gateway.hpp"

namespace skillforge::llm {

HttpBackend::HttpBackend(std::string endpoint, std::string api_key, int timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {}

Completion HttpBackend::complete(const ModelRoute& route, const std::vector<Message>& messages) {
  auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) throw BackendError("endpoint must be an absolute URL: " + endpoint_);
  auto path_start = endpoint_.find('/', scheme_end + 3);
  const std::string origin = endpoint_.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

  nlohmann::json body{{"model", route.model_id}, {"messages", nlohmann::json::array()}};
  for (const auto& m : messages) body["messages"].push_back({{"role", m.speaker}, {"content", m.text}});
  if (route.low_latency) {
    body["max_tokens"] = route.max_tokens;
    body["temperature"] = route.temperature;
  } else {
    body["max_completion_tokens"] = route.max_tokens;
  }

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw BackendError("request to " + endpoint_ + " failed: " + httplib::to_string(res.error()));
  if (res->status / 100 != 2) {
    throw BackendError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
  }
  try {
    auto doc = nlohmann::json::parse(res->body);
    Completion c;
    c.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    if (doc.contains("usage")) {
      c.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
      c.completion_tokens = doc["usage"].value("completion_tokens", std::int64_t{0});
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed completion response: ") + e.what());
  }
}

}  // namespace skillforge::llm
