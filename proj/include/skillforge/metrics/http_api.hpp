#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "skillforge/metrics/promql.hpp"

namespace skillforge::metrics {

// The Prometheus-shaped read API:
//   /api/v1/query?query=<expr>        instant query at `now`
//   /api/v1/label/<label>/values      sorted distinct label values
struct HttpReply {
  int status = 200;
  nlohmann::json body;

  bool ok() const { return status == 200; }
};

HttpReply http_query(std::string_view path_and_query, const Store& store, double now);

nlohmann::json to_json(const QueryResult& result);

// Decodes %XX escapes once. Returns nullopt on a malformed escape.
std::optional<std::string> percent_decode(std::string_view s);
// Escapes everything outside the RFC 3986 unreserved set.
std::string percent_encode(std::string_view s);

}  // namespace skillforge::metrics
