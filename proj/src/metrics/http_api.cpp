#include "skillforge/metrics/http_api.hpp"

#include <cctype>

#include "skillforge/core/text.hpp"

namespace skillforge::metrics {
namespace {

HttpReply error_reply(int status, std::string_view type, const std::string& message) {
  return {status, {{"status", "error"}, {"errorType", type}, {"error", message}}};
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

HttpReply instant_query(std::string_view query_string, const Store& store, double now) {
  std::optional<std::string_view> raw;
  size_t start = 0;
  while (start <= query_string.size()) {
    size_t end = query_string.find('&', start);
    if (end == std::string_view::npos) end = query_string.size();
    std::string_view param = query_string.substr(start, end - start);
    auto eq = param.find('=');
    if (param.substr(0, eq) == "query") {
      raw = eq == std::string_view::npos ? std::string_view{} : param.substr(eq + 1);
      break;
    }
    start = end + 1;
  }
  if (!raw || raw->empty()) {
    return error_reply(400, "bad_data", "invalid parameter \"query\": missing query expression");
  }
  auto bad = raw->find_first_of("{}[]");
  if (bad != std::string_view::npos) {
    return error_reply(400, "bad_data",
                       "invalid parameter \"query\": unescaped character '" +
                           std::string(1, (*raw)[bad]) + "' in URL at offset " +
                           std::to_string(bad));
  }
  auto decoded = percent_decode(*raw);
  if (!decoded) {
    return error_reply(400, "bad_data", "invalid parameter \"query\": invalid URL escape");
  }
  try {
    auto result = eval(*decoded, store, now);
    return {200, {{"status", "success"}, {"data", to_json(result)}}};
  } catch (const ParseError& e) {
    return error_reply(400, "bad_data", std::string("invalid parameter \"query\": ") + e.what());
  } catch (const Error& e) {
    return error_reply(422, "execution", e.what());
  }
}

}  // namespace

std::optional<std::string> percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out.push_back(s[i]);
      continue;
    }
    if (i + 2 >= s.size()) return std::nullopt;
    int hi = hex_value(s[i + 1]);
    int lo = hex_value(s[i + 2]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<char>(hi * 16 + lo));
    i += 2;
  }
  return out;
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (char c : s) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(c);
    } else {
      out.push_back('%');
      out.push_back(kHex[uc >> 4]);
      out.push_back(kHex[uc & 0xF]);
    }
  }
  return out;
}

nlohmann::json to_json(const QueryResult& result) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : result.entries) {
    nlohmann::json metric = nlohmann::json::object();
    for (const auto& [k, v] : e.labels) metric[k] = v;
    entries.push_back({{"metric", metric},
                       {"value", nlohmann::json::array({e.timestamp, text::format_double(e.value)})}});
  }
  return {{"resultType", result.result_type == ResultType::vector ? "vector" : "scalar"},
          {"result", entries}};
}

HttpReply http_query(std::string_view path_and_query, const Store& store, double now) {
  auto qmark = path_and_query.find('?');
  std::string_view path = path_and_query.substr(0, qmark);
  std::string_view query =
      qmark == std::string_view::npos ? std::string_view{} : path_and_query.substr(qmark + 1);

  if (path == "/api/v1/query") return instant_query(query, store, now);

  constexpr std::string_view kLabelPrefix = "/api/v1/label/";
  constexpr std::string_view kValuesSuffix = "/values";
  if (path.starts_with(kLabelPrefix) && path.ends_with(kValuesSuffix) &&
      path.size() > kLabelPrefix.size() + kValuesSuffix.size()) {
    auto name = path.substr(kLabelPrefix.size(),
                            path.size() - kLabelPrefix.size() - kValuesSuffix.size());
    auto decoded = percent_decode(name);
    if (!decoded || decoded->find('/') != std::string::npos) {
      return error_reply(400, "bad_data", "invalid label name");
    }
    return {200, {{"status", "success"}, {"data", store.label_values(*decoded)}}};
  }
  return error_reply(404, "not_found", "404 page not found: " + std::string(path));
}

}  // namespace skillforge::metrics
