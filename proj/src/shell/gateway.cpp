#include "skillforge/shell/gateway.hpp"

#include <algorithm>
#include <cctype>

#include "skillforge/core/error.hpp"
#include "skillforge/core/text.hpp"
#include "skillforge/metrics/http_api.hpp"
#include "skillforge/shell/kubectl.hpp"

namespace skillforge::shell {
namespace {

constexpr std::int64_t kToolMs = 30;
constexpr std::int64_t kCurlMs = 40;
constexpr std::int64_t kGrepMs = 2;
constexpr std::int64_t kRejectMs = 1;

ExecutionResult failure(std::string message, int code = 1, std::int64_t ms = kRejectMs) {
  ExecutionResult r;
  r.stderr_text = std::move(message);
  if (r.stderr_text.empty() || r.stderr_text.back() != '\n') r.stderr_text.push_back('\n');
  r.exit_code = code;
  r.duration_ms = ms;
  return r;
}

ExecutionResult success(std::string out, std::int64_t ms) {
  ExecutionResult r;
  r.stdout_text = std::move(out);
  if (!r.stdout_text.empty() && r.stdout_text.back() != '\n') r.stdout_text.push_back('\n');
  r.duration_ms = ms;
  return r;
}

ExecutionResult run_curl(const std::vector<std::string>& args, const sim::Environment& env) {
  std::optional<std::string> url;
  for (const auto& a : args) {
    if (a == "-s" || a == "-S" || a == "-sS" || a == "-Ss" || a == "--silent" || a == "-g" ||
        a == "--globoff" || a == "--show-error") {
      continue;
    }
    if (!a.empty() && a.front() == '-') {
      return failure("error: unknown command option \"" + a + "\" for \"curl\"");
    }
    if (url) return failure("error: unknown command: curl accepts a single URL, got \"" + a + "\"");
    url = a;
  }
  if (!url) return failure("curl: no URL specified!", 2);
  std::string_view rest = *url;
  if (rest.starts_with("http://")) {
    rest.remove_prefix(7);
  } else if (rest.starts_with("https://")) {
    rest.remove_prefix(8);
  } else {
    return failure("curl: (1) Protocol not supported in \"" + *url + "\"", 1, kCurlMs);
  }
  auto slash = rest.find('/');
  if (slash == std::string_view::npos || slash == 0) {
    return failure("curl: (22) The requested URL returned error: 404", 22, kCurlMs);
  }
  auto reply = metrics::http_query(rest.substr(slash), env.metrics(), static_cast<double>(env.now()));
  if (reply.ok()) return success(reply.body.dump(), kCurlMs);
  return failure(reply.body.value("error", "") + "\ncurl: (22) The requested URL returned error: " +
                     std::to_string(reply.status),
                 22, kCurlMs);
}

ExecutionResult run_grep(const std::vector<std::string>& args, const ExecutionResult& input) {
  bool ignore_case = false;
  bool invert = false;
  std::optional<std::string> pattern;
  for (const auto& a : args) {
    if (!pattern && (a == "-i" || a == "-F" || a == "-v" || a == "-iF" || a == "-Fi")) {
      ignore_case = ignore_case || a.find('i') != std::string::npos;
      invert = invert || a == "-v";
      continue;
    }
    if (!pattern && a.size() > 1 && a.front() == '-') {
      return failure("error: unknown command option \"" + a + "\" for \"grep\"");
    }
    if (pattern) return failure("error: unknown command: grep reads only from the pipe, got \"" + a + "\"");
    pattern = a;
  }
  if (!pattern) return failure("error: unknown command: grep requires a PATTERN", 2);
  std::string out;
  for (const auto& line : text::split_lines(input.stdout_text)) {
    bool hit = ignore_case ? text::contains_ci(line, *pattern) : line.find(*pattern) != std::string::npos;
    if (hit != invert) out += line + "\n";
  }
  ExecutionResult r = input;
  r.duration_ms += kGrepMs;
  if (out.empty()) {
    r.stdout_text.clear();
    r.stderr_text = "grep: no lines matched \"" + *pattern + "\"\n";
    r.exit_code = 1;
    return r;
  }
  r.stdout_text = out;
  return r;
}

ExecutionResult run_tool(const ToolCall& call, sim::Environment& env, const Context& ctx) {
  if (call.name == "report_result") {
    for (const auto& [k, v] : call.args) {
      if (k != "component" && k != "message" && k != "message_type") {
        return failure("error: report_result() got an unexpected keyword argument '" + k + "'");
      }
    }
    const std::string* component = call.arg("component");
    const std::string* message = call.arg("message");
    if (!component || !message) {
      return failure("error: report_result() requires 'component' and 'message'");
    }
    Report report{*component, *message, MessageType::response};
    if (const std::string* type = call.arg("message_type")) {
      auto parsed = parse_message_type(*type);
      if (!parsed) return failure("error: unknown message_type '" + *type + "'");
      report.type = *parsed;
    }
    try {
      report_result(report, ctx);
    } catch (const InvalidArgument& e) {
      return failure(std::string("error: ") + e.what());
    }
    return success("message delivered to manager", kToolMs);
  }
  if (call.name == "query_prometheus") {
    const std::string* promql = call.arg("promQL");
    if (!promql) return failure("error: query_prometheus() requires 'promQL'");
    for (const auto& [k, v] : call.args) {
      // duration/step are accepted and the query is answered as an instant query.
      if (k != "promQL" && k != "duration" && k != "step") {
        return failure("error: query_prometheus() got an unexpected keyword argument '" + k + "'");
      }
    }
    try {
      auto result = metrics::eval(*promql, env.metrics(), static_cast<double>(env.now()));
      nlohmann::json body{{"status", "success"}, {"data", metrics::to_json(result)}};
      return success(body.dump(), kToolMs);
    } catch (const metrics::ParseError& e) {
      nlohmann::json body{{"status", "error"},
                          {"errorType", "bad_data"},
                          {"error", std::string("invalid parameter \"query\": ") + e.what()}};
      return failure(body.dump(), 1, kToolMs);
    } catch (const Error& e) {
      nlohmann::json body{{"status", "error"}, {"errorType", "execution"}, {"error", e.what()}};
      return failure(body.dump(), 1, kToolMs);
    }
  }
  return failure("error: unknown command \"" + call.name + "\"");
}

bool looks_like_tool_call(std::string_view line) {
  size_t i = 0;
  while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) ++i;
  return i > 0 && i < line.size() && line[i] == '(';
}

}  // namespace

std::string_view to_string(MessageType type) {
  return type == MessageType::response ? "RESPONSE" : "REQUEST";
}

std::optional<MessageType> parse_message_type(std::string_view text) {
  if (text == "RESPONSE") return MessageType::response;
  if (text == "REQUEST") return MessageType::request;
  return std::nullopt;
}

const std::string* ToolCall::arg(std::string_view key) const {
  for (const auto& [k, v] : args) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::optional<ToolCall> parse_tool_call(std::string_view line) {
  line = text::trim(line);
  ToolCall call;
  size_t i = 0;
  while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) ++i;
  if (i == 0 || i >= line.size() || line[i] != '(') return std::nullopt;
  call.name = std::string(line.substr(0, i));
  ++i;
  auto skip_ws = [&] {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  };
  skip_ws();
  while (i < line.size() && line[i] != ')') {
    size_t key_start = i;
    while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) ++i;
    if (i == key_start) return std::nullopt;
    std::string key(line.substr(key_start, i - key_start));
    skip_ws();
    if (i >= line.size() || line[i] != '=') return std::nullopt;
    ++i;
    skip_ws();
    std::string value;
    if (i < line.size() && (line[i] == '\'' || line[i] == '"')) {
      char quote = line[i++];
      bool closed = false;
      while (i < line.size()) {
        char c = line[i++];
        if (c == quote) {
          closed = true;
          break;
        }
        if (c == '\\' && i < line.size()) {
          char e = line[i++];
          switch (e) {
            case 'n': value.push_back('\n'); break;
            case 't': value.push_back('\t'); break;
            case '\\': case '\'': case '"': value.push_back(e); break;
            default: value.push_back('\\'); value.push_back(e); break;
          }
          continue;
        }
        value.push_back(c);
      }
      if (!closed) return std::nullopt;
    } else {
      size_t v_start = i;
      while (i < line.size() && line[i] != ',' && line[i] != ')') ++i;
      value = std::string(text::trim(line.substr(v_start, i - v_start)));
      if (value.empty()) return std::nullopt;
    }
    call.args.emplace_back(std::move(key), std::move(value));
    skip_ws();
    if (i < line.size() && line[i] == ',') {
      ++i;
      skip_ws();
    } else if (i < line.size() && line[i] != ')') {
      return std::nullopt;
    }
  }
  if (i >= line.size()) return std::nullopt;
  ++i;
  if (!text::trim(line.substr(i)).empty()) return std::nullopt;
  return call;
}

Pipeline lex(std::string_view line) {
  Pipeline p;
  p.stages.emplace_back();
  Word cur;
  bool in_word = false;
  auto flush = [&] {
    if (in_word) p.stages.back().push_back(std::move(cur));
    cur = Word{};
    in_word = false;
  };
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
      continue;
    }
    if (c == '\'') {
      auto end = line.find('\'', i + 1);
      if (end == std::string_view::npos) throw InvalidArgument("unterminated single quote");
      cur.text.append(line.substr(i + 1, end - i - 1));
      cur.quoted = true;
      in_word = true;
      i = end;
      continue;
    }
    if (c == '"') {
      size_t j = i + 1;
      for (; j < line.size() && line[j] != '"'; ++j) {
        if (line[j] == '\\' && j + 1 < line.size() &&
            (line[j + 1] == '"' || line[j + 1] == '\\' || line[j + 1] == '$' || line[j + 1] == '`')) {
          ++j;
        } else if (line[j] == '$' || line[j] == '`') {
          throw InvalidArgument(std::string("\"") + line[j] + "\": variables and substitutions are not supported");
        }
        cur.text.push_back(line[j]);
      }
      if (j >= line.size()) throw InvalidArgument("unterminated double quote");
      cur.quoted = true;
      in_word = true;
      i = j;
      continue;
    }
    if (c == '|') {
      if (i + 1 < line.size() && line[i + 1] == '|') throw InvalidArgument("\"||\": shell operators are not supported");
      flush();
      if (p.stages.back().empty()) throw InvalidArgument("\"|\": empty pipeline stage");
      p.stages.emplace_back();
      continue;
    }
    if (std::string_view(";&<>`$*()").find(c) != std::string_view::npos) {
      std::string op(1, c);
      if (c == '&' && i + 1 < line.size() && line[i + 1] == '&') op = "&&";
      throw InvalidArgument("\"" + op + "\": shell operators are not supported");
    }
    if (c == '\\' && i + 1 < line.size()) {
      cur.text.push_back(line[++i]);
      in_word = true;
      continue;
    }
    cur.text.push_back(c);
    in_word = true;
  }
  flush();
  if (p.stages.back().empty()) throw InvalidArgument("empty command");
  return p;
}

void report_result(const Report& report, const Context& ctx) {
  if (std::find(ctx.agents.begin(), ctx.agents.end(), report.component) == ctx.agents.end()) {
    throw InvalidArgument("unknown component \"" + report.component + "\"");
  }
  if (ctx.on_report) ctx.on_report(report);
}

bool parses(std::string_view line) {
  line = text::trim(line);
  if (looks_like_tool_call(line)) {
    auto call = parse_tool_call(line);
    return call && (call->name == "report_result" || call->name == "query_prometheus");
  }
  try {
    auto p = lex(line);
    const auto& prog = p.stages.front().front().text;
    if (prog != "kubectl" && prog != "curl") return false;
    return p.stages.size() == 1 || (p.stages.size() == 2 && p.stages[1].front().text == "grep");
  } catch (const InvalidArgument&) {
    return false;
  }
}

ExecutionResult execute(std::string_view raw_line, sim::Environment& env, const Context& ctx) {
  std::string_view line = text::trim(raw_line);
  if (line.empty()) return failure("error: unknown command \"\": empty command line");

  const std::string before = env.digest();
  ExecutionResult result;
  if (looks_like_tool_call(line)) {
    auto call = parse_tool_call(line);
    if (!call) return failure("error: unknown command: malformed call syntax in \"" + std::string(line) + "\"");
    result = run_tool(*call, env, ctx);
  } else {
    Pipeline p;
    try {
      p = lex(line);
    } catch (const InvalidArgument& e) {
      return failure(std::string("error: unknown command ") + e.what());
    }
    if (p.stages.size() > 2) {
      return failure("error: unknown command: only a single \"| grep\" stage is supported");
    }
    auto words = [](const std::vector<Word>& stage) {
      std::vector<std::string> out;
      for (size_t i = 1; i < stage.size(); ++i) out.push_back(stage[i].text);
      return out;
    };
    const std::string& program = p.stages[0].front().text;
    if (program == "kubectl") {
      result = run_kubectl(words(p.stages[0]), env, ctx);
    } else if (program == "curl") {
      result = run_curl(words(p.stages[0]), env);
    } else {
      return failure("error: unknown command \"" + program + "\"");
    }
    if (p.stages.size() == 2) {
      const std::string& filter = p.stages[1].front().text;
      if (filter != "grep") {
        return failure("error: unknown command \"" + filter + "\": only \"grep\" may follow a pipe");
      }
      if (result.ok()) result = run_grep(words(p.stages[1]), result);
    }
  }
  result.state_mutated = env.digest() != before;
  return result;
}

}  // namespace skillforge::shell
