#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillforge/sim/environment.hpp"

namespace skillforge::shell {

struct ExecutionResult {
  std::string stdout_text;
  std::string stderr_text;
  int exit_code = 0;
  bool state_mutated = false;
  std::int64_t duration_ms = 0;  // simulated

  bool ok() const { return exit_code == 0; }
  bool operator==(const ExecutionResult&) const = default;
};

enum class MessageType { response, request };

std::string_view to_string(MessageType type);
std::optional<MessageType> parse_message_type(std::string_view text);

struct Report {
  std::string component;
  std::string message;
  MessageType type = MessageType::response;
};

struct Context {
  // Identities allowed to call report_result.
  std::vector<std::string> agents;
  // Receives accepted reports (the planner routes them into the interaction history).
  std::function<void(const Report&)> on_report;
  // Refuse write verbs instead of executing them.
  bool read_only = false;
};

// Interprets one agent-emitted command line against the environment. Never throws for
// bad input; every problem is reported through exit_code and stderr.
ExecutionResult execute(std::string_view line, sim::Environment& env, const Context& ctx = {});

// Throws InvalidArgument when the component is not a registered agent.
void report_result(const Report& report, const Context& ctx);

// True when `line` is syntactically a command this interpreter accepts (used to vet
// Command skills before they are executed).
bool parses(std::string_view line);

// Lexer shared by the interpreter and tests.
struct Word {
  std::string text;
  bool quoted = false;
};
struct Pipeline {
  std::vector<std::vector<Word>> stages;
};
// Throws InvalidArgument on unterminated quotes or unsupported shell syntax.
Pipeline lex(std::string_view line);

// Parses `name(key='v', key2="w")` tool-call syntax.
struct ToolCall {
  std::string name;
  std::vector<std::pair<std::string, std::string>> args;
  const std::string* arg(std::string_view key) const;
};
std::optional<ToolCall> parse_tool_call(std::string_view line);

}  // namespace skillforge::shell
