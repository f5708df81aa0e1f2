#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillforge/core/error.hpp"
#include "skillforge/data/history.hpp"

namespace skillforge::llm {

enum class Role { curriculum, curator, planner };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

class ScriptExhausted : public Error {
 public:
  using Error::Error;
};

// Transport or protocol failure talking to a live endpoint.
class BackendError : public Error {
 public:
  using Error::Error;
};

struct Message {
  std::string speaker;  // "system", "user" or "assistant"
  std::string text;
};

struct ModelRoute {
  Role role = Role::planner;
  std::string model_id;
  int max_tokens = 1024;
  double temperature = 0.0;
  bool low_latency = false;  // planner; the other roles use a reasoning model
};

struct ModelPrice {
  double usd_per_mtok_in = 0;
  double usd_per_mtok_out = 0;
};

struct LlmConfig {
  std::string mode = "scripted";  // "scripted" or "live"
  std::string endpoint;           // full chat-completions URL for live mode
  std::string api_key_env;        // environment variable holding the bearer token
  std::map<Role, ModelRoute> routes;
  std::map<std::string, ModelPrice> prices;  // by model id; placeholders, not measured
  double budget_usd = 10.0;
  std::string script_path;
  int timeout_seconds = 120;

  static LlmConfig defaults();
  // Unknown keys and missing routes are ConfigError.
  static LlmConfig from_json(const nlohmann::json& doc);
  static LlmConfig load_file(const std::string& path);
  const ModelRoute& route(Role role) const;
};

struct UsageEntry {
  Role role = Role::planner;
  std::string model_id;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double cost_usd = 0;
};

class UsageLedger {
 public:
  void add(UsageEntry entry);
  const std::vector<UsageEntry>& entries() const { return entries_; }
  double total_cost() const { return total_cost_; }
  std::int64_t total_prompt_tokens() const { return prompt_tokens_; }
  std::int64_t total_completion_tokens() const { return completion_tokens_; }
  nlohmann::json to_json() const;

 private:
  std::vector<UsageEntry> entries_;
  double total_cost_ = 0;
  std::int64_t prompt_tokens_ = 0;
  std::int64_t completion_tokens_ = 0;
};

struct Completion {
  std::string text;
  std::optional<std::int64_t> prompt_tokens;  // as reported by the endpoint
  std::optional<std::int64_t> completion_tokens;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const ModelRoute& route, const std::vector<Message>& messages) = 0;
};

// Replays fixture responses. A record answers the first call for its role whose prompt
// contains every guard substring; it is consumed unless marked "repeat". Records are
// tried in file order.
class ScriptedBackend : public Backend {
 public:
  struct Record {
    Role role = Role::planner;
    std::vector<std::string> guards;
    std::string response;
    bool repeat = false;
    bool consumed = false;
  };

  explicit ScriptedBackend(std::vector<Record> records);
  static ScriptedBackend from_json(const nlohmann::json& doc);
  static ScriptedBackend load(const std::string& name_or_path);

  Completion complete(const ModelRoute& route, const std::vector<Message>& messages) override;
  std::size_t remaining() const;
  const std::vector<Record>& records() const { return records_; }

 private:
  std::vector<Record> records_;
};

// OpenAI-compatible chat-completions client.
class HttpBackend : public Backend {
 public:
  HttpBackend(std::string endpoint, std::string api_key, int timeout_seconds);
  Completion complete(const ModelRoute& route, const std::vector<Message>& messages) override;

 private:
  std::string endpoint_;
  std::string api_key_;
  int timeout_seconds_;
};

std::unique_ptr<Backend> make_backend(const LlmConfig& config);

// ceil(chars / 4): the ledger's estimate when the backend reports no usage.
std::int64_t estimate_tokens(std::string_view text);
double cost_of(const LlmConfig& config, const std::string& model_id, std::int64_t in, std::int64_t out);

// Where a call's prompt/completion records go in the interaction history.
struct CallSite {
  std::string task_id;
  std::string actor;  // defaults to the role name
  std::string subtask;
  std::int64_t timestamp = 0;
};

class Gateway {
 public:
  Gateway(LlmConfig config, std::unique_ptr<Backend> backend, data::History* history = nullptr);

  // Throws BudgetExhausted before calling out when the worst-case cost of this call
  // (prompt estimate plus max_tokens of output) would push the ledger past the budget.
  std::string complete(Role role, const std::vector<Message>& messages, const CallSite& site = {});

  const UsageLedger& ledger() const { return ledger_; }
  const LlmConfig& config() const { return config_; }
  void set_history(data::History* history) { history_ = history; }

 private:
  LlmConfig config_;
  std::unique_ptr<Backend> backend_;
  data::History* history_;
  UsageLedger ledger_;
};

std::string render_prompt(const std::vector<Message>& messages);

}  // namespace skillforge::llm
