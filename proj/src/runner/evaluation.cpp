#include "skillforge/runner/evaluation.hpp"

#include <cctype>
#include <regex>

#include "skillforge/assets.hpp"
#include "skillforge/core/text.hpp"
#include "skillforge/metrics/promql.hpp"
#include "skillforge/runner/report.hpp"
#include "skillforge/shell/gateway.hpp"
#include "skillforge/sim/cluster.hpp"

namespace skillforge::runner {
namespace {

constexpr std::int64_t kEvalWarmupSeconds = 600;

EvalTask task_from_json(const nlohmann::json& doc, const std::string& where) {
  EvalTask t;
  try {
    t.id = doc.at("id").get<std::string>();
    t.description = doc.at("description").get<std::string>();
    t.setup = doc.value("setup", std::vector<std::string>{});
    t.settle_seconds = doc.value("settle_seconds", std::int64_t{300});
    for (const auto& tr : doc.value("traffic", nlohmann::json::array())) {
      t.traffic.push_back({tr.at("deployment").get<std::string>(), tr.at("requests_per_sec").get<double>()});
    }
    for (const auto& c : doc.at("checks")) {
      EvalCheck check;
      check.command = c.value("command", "");
      check.expect = c.value("expect", "");
      check.promql = c.value("promql", "");
      check.tolerance = c.value("tolerance", 0.0);
      if (check.command.empty() == check.promql.empty()) {
        throw std::invalid_argument("a check needs exactly one of command or promql");
      }
      t.checks.push_back(check);
    }
  } catch (const std::exception& e) {
    throw LoadError(where, e.what());
  }
  if (t.checks.empty()) throw LoadError(where, "task " + t.id + " has no checks");
  if (t.settle_seconds <= 0) throw LoadError(where, "settle_seconds must be positive");
  return t;
}

// Last number in the text; a trailing "ms" unit is converted to seconds.
std::optional<double> last_number(const std::string& s) {
  static const std::regex number(R"((\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)\s*(ms|s)?\b)");
  std::optional<double> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number); it != std::sregex_iterator(); ++it) {
    double v = std::stod((*it)[1].str());
    if ((*it)[2].str() == "ms") v /= 1000.0;
    out = v;
  }
  return out;
}

}  // namespace

std::vector<EvalTask> load_suite(const std::string& name_or_path) {
  std::string content;
  std::string where = name_or_path;
  if (auto asset = assets::find("fixtures/" + name_or_path + ".json")) {
    content = std::string(*asset);
  } else {
    content = read_file(name_or_path);
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(where, e.what());
  }
  if (doc.value("schema", "") != "skillforge/eval-suite/v1") throw LoadError(where, "unsupported suite schema");
  std::vector<EvalTask> suite;
  for (std::size_t i = 0; i < doc.at("tasks").size(); ++i) {
    suite.push_back(task_from_json(doc["tasks"][i], where + ": tasks[" + std::to_string(i) + "]"));
  }
  return suite;
}

nlohmann::json Grid::to_json() const {
  auto cells = nlohmann::json::array();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto row = nlohmann::json::object();
    row["task"] = rows[r];
    for (std::size_t c = 0; c < columns.size(); ++c) {
      row[columns[c]] = std::to_string(successes[r][c]) + "/" + std::to_string(repeats);
    }
    cells.push_back(row);
  }
  return {{"schema", "skillforge/grid/v1"}, {"repeats", repeats}, {"columns", columns}, {"rows", cells}};
}

Grid Grid::from_json(const nlohmann::json& doc) {
  if (doc.value("schema", "") != "skillforge/grid/v1") throw LoadError("grid", "unsupported grid schema");
  Grid g;
  try {
    g.repeats = doc.at("repeats").get<int>();
    g.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& row : doc.at("rows")) {
      g.rows.push_back(row.at("task").get<std::string>());
      std::vector<int> cells;
      for (const auto& c : g.columns) {
        const std::string cell = row.at(c).get<std::string>();
        auto n = text::parse_int(cell.substr(0, cell.find('/')));
        if (!n) throw LoadError("grid", "bad cell \"" + cell + "\"");
        cells.push_back(static_cast<int>(*n));
      }
      g.successes.push_back(std::move(cells));
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("grid", e.what());
  }
  return g;
}

std::string Grid::to_csv() const {
  std::string out = "task";
  for (const auto& c : columns) out += "," + csv_field(c);
  out += "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += csv_field(rows[r]);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out += "," + std::to_string(successes[r][c]) + "/" + std::to_string(repeats);
    }
    out += "\n";
  }
  return out;
}

EvalRun run_eval_task(const EvalTask& def, const data::SkillLibrary& library, const EvalConfig& config,
                      const llm::LlmConfig& llm_config, const BackendFactory& make_backend) {
  sim::Environment env(sim::load_topology_source(config.fixture, config.seed));
  env.tick(kEvalWarmupSeconds);
  for (const auto& tr : def.traffic) {
    const sim::Deployment* d = nullptr;
    for (const auto& dep : env.state().deployments) {
      if (dep.name == tr.deployment) d = &dep;
    }
    if (!d) throw ConfigError("evaluation task " + def.id + ": no deployment " + tr.deployment);
    sim::TrafficProfile profile = d->traffic;
    profile.requests_per_sec = tr.requests_per_sec;
    env.set_traffic(d->ns, d->name, profile);
  }
  shell::Context setup_ctx;
  for (const auto& line : def.setup) {
    auto res = shell::execute(line, env, setup_ctx);
    if (!res.ok()) {
      throw ConfigError("evaluation task " + def.id + ": setup command failed: " + line + ": " + res.stderr_text);
    }
  }
  env.tick(def.settle_seconds);

  data::Task task;
  task.id = def.id;
  task.round = 0;
  task.kind = data::TaskKind::action;
  task.description = def.description;
  task.origin = data::TaskOrigin::evaluation;

  data::History history;
  llm::Gateway gateway(llm_config, make_backend(), &history);
  planner::Planner planner(gateway, history, config.agents, config.planner);
  std::vector<data::SkillEntry> skills;
  if (!library.empty()) skills = library.retrieve(task.description, config.planner.skills_k);
  planner::TaskOutcome outcome = planner.run(task, skills, env, false);
  if (outcome.status != data::TaskStatus::succeeded) return {false, "task failed: " + outcome.failure_reason};

  std::string reported;
  for (const auto& s : outcome.plan.subtasks) reported += s.result.value_or("") + "\n";
  for (const auto& check : def.checks) {
    if (!check.command.empty()) {
      sim::Environment probe = env;
      auto res = shell::execute(check.command, probe, {});
      if (!res.ok() || res.stdout_text.find(check.expect) == std::string::npos) {
        return {false, "check failed: " + check.command + " does not show " + check.expect};
      }
      continue;
    }
    auto result = metrics::eval(check.promql, env.metrics(), static_cast<double>(env.now()));
    if (result.entries.empty()) return {false, "check query returned no data: " + check.promql};
    const double truth = result.entries.front().value;
    auto claimed = last_number(reported);
    if (!claimed) return {false, "no number reported"};
    const double scale = std::max(std::abs(truth), 1e-12);
    if (std::abs(*claimed - truth) / scale > check.tolerance) {
      return {false, "reported " + text::format_double(*claimed) + ", expected " + text::format_double(truth)};
    }
  }
  return {true, ""};
}

Grid run_evaluation(const std::vector<std::pair<std::string, data::SkillLibrary>>& libraries,
                    const std::vector<EvalTask>& suite, const EvalConfig& config, const llm::LlmConfig& llm_config,
                    const BackendFactory& make_backend) {
  if (config.repeats < 1) throw ConfigError("repeats must be at least 1");
  Grid grid;
  grid.repeats = config.repeats;
  for (const auto& [label, lib] : libraries) grid.columns.push_back(label);
  for (const auto& task : suite) {
    grid.rows.push_back(task.id);
    std::vector<int> row;
    for (const auto& [label, lib] : libraries) {
      int ok = 0;
      for (int i = 0; i < config.repeats; ++i) {
        if (run_eval_task(task, lib, config, llm_config, make_backend).success) ++ok;
      }
      row.push_back(ok);
    }
    grid.successes.push_back(std::move(row));
  }
  return grid;
}

}  // namespace skillforge::runner
