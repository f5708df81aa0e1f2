#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "skillforge/core/error.hpp"
#include "skillforge/data/history.hpp"
#include "skillforge/runner/evaluation.hpp"
#include "skillforge/runner/report.hpp"
#include "skillforge/runner/trial.hpp"

namespace fs = std::filesystem;
using namespace skillforge;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kTruncated = 2;

int cmd_run(const runner::TrialConfig& config) {
  auto artifacts = runner::run_trial(config);
  const auto& r = artifacts.report;
  int ok = 0;
  for (const auto& row : r.tasks) ok += row.task.status == data::TaskStatus::succeeded;
  std::cout << "rounds: " << r.rounds.size() << "/" << config.rounds << "\n"
            << "tasks: " << ok << " succeeded, " << r.tasks.size() - ok << " failed\n"
            << "skills: " << r.library_size << "\n"
            << "cost: $" << r.usage.value("total_cost_usd", 0.0) << "\n";
  for (const auto& p : r.knowledge) {
    std::cout << "knowledge " << p.id << ": "
              << (p.acquired_round ? "round " + std::to_string(*p.acquired_round) : std::string("not acquired")) << "\n";
  }
  if (!config.out_dir.empty()) std::cout << "artifacts: " << config.out_dir << "\n";
  if (r.truncated) {
    std::cerr << "trial truncated: " << r.truncation_reason << "\n";
    return kTruncated;
  }
  return kOk;
}

struct EvalArgs {
  std::string trial_dir;
  std::vector<std::string> libraries;  // label=path
  std::string suite = "eval_suite";
  std::string script = "eval_agents";
  std::string llm = "scripted";
  std::string llm_config;
  double budget_usd = 10.0;
  std::string out_dir;
  runner::EvalConfig config;
};

int cmd_eval(const EvalArgs& a) {
  std::vector<std::pair<std::string, data::SkillLibrary>> libs;
  auto load_lib = [](const std::string& path) {
    try {
      return data::SkillLibrary::from_json(nlohmann::json::parse(runner::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(path, e.what());
    }
  };
  if (!a.trial_dir.empty()) {
    for (int n = 1;; ++n) {
      const fs::path p = fs::path(a.trial_dir) / "rounds" / ("round-" + std::to_string(n)) / "skills.library";
      if (!fs::exists(p)) break;
      libs.emplace_back("round-" + std::to_string(n), load_lib(p.string()));
    }
    if (libs.empty()) throw ConfigError("no per-round libraries under " + a.trial_dir + "/rounds");
  }
  for (const auto& spec : a.libraries) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) {
      libs.emplace_back(fs::path(spec).stem().string(), load_lib(spec));
    } else {
      libs.emplace_back(spec.substr(0, eq), load_lib(spec.substr(eq + 1)));
    }
  }
  if (libs.empty()) libs.emplace_back("empty", data::SkillLibrary{});

  llm::LlmConfig llm_config = a.llm_config.empty() ? llm::LlmConfig::defaults() : llm::LlmConfig::load_file(a.llm_config);
  llm_config.mode = a.llm;
  if (a.llm == "scripted") llm_config.script_path = a.script;
  llm_config.budget_usd = a.budget_usd;
  llm::make_backend(llm_config);  // surfaces configuration errors before any work
  auto suite = runner::load_suite(a.suite);
  auto grid = runner::run_evaluation(libs, suite, a.config, llm_config,
                                     [&]() { return llm::make_backend(llm_config); });
  std::cout << grid.to_csv();
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    runner::write_file((fs::path(a.out_dir) / "grid.json").string(), grid.to_json().dump(2) + "\n");
    runner::write_file((fs::path(a.out_dir) / "grid.csv").string(), grid.to_csv());
    runner::write_file((fs::path(a.out_dir) / "grid.svg").string(), runner::grid_svg(grid));
  }
  return kOk;
}

int cmd_report(const std::string& input, const std::string& format, const std::string& output) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(runner::read_file(input));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(input, e.what());
  }
  std::string text;
  if (doc.value("schema", "") == "skillforge/grid/v1") {
    auto grid = runner::Grid::from_json(doc);
    if (format == "json") text = grid.to_json().dump(2) + "\n";
    if (format == "csv") text = grid.to_csv();
    if (format == "svg") text = runner::grid_svg(grid);
  } else {
    auto report = runner::TrialReport::from_json(doc);
    if (format == "json") text = report.to_json().dump(2) + "\n";
    if (format == "csv") text = report.tasks_csv();
    if (format == "knowledge-csv") text = runner::knowledge_csv(report.knowledge);
    if (format == "svg") text = runner::knowledge_svg(report.knowledge, report.config.rounds);
  }
  if (output.empty()) {
    std::cout << text;
  } else {
    runner::write_file(output, text);
  }
  return kOk;
}

int cmd_replay(const std::string& history_path, const std::string& compare, const std::string& output) {
  auto history = data::History::parse(runner::read_file(history_path));
  auto library = runner::replay(history, runner::TrialConfig{});
  const std::string text = library.to_json().dump(2) + "\n";
  if (!output.empty()) runner::write_file(output, text);
  std::cout << "replayed " << library.size() << " skills\n";
  if (!compare.empty()) {
    auto expected = data::SkillLibrary::from_json(nlohmann::json::parse(runner::read_file(compare)));
    if (!(expected == library)) {
      std::cerr << "replayed library differs from " << compare << "\n";
      return kConfigError;
    }
    std::cout << "identical to " << compare << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-learning agents for a simulated microservice deployment"};
  app.require_subcommand(1);

  runner::TrialConfig trial;
  std::string mode = "full";
  std::string llm_config;
  auto* run = app.add_subcommand("run", "Run a self-learning trial");
  run->add_option("--seed", trial.seed, "Simulation seed")->capture_default_str();
  run->add_option("--rounds", trial.rounds, "Curriculum rounds")->capture_default_str();
  run->add_option("--tasks-per-round", trial.tasks_per_round, "Tasks per round")->capture_default_str();
  run->add_option("--mode", mode, "full or observation_only")
      ->check(CLI::IsMember({"full", "observation_only", "observation-only"}))
      ->capture_default_str();
  run->add_option("--budget-usd", trial.budget_usd, "Model spending ceiling")->capture_default_str();
  run->add_option("--time-budget-min", trial.time_budget_min, "Time ceiling in minutes")->capture_default_str();
  run->add_option("--fixture", trial.fixture, "Topology fixture name or path")->capture_default_str();
  run->add_option("--llm", trial.llm, "scripted or live")->check(CLI::IsMember({"scripted", "live"}))->capture_default_str();
  run->add_option("--script", trial.script, "Oracle script name or path")->capture_default_str();
  run->add_option("--llm-config", llm_config, "Model gateway configuration (JSON)");
  run->add_option("--out-dir", trial.out_dir, "Artifact directory");
  run->add_option("--trial", trial.trial, "Trial number")->capture_default_str();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Run the evaluation suite against skill libraries");
  eval->add_option("--trial-dir", ev.trial_dir, "Use every rounds/round-N library of a trial");
  eval->add_option("--library", ev.libraries, "label=path of a skill library (repeatable)");
  eval->add_option("--suite", ev.suite, "Suite name or path")->capture_default_str();
  eval->add_option("--script", ev.script, "Oracle script name or path")->capture_default_str();
  eval->add_option("--llm", ev.llm, "scripted or live")->check(CLI::IsMember({"scripted", "live"}))->capture_default_str();
  eval->add_option("--llm-config", ev.llm_config, "Model gateway configuration (JSON)");
  eval->add_option("--budget-usd", ev.budget_usd, "Spending ceiling per task run")->capture_default_str();
  eval->add_option("--repeats", ev.config.repeats, "Runs per task and library")->capture_default_str();
  eval->add_option("--seed", ev.config.seed, "Simulation seed")->capture_default_str();
  eval->add_option("--fixture", ev.config.fixture, "Topology fixture name or path")->capture_default_str();
  eval->add_option("--out-dir", ev.out_dir, "Writes grid.json, grid.csv and grid.svg here");

  std::string report_input, report_format = "json", report_output;
  auto* report = app.add_subcommand("report", "Render a report.json or grid.json");
  report->add_option("input", report_input, "report.json or grid.json")->required();
  report->add_option("--format", report_format, "json, csv, knowledge-csv or svg")->capture_default_str();
  report->add_option("--output,-o", report_output, "Write here instead of stdout");

  std::string replay_history, replay_compare, replay_output;
  auto* replay = app.add_subcommand("replay", "Re-derive the skill library from a history log");
  replay->add_option("history", replay_history, "history.log")->required();
  replay->add_option("--compare", replay_compare, "skills.library to compare against");
  replay->add_option("--output,-o", replay_output, "Write the replayed library here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) {
      trial.mode = *runner::parse_mode(mode);
      if (!llm_config.empty()) trial.llm_config = llm_config;
      return cmd_run(trial);
    }
    if (*eval) return cmd_eval(ev);
    if (*report) {
      if (report_format != "json" && report_format != "csv" && report_format != "knowledge-csv" &&
          report_format != "svg") {
        std::cerr << "error: unknown format \"" << report_format << "\"\n";
        return kConfigError;
      }
      return cmd_report(report_input, report_format, report_output);
    }
    if (*replay) return cmd_replay(replay_history, replay_compare, replay_output);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
