#include "skillforge/runner/trial.hpp"

#include <chrono>
#include <deque>
#include <filesystem>

#include "skillforge/core/text.hpp"
#include "skillforge/curator/curator.hpp"
#include "skillforge/curriculum/builder.hpp"
#include "skillforge/data/snapshot.hpp"
#include "skillforge/planner/planner.hpp"
#include "skillforge/runner/report.hpp"
#include "skillforge/sim/cluster.hpp"

namespace skillforge::runner {
namespace {

class TimeBudgetExhausted : public Error {
 public:
  using Error::Error;
};

bool curatable(const data::InteractionRecord& r) {
  return r.payload_kind == data::PayloadKind::command || r.payload_kind == data::PayloadKind::execution_result ||
         r.payload_kind == data::PayloadKind::feedback || r.payload_kind == data::PayloadKind::report;
}

std::vector<data::InteractionRecord> trajectory_of(const data::History& history, const std::string& task_id,
                                                   std::uint64_t last_record) {
  std::vector<data::InteractionRecord> out;
  for (const auto& r : history.records()) {
    if (r.id > last_record) break;
    if (r.task_id == task_id && curatable(r)) out.push_back(r);
  }
  return out;
}

std::string resources_line(const std::vector<std::string>& agents) {
  return "Component agents: " + text::join(agents, ", ") +
         ". Tools: kubectl, curl against the Prometheus HTTP API at http://192.168.58.2:31090, report_result.";
}

// Answers the curator's calls from a recorded history, in order.
class RecordedBackend : public llm::Backend {
 public:
  explicit RecordedBackend(std::deque<std::pair<std::string, std::string>> calls) : calls_(std::move(calls)) {}

  llm::Completion complete(const llm::ModelRoute&, const std::vector<llm::Message>& messages) override {
    if (calls_.empty()) throw ContractViolation("replay diverged: the curator made more calls than recorded");
    auto [prompt, completion] = std::move(calls_.front());
    calls_.pop_front();
    if (llm::render_prompt(messages) != prompt) {
      throw ContractViolation("replay diverged: a curator prompt differs from the recorded one");
    }
    return {completion, std::nullopt, std::nullopt};
  }

 private:
  std::deque<std::pair<std::string, std::string>> calls_;
};

}  // namespace

std::string_view to_string(Mode mode) { return mode == Mode::full ? "full" : "observation_only"; }

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "full") return Mode::full;
  if (text == "observation_only" || text == "observation-only") return Mode::observation_only;
  return std::nullopt;
}

llm::LlmConfig TrialConfig::llm_settings() const {
  llm::LlmConfig c = llm_config ? llm::LlmConfig::load_file(*llm_config) : llm::LlmConfig::defaults();
  if (llm != "scripted" && llm != "live") throw ConfigError("--llm must be scripted or live, got \"" + llm + "\"");
  c.mode = llm;
  if (llm == "scripted") c.script_path = script;
  c.budget_usd = budget_usd;
  return c;
}

nlohmann::json TrialConfig::to_json() const {
  return {{"seed", seed},
          {"rounds", rounds},
          {"tasks_per_round", tasks_per_round},
          {"mode", to_string(mode)},
          {"budget_usd", budget_usd},
          {"time_budget_min", time_budget_min},
          {"fixture", fixture},
          {"llm", llm},
          {"script", llm == "scripted" ? nlohmann::json(script) : nlohmann::json()},
          {"trial", trial},
          {"agents", agents}};
}

nlohmann::json TrialReport::to_json() const {
  auto tasks_json = nlohmann::json::array();
  for (const auto& row : tasks) {
    auto t = data::to_json(row.task);
    t["failure_reason"] = row.failure_reason;
    t["plan_revision"] = row.plan_revision;
    t["subtasks"] = row.subtasks;
    t["skills"] = {{"stored", row.stored}, {"merged", row.merged}, {"conflicted", row.conflicted},
                   {"rejected", row.rejected}};
    t["observation_violation"] = row.violation;
    tasks_json.push_back(std::move(t));
  }
  auto rounds_json = nlohmann::json::array();
  for (const auto& r : rounds) {
    rounds_json.push_back({{"round", r.round},
                           {"succeeded", r.succeeded},
                           {"failed", r.failed},
                           {"library_size", r.library_size},
                           {"acquired", r.acquired}});
  }
  auto points = nlohmann::json::array();
  for (const auto& p : knowledge) {
    points.push_back({{"id", p.id},
                      {"label", p.label},
                      {"family", p.family},
                      {"acquired_round", p.acquired_round ? nlohmann::json(*p.acquired_round) : nlohmann::json()}});
  }
  return {{"schema", "skillforge/report/v1"},
          {"config", config.to_json()},
          {"truncated", truncated},
          {"truncation_reason", truncation_reason},
          {"rounds_completed", rounds.size()},
          {"tasks", tasks_json},
          {"rounds", rounds_json},
          {"knowledge_points", points},
          {"mutations", mutations},
          {"library_size", library_size},
          {"usage", usage}};
}

TrialReport TrialReport::from_json(const nlohmann::json& doc) {
  if (doc.value("schema", "") != "skillforge/report/v1") throw LoadError("report", "unsupported report schema");
  TrialReport r;
  try {
    const auto& c = doc.at("config");
    r.config.seed = c.at("seed").get<std::uint64_t>();
    r.config.rounds = c.at("rounds").get<int>();
    r.config.tasks_per_round = c.at("tasks_per_round").get<int>();
    r.config.mode = parse_mode(c.at("mode").get<std::string>()).value_or(Mode::full);
    r.config.budget_usd = c.at("budget_usd").get<double>();
    r.config.time_budget_min = c.at("time_budget_min").get<double>();
    r.config.fixture = c.at("fixture").get<std::string>();
    r.config.llm = c.at("llm").get<std::string>();
    r.config.trial = c.at("trial").get<int>();
    r.config.agents = c.at("agents").get<std::vector<std::string>>();
    r.truncated = doc.at("truncated").get<bool>();
    r.truncation_reason = doc.at("truncation_reason").get<std::string>();
    for (const auto& t : doc.at("tasks")) {
      TaskRow row;
      row.task = data::task_from_json(t);
      row.failure_reason = t.at("failure_reason").get<std::string>();
      row.plan_revision = t.at("plan_revision").get<int>();
      row.subtasks = t.at("subtasks").get<int>();
      row.stored = t.at("skills").at("stored").get<int>();
      row.merged = t.at("skills").at("merged").get<int>();
      row.conflicted = t.at("skills").at("conflicted").get<int>();
      row.rejected = t.at("skills").at("rejected").get<int>();
      row.violation = t.at("observation_violation").get<bool>();
      r.tasks.push_back(row);
    }
    for (const auto& rd : doc.at("rounds")) {
      r.rounds.push_back({rd.at("round").get<int>(), rd.at("succeeded").get<int>(), rd.at("failed").get<int>(),
                          rd.at("library_size").get<std::size_t>(), rd.at("acquired").get<std::vector<std::string>>()});
    }
    for (const auto& p : doc.at("knowledge_points")) {
      KnowledgePoint kp{p.at("id").get<std::string>(), p.at("label").get<std::string>(),
                        p.at("family").get<std::string>(), std::nullopt};
      if (!p.at("acquired_round").is_null()) kp.acquired_round = p.at("acquired_round").get<int>();
      r.knowledge.push_back(kp);
    }
    r.mutations = doc.at("mutations").get<std::size_t>();
    r.library_size = doc.at("library_size").get<std::size_t>();
    r.usage = doc.at("usage");
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("report", e.what());
  }
  return r;
}

std::string TrialReport::tasks_csv() const {
  std::string out =
      "round,task_id,kind,stage,difficulty,status,plan_revision,subtasks,stored,merged,conflicted,rejected,"
      "failure_reason,description\n";
  for (const auto& r : tasks) {
    const auto& t = r.task;
    out += std::to_string(t.round) + "," + csv_field(t.id) + "," + std::string(data::to_string(t.kind)) + "," +
           std::to_string(t.stage) + "," + std::to_string(t.difficulty) + "," +
           std::string(data::to_string(t.status)) + "," + std::to_string(r.plan_revision) + "," +
           std::to_string(r.subtasks) + "," + std::to_string(r.stored) + "," + std::to_string(r.merged) + "," +
           std::to_string(r.conflicted) + "," + std::to_string(r.rejected) + "," + csv_field(r.failure_reason) +
           "," + csv_field(t.description) + "\n";
  }
  return out;
}

TrialArtifacts run_trial(const TrialConfig& config, std::unique_ptr<llm::Backend> backend) {
  if (config.rounds < 1) throw ConfigError("rounds must be at least 1");
  if (config.tasks_per_round < 1) throw ConfigError("tasks per round must be at least 1");
  const llm::LlmConfig llm_config = config.llm_settings();
  if (!backend) backend = llm::make_backend(llm_config);

  TrialArtifacts out;
  TrialReport& report = out.report;
  report.config = config;
  data::History& history = out.history;
  data::SkillLibrary& library = out.library;

  sim::Environment env(sim::load_topology_source(config.fixture, config.seed));
  llm::Gateway gateway(llm_config, std::move(backend), &history);
  curriculum::CurriculumBuilder builder(
      gateway, history, {config.tasks_per_round, config.mode == Mode::observation_only, 2});
  planner::PlannerConfig planner_config;
  planner::Planner planner(gateway, history, config.agents, planner_config);
  curator::Curator curator(gateway, history, config.agents);
  KnowledgeTracker tracker;

  history.log("trial", {{"config", config.to_json()}, {"digest", env.digest()}});
  env.tick(kWarmupSeconds);
  history.log("tick", {{"dt", kWarmupSeconds}, {"sim_time", env.now()}});

  const auto wall_start = std::chrono::steady_clock::now();
  const std::int64_t sim_start = env.now();
  const double budget_seconds = config.time_budget_min * 60.0;
  auto elapsed = [&]() {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return static_cast<double>(env.now() - sim_start) + wall;
  };
  std::size_t logged_mutations = 0;
  auto log_mutations = [&]() {
    const auto& log = env.mutation_log();
    for (; logged_mutations < log.size(); ++logged_mutations) {
      history.log("mutation", {{"record", sim::to_json(log[logged_mutations])}});
    }
  };

  std::vector<data::Task> finished;
  std::vector<data::Task> prev_round;
  std::optional<RoundSummary> open_round;
  auto close_round = [&]() {
    if (!open_round) return;
    open_round->library_size = library.size();
    report.rounds.push_back(*open_round);
    out.round_libraries.push_back(library);
    history.log("round_end", {{"round", open_round->round}, {"library_size", library.size()}});
    open_round.reset();
  };

  try {
    for (int round = 1; round <= config.rounds; ++round) {
      if (elapsed() + kTaskSpacingSeconds > budget_seconds) throw TimeBudgetExhausted("time budget exhausted");
      const std::string context = curriculum::build_context(data::snapshot(env), curriculum::summarize(finished, history),
                                                            {resources_line(config.agents)});
      std::vector<data::Task> tasks;
      try {
        tasks = builder.generate_round(context, round, prev_round, env.now());
      } catch (const curriculum::RoundGenerationFailed& e) {
        history.log("round_failed", {{"round", round}, {"reason", e.what()}});
        open_round = RoundSummary{round, 0, 0, 0, {}};
        close_round();
        continue;
      }
      open_round = RoundSummary{round, 0, 0, 0, {}};
      data::TaskQueue queue;
      queue.enqueue(tasks);
      std::vector<data::Task> done;
      while (auto task = queue.next()) {
        if (elapsed() + kTaskSpacingSeconds > budget_seconds) throw TimeBudgetExhausted("time budget exhausted");
        env.tick(kTaskSpacingSeconds);
        history.log("tick", {{"dt", kTaskSpacingSeconds}, {"sim_time", env.now()}});
        history.log("task_start", data::to_json(*task));

        std::vector<data::SkillEntry> skills;
        if (!library.empty()) skills = library.retrieve(task->description, planner_config.skills_k);
        const sim::Environment before = env;
        const bool read_only = config.mode == Mode::observation_only;
        planner::TaskOutcome outcome = planner.run(*task, skills, env, read_only);
        TaskRow row;
        row.plan_revision = outcome.plan.revision;
        row.subtasks = static_cast<int>(outcome.plan.subtasks.size());
        row.failure_reason = outcome.failure_reason;
        row.violation = outcome.violation;
        if (outcome.violation) {
          // The aborted task's changes are rolled back so later tasks see the pre-task state.
          history.log("violation", {{"task_id", task->id}, {"reason", outcome.failure_reason}});
          env = before;
          logged_mutations = std::min(logged_mutations, env.mutation_log().size());
        }
        log_mutations();
        task->status = outcome.status;
        auto status = data::to_json(*task);
        status["failure_reason"] = outcome.failure_reason;
        status["digest_before"] = before.digest();
        status["digest_after"] = env.digest();
        history.log("task", status);

        if (task->status == data::TaskStatus::succeeded) {
          const std::uint64_t last = history.records().empty() ? 0 : history.records().back().id;
          history.log("curation", {{"task", data::to_json(*task)},
                                   {"solution", outcome.solution},
                                   {"last_record", last},
                                   {"round", round},
                                   {"trial", config.trial}});
          auto result = curator.curate(*task, outcome.solution, trajectory_of(history, task->id, last), &env, library,
                                       round, config.trial);
          row.stored = result.counts.stored;
          row.merged = result.counts.merged;
          row.conflicted = result.counts.conflicted;
          row.rejected = static_cast<int>(result.rejected.size());
          ++open_round->succeeded;
        } else {
          ++open_round->failed;
        }
        for (const auto& id : tracker.update(library, round)) {
          open_round->acquired.push_back(id);
          history.log("knowledge_point", {{"id", id}, {"round", round}, {"task_id", task->id}});
        }
        row.task = *task;
        report.tasks.push_back(row);
        finished.push_back(*task);
        done.push_back(*task);
      }
      close_round();
      prev_round = done;
    }
  } catch (const llm::BudgetExhausted& e) {
    report.truncated = true;
    report.truncation_reason = e.what();
  } catch (const TimeBudgetExhausted& e) {
    report.truncated = true;
    report.truncation_reason = e.what();
  } catch (const llm::ScriptExhausted& e) {
    report.truncated = true;
    report.truncation_reason = std::string("script exhausted: ") + e.what();
  } catch (const llm::BackendError& e) {
    report.truncated = true;
    report.truncation_reason = std::string("model endpoint failed: ") + e.what();
  }
  log_mutations();
  close_round();
  if (report.truncated) history.log("truncated", {{"reason", report.truncation_reason}});

  report.knowledge = tracker.points();
  report.mutations = env.mutation_log().size();
  report.library_size = library.size();
  report.usage = gateway.ledger().to_json();
  if (!config.out_dir.empty()) write_trial(out, config.out_dir);
  return out;
}

void write_trial(const TrialArtifacts& a, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path root(out_dir);
  fs::create_directories(root);
  write_file((root / "history.log").string(), a.history.serialize());
  write_file((root / "skills.library").string(), a.library.to_json().dump(2) + "\n");
  write_file((root / "skills.md").string(), a.library.export_markdown());
  write_file((root / "report.json").string(), a.report.to_json().dump(2) + "\n");
  write_file((root / "tasks.csv").string(), a.report.tasks_csv());
  write_file((root / "knowledge.csv").string(), knowledge_csv(a.report.knowledge));
  write_file((root / "knowledge.svg").string(), knowledge_svg(a.report.knowledge, a.report.config.rounds));
  write_file((root / "usage.json").string(), a.report.usage.dump(2) + "\n");
  for (std::size_t i = 0; i < a.round_libraries.size(); ++i) {
    const fs::path dir = root / "rounds" / ("round-" + std::to_string(a.report.rounds[i].round));
    fs::create_directories(dir);
    write_file((dir / "skills.library").string(), a.round_libraries[i].to_json().dump(2) + "\n");
    write_file((dir / "skills.md").string(), a.round_libraries[i].export_markdown());
  }
  const fs::path tasks = root / "trials" / ("trial-" + std::to_string(a.report.config.trial)) / "tasks";
  for (const auto& row : a.report.tasks) {
    const fs::path dir = tasks / row.task.id;
    fs::create_directories(dir);
    std::string lines;
    for (const auto& r : a.history.records_for(row.task.id)) lines += data::to_json(r).dump() + "\n";
    write_file((dir / "trajectory.jsonl").string(), lines);
  }
}

data::SkillLibrary replay(const data::History& history, const TrialConfig& config) {
  std::uint64_t seed = config.seed;
  std::string fixture = config.fixture;
  std::vector<std::string> agents = config.agents;
  for (const auto& ev : history.events()) {
    if (ev.value("type", "") != "trial") continue;
    const auto& c = ev.at("config");
    seed = c.at("seed").get<std::uint64_t>();
    fixture = c.at("fixture").get<std::string>();
    agents = c.at("agents").get<std::vector<std::string>>();
    break;
  }

  std::deque<std::pair<std::string, std::string>> calls;
  const auto& records = history.records();
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    if (records[i].actor == "curator" && records[i].payload_kind == data::PayloadKind::prompt &&
        records[i + 1].payload_kind == data::PayloadKind::completion) {
      calls.emplace_back(records[i].payload, records[i + 1].payload);
    }
  }

  llm::LlmConfig llm_config = llm::LlmConfig::defaults();
  llm_config.budget_usd = 1e9;
  llm::Gateway gateway(llm_config, std::make_unique<RecordedBackend>(std::move(calls)));
  data::History scratch;
  curator::Curator curator(gateway, scratch, agents);
  sim::Environment env(sim::load_topology_source(fixture, seed));
  data::SkillLibrary library;

  for (const auto& ev : history.events()) {
    const std::string type = ev.value("type", "");
    if (type == "tick") {
      env.tick(ev.at("dt").get<std::int64_t>());
    } else if (type == "mutation") {
      env.mutate(sim::mutation_record_from_json(ev.at("record")).mutation);
    } else if (type == "curation") {
      const data::Task task = data::task_from_json(ev.at("task"));
      const auto last = ev.at("last_record").get<std::uint64_t>();
      curator.curate(task, ev.at("solution").get<std::string>(), trajectory_of(history, task.id, last), &env, library,
                     ev.at("round").get<int>(), ev.at("trial").get<int>());
    }
  }
  return library;
}

}  // namespace skillforge::runner
