#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "skillforge/runner/evaluation.hpp"
#include "skillforge/runner/report.hpp"
#include "skillforge/runner/trial.hpp"
#include "skillforge/shell/gateway.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace skillforge;
using namespace skillforge::runner;
using data::FeedbackKind;
using testkit::rec;

namespace {

const TrialArtifacts& golden() {
  static const TrialArtifacts a = run_trial(TrialConfig{});
  return a;
}

const TrialArtifacts& golden_again() {
  static const TrialArtifacts a = run_trial(TrialConfig{});
  return a;
}

std::vector<nlohmann::json> events_of(const data::History& h, std::string_view type) {
  std::vector<nlohmann::json> out;
  for (const auto& e : h.events()) {
    if (e.value("type", "") == type) out.push_back(e);
  }
  return out;
}

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("skillforge-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(GoldenTrial, FiveRoundsOfThreeTasks) {
  const auto& r = golden().report;
  EXPECT_FALSE(r.truncated) << r.truncation_reason;
  ASSERT_EQ(r.rounds.size(), 5u);
  ASSERT_EQ(r.tasks.size(), 15u);
  for (int round = 1; round <= 5; ++round) {
    int n = 0;
    for (const auto& row : r.tasks) {
      if (row.task.round != round) continue;
      ++n;
      EXPECT_FALSE(row.task.description.empty());
      EXPECT_NE(row.task.status, data::TaskStatus::pending);
    }
    EXPECT_EQ(n, 3) << round;
  }
  EXPECT_EQ(r.library_size, golden().library.size());
  EXPECT_GT(r.library_size, 0u);
}

TEST(GoldenTrial, ByteStableAcrossRuns) {
  EXPECT_EQ(golden().history.serialize(), golden_again().history.serialize());
  EXPECT_EQ(golden().report.to_json().dump(), golden_again().report.to_json().dump());
  EXPECT_EQ(golden().library.export_markdown(), golden_again().library.export_markdown());
}

TEST(GoldenTrial, KubectlPointsPrecedePrometheusPoints) {
  const auto& points = golden().report.knowledge;
  ASSERT_EQ(points.size(), 5u);
  int kubectl_last = 0;
  int prometheus_first = 1000;
  int kubectl = 0, prometheus = 0;
  for (const auto& p : points) {
    ASSERT_TRUE(p.acquired_round.has_value()) << p.id;
    if (p.family == "kubectl") {
      ++kubectl;
      kubectl_last = std::max(kubectl_last, *p.acquired_round);
    } else {
      ++prometheus;
      prometheus_first = std::min(prometheus_first, *p.acquired_round);
    }
  }
  EXPECT_EQ(kubectl, 2);
  EXPECT_EQ(prometheus, 3);
  EXPECT_LT(kubectl_last, prometheus_first);
  // The per-round timeline lists each point exactly once.
  std::size_t listed = 0;
  for (const auto& round : golden().report.rounds) listed += round.acquired.size();
  EXPECT_EQ(listed, 5u);
}

TEST(GoldenTrial, FeedbackOfEveryKindWithItsOrigin) {
  const auto& h = golden().history;
  const auto& agents = TrialConfig{}.agents;
  std::map<FeedbackKind, int> seen;
  for (const auto& r : h.records()) {
    if (r.payload_kind != data::PayloadKind::feedback) {
      EXPECT_FALSE(r.feedback_kind.has_value());
      continue;
    }
    ASSERT_TRUE(r.feedback_kind.has_value());
    ++seen[*r.feedback_kind];
    switch (*r.feedback_kind) {
      case FeedbackKind::environment: {
        EXPECT_EQ(r.actor, "environment");
        // Verbatim stderr of the execution result just before it.
        const auto* result = h.find(r.id - 1);
        ASSERT_NE(result, nullptr);
        EXPECT_EQ(result->payload_kind, data::PayloadKind::execution_result);
        EXPECT_NE(result->exit_code.value_or(0), 0);
        EXPECT_NE(result->payload.find(r.payload), std::string::npos);
        break;
      }
      case FeedbackKind::peer:
        EXPECT_TRUE(std::find(agents.begin(), agents.end(), r.actor) != agents.end()) << r.actor;
        break;
      case FeedbackKind::hierarchical: EXPECT_EQ(r.actor, "manager"); break;
    }
  }
  EXPECT_GE(seen[FeedbackKind::environment], 1);
  EXPECT_GE(seen[FeedbackKind::peer], 1);
  EXPECT_GE(seen[FeedbackKind::hierarchical], 1);
}

TEST(GoldenTrial, ObservationTasksLeaveTheDigestUnchanged) {
  int observation = 0;
  for (const auto& ev : events_of(golden().history, "task")) {
    if (ev.at("kind") != "observation") continue;
    ++observation;
    EXPECT_EQ(ev.at("digest_before"), ev.at("digest_after")) << ev.at("id");
  }
  EXPECT_EQ(observation, 14);
  EXPECT_TRUE(events_of(golden().history, "observation_violation").empty());
  // The only mutation belongs to the action task.
  EXPECT_EQ(golden().report.mutations, 1u);
}

TEST(GoldenTrial, ActionComesAfterObservation) {
  std::size_t last_round1_observation = 0;
  std::optional<std::size_t> first_action;
  const auto& tasks = golden().report.tasks;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].task.round == 1 && tasks[i].task.kind == data::TaskKind::observation) last_round1_observation = i;
    if (tasks[i].task.kind == data::TaskKind::action && !first_action) first_action = i;
  }
  ASSERT_TRUE(first_action.has_value());
  EXPECT_GT(*first_action, last_round1_observation);
}

TEST(GoldenTrial, ReplayRebuildsTheLibrary) {
  const auto& a = golden();
  EXPECT_EQ(replay(a.history, TrialConfig{}), a.library);
  // Through the serialized log as well.
  EXPECT_EQ(replay(data::History::parse(a.history.serialize()), TrialConfig{}), a.library);
}

TEST(GoldenTrial, StoredCommandsReexecuteWhereTheyWereValidated) {
  const auto& a = golden();
  std::map<std::string, sim::Environment> at_curation;
  auto env = testkit::fixture_env(TrialConfig{}.seed);
  for (const auto& ev : a.history.events()) {
    const std::string type = ev.value("type", "");
    if (type == "tick") env.tick(ev.at("dt").get<std::int64_t>());
    if (type == "mutation") env.mutate(sim::mutation_record_from_json(ev.at("record")).mutation);
    if (type == "curation") at_curation.emplace(ev.at("task").at("id").get<std::string>(), env);
  }
  shell::Context ctx;
  ctx.agents = TrialConfig{}.agents;
  ctx.agents.push_back("manager");
  ctx.on_report = [](const shell::Report&) {};
  int commands = 0;
  for (const auto& e : a.library.entries()) {
    EXPECT_TRUE(e.validated);
    if (e.kind != data::SkillKind::command) continue;
    ++commands;
    auto it = at_curation.find(e.source_task);
    ASSERT_NE(it, at_curation.end()) << e.source_task;
    sim::Environment clone = it->second;
    auto res = shell::execute(e.body, clone, ctx);
    EXPECT_EQ(res.exit_code, 0) << e.body << "\n" << res.stderr_text;
  }
  EXPECT_GE(commands, 10);
}

TEST(GoldenTrial, MarkdownExportKeepsTheLayout) {
  const std::string md = golden().library.export_markdown();
  auto command = md.find("## Command\n");
  auto reflection = md.find("\n# Reflection\n");
  auto configuration = md.find("\n# Configuration\n");
  auto conflicts = md.find("\n# Conflicted Experience Requiring Resolution\n");
  ASSERT_NE(command, std::string::npos);
  ASSERT_NE(reflection, std::string::npos);
  ASSERT_NE(configuration, std::string::npos);
  ASSERT_NE(conflicts, std::string::npos);
  EXPECT_LT(command, reflection);
  EXPECT_LT(reflection, configuration);
  EXPECT_LT(configuration, conflicts);
  EXPECT_NE(md.find("- Command 1: "), std::string::npos);
  EXPECT_NE(md.find("- Reflection 1: "), std::string::npos);
  EXPECT_NE(md.find("- Configuration 1: "), std::string::npos);
}

TEST(ObservationOnlyTrial, NoMutationsAndNoActionTasks) {
  TrialConfig cfg;
  cfg.mode = Mode::observation_only;
  auto a = run_trial(cfg);
  EXPECT_FALSE(a.report.truncated) << a.report.truncation_reason;
  EXPECT_EQ(a.report.tasks.size(), 15u);
  EXPECT_EQ(a.report.mutations, 0u);
  EXPECT_TRUE(events_of(a.history, "mutation").empty());
  for (const auto& row : a.report.tasks) EXPECT_EQ(row.task.kind, data::TaskKind::observation);
  EXPECT_EQ(replay(a.history, cfg), a.library);
}

TEST(TrialBudget, ZeroBudgetLiveRunStopsBeforeAnyTask) {
  TrialConfig cfg;
  cfg.llm = "live";
  cfg.budget_usd = 0;
  auto a = run_trial(cfg, testkit::script(nlohmann::json::array()));
  EXPECT_TRUE(a.report.truncated);
  EXPECT_NE(a.report.truncation_reason.find("budget"), std::string::npos);
  EXPECT_TRUE(a.report.tasks.empty());
  EXPECT_TRUE(a.library.empty());
  EXPECT_EQ(a.report.usage.value("total_cost_usd", -1.0), 0.0);
}

TEST(TrialBudget, TimeBudgetTruncates) {
  TrialConfig cfg;
  cfg.time_budget_min = 3;  // three tasks of sim time, at most
  auto a = run_trial(cfg);
  EXPECT_TRUE(a.report.truncated);
  EXPECT_NE(a.report.truncation_reason.find("time budget"), std::string::npos);
  EXPECT_LE(a.report.tasks.size(), 3u);
}

TEST(TrialBudget, ArtifactsAreWrittenForTruncatedTrials) {
  TrialConfig cfg;
  cfg.llm = "live";
  cfg.budget_usd = 0;
  cfg.out_dir = scratch_dir("truncated").string();
  run_trial(cfg, testkit::script(nlohmann::json::array()));
  for (const char* f : {"history.log", "report.json", "usage.json", "skills.library", "skills.md"}) {
    EXPECT_TRUE(fs::exists(fs::path(cfg.out_dir) / f)) << f;
  }
  auto doc = nlohmann::json::parse(read_file((fs::path(cfg.out_dir) / "report.json").string()));
  EXPECT_TRUE(doc.at("truncated").get<bool>());
  fs::remove_all(cfg.out_dir);
}

TEST(TrialRounds, FailedRoundGenerationMovesOnToTheNextRound) {
  auto script = nlohmann::json::array(
      {rec("curriculum", {"ROUND 1\n"}, "no idea", true),
       rec("curriculum", {"ROUND 2\n"},
           "### Task 1\ndescription: a\nkind: observation\nstage: 1\ndifficulty: 1\n"
           "### Task 2\ndescription: b\nkind: observation\nstage: 1\ndifficulty: 1\n"
           "### Task 3\ndescription: c\nkind: observation\nstage: 1\ndifficulty: 1\n"),
       rec("planner", {"MODE: decompose"}, "SUBTASK 1\nassignee: payments\ndescription: x", true)});
  TrialConfig cfg;
  cfg.rounds = 2;
  auto a = run_trial(cfg, testkit::script(script));
  EXPECT_FALSE(a.report.truncated) << a.report.truncation_reason;
  ASSERT_EQ(a.report.rounds.size(), 2u);
  EXPECT_EQ(a.report.rounds[0].succeeded + a.report.rounds[0].failed, 0);
  EXPECT_EQ(a.report.rounds[1].failed, 3);
  EXPECT_EQ(events_of(a.history, "round_failed").size(), 1u);
  for (const auto& row : a.report.tasks) EXPECT_NE(row.failure_reason.find("planning failed"), std::string::npos);
}

TEST(TrialConfigTest, Validation) {
  TrialConfig cfg;
  cfg.rounds = 0;
  EXPECT_THROW(run_trial(cfg), ConfigError);
  cfg = TrialConfig{};
  cfg.llm = "psychic";
  EXPECT_THROW(run_trial(cfg), ConfigError);
  cfg = TrialConfig{};
  cfg.script = "no_such_script";
  EXPECT_THROW(run_trial(cfg), Error);
  EXPECT_EQ(parse_mode("observation-only"), Mode::observation_only);
  EXPECT_EQ(parse_mode("sideways"), std::nullopt);
}

TEST(Reports, WrittenArtifactsRoundTrip) {
  auto dir = scratch_dir("report");
  write_trial(golden(), dir.string());
  for (const char* f : {"history.log", "skills.library", "skills.md", "report.json", "tasks.csv", "knowledge.csv",
                        "knowledge.svg", "usage.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  for (int n = 1; n <= 5; ++n) {
    EXPECT_TRUE(fs::exists(dir / "rounds" / ("round-" + std::to_string(n)) / "skills.library")) << n;
  }
  auto doc = nlohmann::json::parse(read_file((dir / "report.json").string()));
  auto back = TrialReport::from_json(doc);
  EXPECT_EQ(back.to_json(), golden().report.to_json());
  EXPECT_EQ(back.tasks_csv(), read_file((dir / "tasks.csv").string()));
  EXPECT_EQ(data::History::parse(read_file((dir / "history.log").string())).serialize(),
            golden().history.serialize());
  EXPECT_EQ(data::SkillLibrary::from_json(nlohmann::json::parse(read_file((dir / "skills.library").string()))),
            golden().library);
  fs::remove_all(dir);
}

TEST(Reports, CsvAndSvgShapes) {
  const auto& r = golden().report;
  auto csv = r.tasks_csv();
  EXPECT_TRUE(csv.starts_with("round,task_id,kind,stage,difficulty,status,"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 16);
  auto kcsv = knowledge_csv(r.knowledge);
  EXPECT_TRUE(kcsv.starts_with("point,label,family,acquired_round\n"));
  EXPECT_EQ(std::count(kcsv.begin(), kcsv.end(), '\n'), 6);
  auto svg = knowledge_svg(r.knowledge, 5);
  EXPECT_TRUE(svg.starts_with("<svg"));
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  for (const auto& p : r.knowledge) EXPECT_NE(svg.find(p.label), std::string::npos) << p.label;
}

TEST(Reports, EmptyTrialIsWellFormed) {
  TrialReport empty;
  auto doc = empty.to_json();
  EXPECT_EQ(TrialReport::from_json(doc).to_json(), doc);
  const auto csv = empty.tasks_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  auto svg = knowledge_svg({}, 5);
  EXPECT_TRUE(svg.starts_with("<svg"));
  Grid g;
  EXPECT_TRUE(grid_svg(g).starts_with("<svg"));
  EXPECT_EQ(g.to_csv(), "task\n");
  EXPECT_THROW(TrialReport::from_json(nlohmann::json::object()), LoadError);
}

TEST(Reports, CsvQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

namespace {

EvalConfig eval_config(int repeats = 3) {
  EvalConfig c;
  c.repeats = repeats;
  return c;
}

llm::LlmConfig eval_llm() {
  auto c = llm::LlmConfig::defaults();
  c.script_path = "eval_agents";
  return c;
}

Grid evaluate(const std::vector<std::pair<std::string, data::SkillLibrary>>& libs, int repeats = 3) {
  auto llm_config = eval_llm();
  return run_evaluation(libs, load_suite("eval_suite"), eval_config(repeats), llm_config,
                        [&] { return llm::make_backend(llm_config); });
}

std::size_t row_of(const Grid& g, const std::string& id) {
  auto it = std::find(g.rows.begin(), g.rows.end(), id);
  if (it == g.rows.end()) throw std::runtime_error("no row " + id);
  return static_cast<std::size_t>(it - g.rows.begin());
}

}  // namespace

TEST(Evaluation, SuiteIsFiveActionTasks) {
  auto suite = load_suite("eval_suite");
  ASSERT_EQ(suite.size(), 5u);
  std::set<std::string> exploration;
  for (const auto& row : golden().report.tasks) exploration.insert(row.task.description);
  for (const auto& t : suite) {
    EXPECT_FALSE(t.checks.empty()) << t.id;
    EXPECT_EQ(exploration.count(t.description), 0u) << t.id;
  }
}

TEST(Evaluation, SkillGapTaskNeedsTheLearnedSkill) {
  auto grid = evaluate({{"empty", data::SkillLibrary{}}, {"round-5", golden().round_libraries.at(4)}});
  auto r = row_of(grid, "eval-p95-under-load");
  EXPECT_EQ(grid.successes[r][0], 0);
  EXPECT_EQ(grid.successes[r][1], 3);
}

TEST(Evaluation, LaterLibrariesNeverDoWorse) {
  std::vector<std::pair<std::string, data::SkillLibrary>> libs;
  for (std::size_t i = 0; i < golden().round_libraries.size(); ++i) {
    libs.emplace_back("round-" + std::to_string(i + 1), golden().round_libraries[i]);
  }
  auto grid = evaluate(libs);
  ASSERT_EQ(grid.columns.size(), 5u);
  ASSERT_EQ(grid.rows.size(), 5u);
  for (std::size_t r = 0; r < grid.rows.size(); ++r) {
    EXPECT_GE(grid.successes[r][4], grid.successes[r][0]) << grid.rows[r];
    for (int s : grid.successes[r]) {
      EXPECT_GE(s, 0);
      EXPECT_LE(s, 3);
    }
  }
  auto csv = grid.to_csv();
  EXPECT_TRUE(csv.starts_with("task,round-1,round-2,round-3,round-4,round-5\n"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(Grid::from_json(grid.to_json()).to_csv(), csv);
  auto svg = grid_svg(grid);
  EXPECT_NE(svg.find(">3/3<"), std::string::npos);
}

TEST(Evaluation, SingleRepeatCellsAreOutOfOne) {
  auto grid = evaluate({{"round-5", golden().round_libraries.at(4)}}, 1);
  auto csv = grid.to_csv();
  EXPECT_NE(csv.find("/1\n"), std::string::npos);
  EXPECT_EQ(csv.find("/3"), std::string::npos);
  EXPECT_THROW(evaluate({{"x", data::SkillLibrary{}}}, 0), ConfigError);
}

TEST(Evaluation, RunsDoNotTouchEachOther) {
  auto llm_config = eval_llm();
  auto suite = load_suite("eval_suite");
  auto factory = [&] { return llm::make_backend(llm_config); };
  auto first = run_eval_task(suite[0], data::SkillLibrary{}, eval_config(), llm_config, factory);
  auto second = run_eval_task(suite[0], data::SkillLibrary{}, eval_config(), llm_config, factory);
  EXPECT_EQ(first.success, second.success);
  EXPECT_EQ(first.detail, second.detail);
}
