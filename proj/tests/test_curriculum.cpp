#include <gtest/gtest.h>

#include <random>

#include "skillforge/core/prompts.hpp"
#include "skillforge/curriculum/builder.hpp"
#include "support.hpp"

using namespace skillforge;
using namespace skillforge::curriculum;
using data::Task;
using data::TaskKind;
using data::TaskStatus;
using testkit::rec;

namespace {

data::RunningStateSnapshot quiet_state() {
  data::RunningStateSnapshot s;
  s.sim_time = 600;
  s.health.push_back({"sock-shop", "catalogue", 1, 1});
  return s;
}

Task task(std::string id, int stage, int difficulty, TaskStatus status, TaskKind kind = TaskKind::observation) {
  Task t;
  t.id = std::move(id);
  t.stage = stage;
  t.difficulty = difficulty;
  t.status = status;
  t.kind = kind;
  t.description = "task " + t.id;
  return t;
}

std::string block(int n, const std::string& description, const std::string& kind, int stage, int difficulty) {
  return "### Task " + std::to_string(n) + "\ndescription: " + description + "\nkind: " + kind +
         "\nstage: " + std::to_string(stage) + "\ndifficulty: " + std::to_string(difficulty) + "\n\n";
}

std::string three_observations() {
  return block(1, "a", "observation", 1, 1) + block(2, "b", "observation", 1, 2) + block(3, "c", "observation", 2, 1);
}

}  // namespace

TEST(BuildContext, EmptyHistoryIsMarked) {
  auto text = build_context(quiet_state(), {});
  EXPECT_NE(text.find("## System running state\n"), std::string::npos);
  EXPECT_NE(text.find("deployment sock-shop/catalogue: ok (1/1 ready)"), std::string::npos);
  EXPECT_NE(text.find("no prior interactions"), std::string::npos);
  EXPECT_EQ(text.find("## Other resources"), std::string::npos);
}

TEST(BuildContext, FailedTaskFeedbackAppearsVerbatim) {
  data::History h;
  const std::string feedback =
      "{\"status\":\"error\",\"errorType\":\"bad_data\",\"error\":\"invalid parameter \\\"query\\\": "
      "unescaped character '{' in URL at offset 6\"}\ncurl: (22) The requested URL returned error: 400";
  data::InteractionRecord r;
  r.task_id = "r4-t3";
  r.actor = "environment";
  r.payload = feedback;
  r.payload_kind = data::PayloadKind::feedback;
  r.feedback_kind = data::FeedbackKind::environment;
  r.target = "s1";
  h.append(r);
  auto failed = task("r4-t3", 4, 2, TaskStatus::failed);
  failed.description = "Report the 95th percentile latency of the catalogue service from Prometheus.";
  auto text = build_context(quiet_state(), summarize({failed}, h));
  EXPECT_NE(text.find(feedback), std::string::npos);
  EXPECT_NE(text.find("failed: Report the 95th percentile latency"), std::string::npos);
  EXPECT_EQ(text.find("no prior interactions"), std::string::npos);
}

TEST(BuildContext, ExtrasGoUnderOtherResources) {
  auto text = build_context(quiet_state(), {}, {"catalogue serves the product list on port 80"});
  auto heading = text.find("## Other resources\n");
  ASSERT_NE(heading, std::string::npos);
  EXPECT_GT(text.find("catalogue serves the product list on port 80"), heading);
  EXPECT_GT(heading, text.find("## Interaction history"));
}

TEST(BuildContext, TruncationDropsOldestSummariesFirst) {
  std::vector<TaskSummary> hist;
  for (int i = 1; i <= 40; ++i) {
    auto t = task("r" + std::to_string(i) + "-t1", 1, 1, TaskStatus::succeeded);
    t.description = "marker-" + std::to_string(i) + " " + std::string(80, 'x');
    hist.push_back({t, ""});
  }
  auto full = build_context(quiet_state(), hist, {}, 1'000'000);
  EXPECT_NE(full.find("marker-1 "), std::string::npos);
  auto capped = build_context(quiet_state(), hist, {"extra doc"}, 2000);
  EXPECT_LE(capped.size(), 2000u);
  EXPECT_EQ(capped.find("marker-1 "), std::string::npos);
  EXPECT_NE(capped.find("marker-40 "), std::string::npos);
  EXPECT_NE(capped.find("extra doc"), std::string::npos);
  EXPECT_NE(capped.find("earlier tasks omitted"), std::string::npos);
  // Whatever survives is a suffix of the history.
  auto first_kept = capped.find("marker-");
  int kept_from = std::stoi(capped.substr(first_kept + 7));
  for (int i = kept_from; i <= 40; ++i) {
    EXPECT_NE(capped.find("marker-" + std::to_string(i) + " "), std::string::npos) << i;
  }
}

TEST(BuildContext, IsPure) {
  std::vector<TaskSummary> hist{{task("r1-t1", 1, 1, TaskStatus::succeeded), "fine"}};
  EXPECT_EQ(build_context(quiet_state(), hist, {"x"}), build_context(quiet_state(), hist, {"x"}));
  auto env = testkit::fixture_env();
  env.tick(600);
  EXPECT_EQ(build_context(data::snapshot(env), hist), build_context(data::snapshot(env), hist));
}

TEST(ParseRound, ReadsLabeledBlocks) {
  auto parsed = parse_round(three_observations(), 2, 3, false);
  ASSERT_TRUE(parsed.issues.empty()) << parsed.issues.front();
  ASSERT_EQ(parsed.tasks.size(), 3u);
  EXPECT_EQ(parsed.tasks[0].id, "r2-t1");
  EXPECT_EQ(parsed.tasks[1].difficulty, 2);
  EXPECT_EQ(parsed.tasks[2].stage, 2);
  for (const auto& t : parsed.tasks) {
    EXPECT_EQ(t.round, 2);
    EXPECT_EQ(t.status, TaskStatus::pending);
  }
}

TEST(ParseRound, RejectsDeviations) {
  EXPECT_FALSE(parse_round("no blocks at all", 1, 3, false).issues.empty());
  EXPECT_FALSE(parse_round(block(1, "a", "observation", 1, 1), 1, 3, false).issues.empty());
  EXPECT_FALSE(parse_round(block(1, "", "observation", 1, 1), 1, 1, false).issues.empty());
  EXPECT_FALSE(parse_round(block(1, "a", "poke", 1, 1), 1, 1, false).issues.empty());
  EXPECT_FALSE(parse_round(block(1, "a", "observation", 5, 1), 1, 1, false).issues.empty());
  EXPECT_FALSE(parse_round(block(1, "a", "observation", 1, 0), 1, 1, false).issues.empty());
  EXPECT_TRUE(parse_round(block(1, "a", "action", 1, 1), 1, 1, false).issues.empty());
  EXPECT_FALSE(parse_round(block(1, "a", "action", 1, 1), 1, 1, true).issues.empty());
}

TEST(Progression, SuccessAllowsHarderSameTheme) {
  EXPECT_TRUE(difficulty_progression_check({task("p", 1, 2, TaskStatus::succeeded)},
                                           {task("n", 1, 3, TaskStatus::pending)})
                  .ok());
}

TEST(Progression, FailureForbidsHarderSameTheme) {
  auto report =
      difficulty_progression_check({task("p", 3, 3, TaskStatus::failed)}, {task("n", 3, 4, TaskStatus::pending)});
  ASSERT_FALSE(report.ok());
  EXPECT_NE(report.violations[0].find("n:"), std::string::npos);
}

TEST(Progression, FailureAllowsAlternativeTheme) {
  EXPECT_TRUE(difficulty_progression_check({task("p", 3, 3, TaskStatus::failed)},
                                           {task("n", 1, 1, TaskStatus::pending)})
                  .ok());
}

TEST(Progression, FailureAllowsEasierOrEqualSameTheme) {
  for (int d : {1, 2, 3}) {
    EXPECT_TRUE(difficulty_progression_check({task("p", 4, 3, TaskStatus::failed)},
                                             {task("n", 4, d, TaskStatus::pending)})
                    .ok())
        << d;
  }
}

TEST(Progression, SuccessForbidsEasierSameTheme) {
  EXPECT_FALSE(difficulty_progression_check({task("p", 2, 3, TaskStatus::succeeded)},
                                            {task("n", 2, 1, TaskStatus::pending)})
                   .ok());
}

TEST(Progression, PropertyMatchesTheRule) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> stage(1, 4), diff(1, 5), coin(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Task> prev, next;
    for (int i = 0; i < 3; ++i) {
      prev.push_back(task("p" + std::to_string(i), stage(rng), diff(rng),
                          coin(rng) ? TaskStatus::succeeded : TaskStatus::failed));
      next.push_back(task("n" + std::to_string(i), stage(rng), diff(rng), TaskStatus::pending));
    }
    bool expect_ok = true;
    for (const auto& n : next) {
      std::optional<int> min_fail, max_ok;
      for (const auto& p : prev) {
        if (p.stage != n.stage) continue;
        if (p.status == TaskStatus::failed) min_fail = std::min(min_fail.value_or(99), p.difficulty);
        if (p.status == TaskStatus::succeeded) max_ok = std::max(max_ok.value_or(0), p.difficulty);
      }
      if (min_fail) {
        expect_ok = expect_ok && n.difficulty <= *min_fail;
      } else if (max_ok) {
        expect_ok = expect_ok && n.difficulty >= *max_ok;
      }
    }
    EXPECT_EQ(difficulty_progression_check(prev, next).ok(), expect_ok) << trial;
  }
}

TEST(GenerateRound, GoldenRoundOneStartsWithBasicFacts) {
  data::History h;
  llm::LlmConfig cfg = llm::LlmConfig::defaults();
  cfg.script_path = "golden_trial";
  llm::Gateway gw(cfg, llm::make_backend(cfg), &h);
  CurriculumBuilder builder(gw, h, {});
  auto tasks = builder.generate_round(build_context(quiet_state(), {}), 1, {}, 0);
  ASSERT_EQ(tasks.size(), 3u);
  for (const auto& t : tasks) {
    EXPECT_EQ(t.kind, TaskKind::observation);
    EXPECT_FALSE(t.description.empty());
  }
  EXPECT_EQ(tasks[0].stage, 1);
  EXPECT_NE(text::to_lower(tasks[0].description).find("image version"), std::string::npos);
  // The prompt carries the staged directive.
  const auto& prompt = h.records().front();
  EXPECT_EQ(prompt.payload_kind, data::PayloadKind::prompt);
  EXPECT_NE(prompt.payload.find(prompts::render("observation_stages")), std::string::npos);
}

TEST(GenerateRound, FailedPrometheusTaskLeadsToSettingsSubtask) {
  data::History h;
  llm::LlmConfig cfg = llm::LlmConfig::defaults();
  cfg.script_path = "golden_trial";
  llm::Gateway gw(cfg, llm::make_backend(cfg), &h);
  CurriculumBuilder builder(gw, h, {});
  auto failed = task("r4-t3", 4, 2, TaskStatus::failed);
  failed.description = "Report the 95th percentile latency of the catalogue service from Prometheus.";
  auto tasks = builder.generate_round(build_context(quiet_state(), {{failed, "no histogram"}}), 5, {failed}, 0);
  ASSERT_EQ(tasks.size(), 3u);
  EXPECT_NE(tasks[0].description.find("Prometheus settings"), std::string::npos);
  EXPECT_EQ(tasks[0].stage, 4);
  EXPECT_LE(tasks[0].difficulty, 2);
}

TEST(GenerateRound, ObservationModeRegeneratesActionRounds) {
  data::History h;
  auto gw = testkit::scripted_gateway(
      nlohmann::json::array(
          {rec("curriculum", {"ROUND 1\n"},
               block(1, "a", "observation", 1, 1) + block(2, "scale it", "action", 2, 1) +
                   block(3, "c", "observation", 1, 1)),
           rec("curriculum", {"action tasks are not allowed in observation-only mode"}, three_observations())}),
      &h);
  CurriculumBuilder builder(gw, h, {3, true, 2});
  auto tasks = builder.generate_round("ctx", 1, {}, 0);
  ASSERT_EQ(tasks.size(), 3u);
  for (const auto& t : tasks) EXPECT_EQ(t.kind, TaskKind::observation);
  EXPECT_EQ(testkit::count_events(h, "round_rejected"), 1u);
  EXPECT_EQ(gw.ledger().entries().size(), 2u);
}

TEST(GenerateRound, GivesUpAfterTwoReasks) {
  data::History h;
  auto gw = testkit::scripted_gateway(nlohmann::json::array({rec("curriculum", {}, "I would rather not.", true)}), &h);
  CurriculumBuilder builder(gw, h, {});
  EXPECT_THROW(builder.generate_round("ctx", 1, {}, 0), RoundGenerationFailed);
  EXPECT_EQ(gw.ledger().entries().size(), 3u);  // the first ask plus two re-asks
}

TEST(GenerateRound, ProgressionViolationIsFedBackOnce) {
  data::History h;
  const std::vector<Task> prev{task("r1-t1", 1, 2, TaskStatus::failed)};
  const std::string too_hard =
      block(1, "hard", "observation", 1, 4) + block(2, "b", "observation", 2, 1) + block(3, "c", "observation", 3, 1);
  auto gw = testkit::scripted_gateway(
      nlohmann::json::array({rec("curriculum", {"ROUND 2\n"}, too_hard),
                             rec("curriculum", {"is too hard"}, three_observations())}),
      &h);
  CurriculumBuilder builder(gw, h, {});
  auto tasks = builder.generate_round("ctx", 2, prev, 0);
  EXPECT_EQ(tasks[0].difficulty, 1);
  EXPECT_EQ(testkit::count_events(h, "progression_violation"), 1u);

  // A second violation is logged and accepted rather than looping.
  data::History h2;
  auto stubborn = testkit::scripted_gateway(nlohmann::json::array({rec("curriculum", {}, too_hard, true)}), &h2);
  CurriculumBuilder b2(stubborn, h2, {});
  EXPECT_EQ(b2.generate_round("ctx", 2, prev, 0)[0].difficulty, 4);
  EXPECT_EQ(testkit::count_events(h2, "progression_violation"), 2u);
}

TEST(GenerateRound, RejectsZeroTasksPerRound) {
  data::History h;
  auto gw = testkit::scripted_gateway(nlohmann::json::array(), &h);
  CurriculumBuilder builder(gw, h, {0, false, 2});
  EXPECT_THROW(builder.generate_round("ctx", 1, {}, 0), InvalidArgument);
}
