#include "skillforge/data/task.hpp"

#include "skillforge/core/error.hpp"

namespace skillforge::data {

std::string_view to_string(TaskKind kind) { return kind == TaskKind::observation ? "observation" : "action"; }

std::string_view to_string(TaskOrigin origin) {
  return origin == TaskOrigin::curriculum ? "curriculum" : "evaluation";
}

std::string_view to_string(TaskStatus status) {
  switch (status) {
    case TaskStatus::pending: return "pending";
    case TaskStatus::running: return "running";
    case TaskStatus::succeeded: return "succeeded";
    case TaskStatus::failed: return "failed";
  }
  return "pending";
}

std::optional<TaskKind> parse_task_kind(std::string_view text) {
  if (text == "observation") return TaskKind::observation;
  if (text == "action") return TaskKind::action;
  return std::nullopt;
}

std::optional<TaskStatus> parse_task_status(std::string_view text) {
  for (auto s : {TaskStatus::pending, TaskStatus::running, TaskStatus::succeeded, TaskStatus::failed}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<TaskOrigin> parse_task_origin(std::string_view text) {
  if (text == "curriculum") return TaskOrigin::curriculum;
  if (text == "evaluation") return TaskOrigin::evaluation;
  return std::nullopt;
}

nlohmann::json to_json(const Task& t) {
  return {{"id", t.id},
          {"round", t.round},
          {"kind", to_string(t.kind)},
          {"stage", t.stage},
          {"difficulty", t.difficulty},
          {"description", t.description},
          {"origin", to_string(t.origin)},
          {"status", to_string(t.status)}};
}

Task task_from_json(const nlohmann::json& doc) {
  Task t;
  t.id = doc.at("id").get<std::string>();
  t.round = doc.at("round").get<int>();
  auto kind = parse_task_kind(doc.at("kind").get<std::string>());
  auto origin = parse_task_origin(doc.at("origin").get<std::string>());
  auto status = parse_task_status(doc.at("status").get<std::string>());
  if (!kind || !origin || !status) throw InvalidArgument("task " + t.id + ": bad enum value");
  t.kind = *kind;
  t.origin = *origin;
  t.status = *status;
  t.stage = doc.at("stage").get<int>();
  t.difficulty = doc.at("difficulty").get<int>();
  t.description = doc.at("description").get<std::string>();
  return t;
}

void TaskQueue::enqueue(const std::vector<Task>& tasks) {
  for (const auto& t : tasks) rounds_[t.round].push_back(t);
}

std::optional<Task> TaskQueue::next() {
  while (!rounds_.empty() && rounds_.begin()->second.empty()) rounds_.erase(rounds_.begin());
  if (rounds_.empty()) return std::nullopt;
  auto& [round, tasks] = *rounds_.begin();
  Task t = tasks.front();
  tasks.pop_front();
  current_round_ = round;
  t.status = TaskStatus::running;
  return t;
}

void TaskQueue::requeue(Task task) {
  task.status = TaskStatus::pending;
  int round = current_round_.value_or(task.round);
  rounds_[round].push_back(std::move(task));
}

std::vector<Task> TaskQueue::pending() const {
  std::vector<Task> out;
  for (const auto& [round, tasks] : rounds_) out.insert(out.end(), tasks.begin(), tasks.end());
  return out;
}

bool TaskQueue::empty() const {
  for (const auto& [round, tasks] : rounds_) {
    if (!tasks.empty()) return false;
  }
  return true;
}

}  // namespace skillforge::data
