#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace skillforge::data {

enum class TaskKind { observation, action };
enum class TaskOrigin { curriculum, evaluation };
enum class TaskStatus { pending, running, succeeded, failed };

std::string_view to_string(TaskKind kind);
std::string_view to_string(TaskOrigin origin);
std::string_view to_string(TaskStatus status);
std::optional<TaskKind> parse_task_kind(std::string_view text);
std::optional<TaskStatus> parse_task_status(std::string_view text);
std::optional<TaskOrigin> parse_task_origin(std::string_view text);

struct Task {
  std::string id;
  int round = 1;
  TaskKind kind = TaskKind::observation;
  int stage = 1;       // curriculum theme, 1..4
  int difficulty = 1;  // rank >= 1, fixed at generation
  std::string description;
  TaskOrigin origin = TaskOrigin::curriculum;
  TaskStatus status = TaskStatus::pending;

  bool operator==(const Task&) const = default;
};

nlohmann::json to_json(const Task& task);
Task task_from_json(const nlohmann::json& doc);

// Rounds drain in ascending order; FIFO within a round.
class TaskQueue {
 public:
  void enqueue(const std::vector<Task>& tasks);
  // Marks the returned task running.
  std::optional<Task> next();
  // Puts a task (typically an easier variant of a failed one) behind the pending tasks of
  // the round currently being drained.
  void requeue(Task task);
  std::vector<Task> pending() const;
  bool empty() const;

 private:
  std::map<int, std::deque<Task>> rounds_;
  std::optional<int> current_round_;
};

}  // namespace skillforge::data
