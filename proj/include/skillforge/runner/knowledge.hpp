#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillforge/data/skills.hpp"

namespace skillforge::runner {

struct KnowledgePoint {
  std::string id;
  std::string label;
  std::string family;  // "kubectl" or "prometheus"
  std::optional<int> acquired_round;
};

// True when a validated skill demonstrates the point. The rules are a fixed table keyed on
// skill kind and body text.
bool demonstrates(const std::string& point_id, const data::SkillEntry& entry);

class KnowledgeTracker {
 public:
  // Two kubectl points, three Prometheus points.
  KnowledgeTracker();

  // Marks every point the library now demonstrates. A point is acquired at most once.
  // Returns the ids newly acquired.
  std::vector<std::string> update(const data::SkillLibrary& library, int round);

  const std::vector<KnowledgePoint>& points() const { return points_; }
  nlohmann::json to_json() const;

 private:
  std::vector<KnowledgePoint> points_;
};

}  // namespace skillforge::runner
