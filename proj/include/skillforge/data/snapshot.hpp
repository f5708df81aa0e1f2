#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillforge/sim/environment.hpp"

namespace skillforge::data {

struct DeploymentHealth {
  std::string ns;
  std::string name;
  int ready = 0;
  int desired = 0;
  bool ok() const { return ready >= desired; }
};

struct RunningStateSnapshot {
  std::int64_t sim_time = 0;
  std::vector<DeploymentHealth> health;
  std::map<std::string, double> requests_per_sec;  // by job, over the last 5 minutes
  std::vector<std::string> anomalies;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Pure function of the cluster state and its metrics.
RunningStateSnapshot snapshot(const sim::Environment& env);

}  // namespace skillforge::data
