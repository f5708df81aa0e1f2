#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "skillforge/metrics/store.hpp"
#include "skillforge/sim/cluster.hpp"

namespace skillforge::sim {

// Scrape and traffic resolution: one sample per series every 15 simulated seconds.
inline constexpr std::int64_t kScrapeInterval = 15;

enum class MutationAction { scale, set_resources, kill_pod, set_label, set_probe };

struct Mutation {
  MutationAction action = MutationAction::scale;
  std::string ns;
  std::string target;  // deployment name, or pod name for kill_pod
  std::map<std::string, std::string> args;
};

struct MutationRecord {
  std::int64_t sim_time = 0;
  Mutation mutation;
};

std::string_view to_string(MutationAction action);
MutationAction parse_mutation_action(std::string_view name);
nlohmann::json to_json(const MutationRecord& record);
MutationRecord mutation_record_from_json(const nlohmann::json& doc);

// The simulated cluster plus the metrics it exports. Copyable: a copy is an
// independent snapshot clone.
class Environment {
 public:
  explicit Environment(ClusterState state);

  const ClusterState& state() const { return state_; }
  const metrics::Store& metrics() const { return store_; }
  std::int64_t now() const { return state_.sim_time; }
  std::string digest() const { return state_digest(state_); }
  const std::vector<MutationRecord>& mutation_log() const { return log_; }

  // Advances the clock; every crossed 15 s boundary runs one traffic step and scrape.
  // Throws InvalidArgument when dt <= 0.
  void tick(std::int64_t dt);

  // Applies an action. Returns whether any field changed; a record is logged only then.
  // Throws NotFound for a missing target and InvalidArgument for bad arguments.
  bool mutate(const Mutation& mutation);

  // Test and evaluation setup knobs; not audited as mutations.
  void set_traffic(const std::string& ns, const std::string& deployment, TrafficProfile profile);
  void set_metrics_available(bool available) { state_.metrics_available = available; }

 private:
  void step(std::int64_t t, bool advance);
  void refresh_readiness();
  Pod make_pod(const Deployment& d, std::string suffix);
  std::string next_suffix(const Deployment& d);

  ClusterState state_;
  metrics::Store store_;
  std::vector<MutationRecord> log_;
};

}  // namespace skillforge::sim
