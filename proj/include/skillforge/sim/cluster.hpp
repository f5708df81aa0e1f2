#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace skillforge::sim {

struct ResourceSpec {
  std::int64_t cpu_request_m = 0;
  std::int64_t cpu_limit_m = 0;
  std::int64_t mem_request = 0;  // bytes
  std::int64_t mem_limit = 0;
};

enum class ProbeKind { liveness, readiness };

struct ProbeSpec {
  ProbeKind kind = ProbeKind::liveness;
  std::string http_path;
  int port = 80;
  int initial_delay = 0;  // seconds
  int timeout = 1;
  int period = 10;
  int success_threshold = 1;
  int failure_threshold = 3;
};

struct LatencyBucket {
  double le = 0;
  double cumulative_fraction = 0;
};

// Per-deployment load model. A zero request rate emits no request series at all.
struct TrafficProfile {
  double requests_per_sec = 0;
  double error_4xx = 0;  // fraction of requests
  double error_5xx = 0;
  double mean_latency_seconds = 0;
  std::vector<LatencyBucket> latency;  // ascending le; +Inf is implicit
  double request_jitter = 0.1;         // relative spread of per-step request counts
  std::int64_t base_cpu_m = 1;
  double cpu_per_rps_m = 0;
  double cpu_jitter_m = 0;
  std::int64_t base_mem = 0;
  double mem_per_rps = 0;
  std::int64_t mem_jitter = 0;  // uniform [0, jitter) bytes added on top
};

struct Deployment {
  std::string name;
  std::string ns;
  std::map<std::string, std::string> labels;
  std::string image;
  std::string command;
  std::vector<std::string> args;
  int port = 80;
  ResourceSpec resources;
  std::vector<ProbeSpec> probes;
  int replicas = 1;
  std::string pod_template_hash;
  std::string app_health_path = "/health";
  TrafficProfile traffic;
};

// Cumulative counters a pod exports.
struct PodCounters {
  std::map<std::string, double> requests_by_status;
  double duration_sum = 0;
  double duration_count = 0;
  std::vector<double> bucket_counts;  // one per latency bucket, then +Inf
  double cpu_seconds = 0;
};

struct Pod {
  std::string name;
  std::string ns;
  std::string deployment;
  std::int64_t created_at = 0;
  int restarts = 0;
  bool ready = true;
  std::int64_t cpu_m = 0;
  std::int64_t mem_bytes = 0;
  PodCounters counters;
};

struct ClusterState {
  std::set<std::string> namespaces;
  std::vector<Deployment> deployments;
  std::vector<Pod> pods;
  std::int64_t sim_time = 0;
  std::uint64_t rng_seed = 0;
  bool metrics_available = true;
  std::uint64_t pod_sequence = 0;

  const Deployment* find_deployment(std::string_view ns, std::string_view name) const;
  Deployment* find_deployment(std::string_view ns, std::string_view name);
  const Pod* find_pod(std::string_view ns, std::string_view name) const;
  std::vector<const Pod*> pods_of(const Deployment& d) const;
};

// Canonical hash of every field except sim_time, as 16 hex digits.
std::string state_digest(const ClusterState& state);
nlohmann::json to_json(const ClusterState& state);

// Validates against the topology schema; throws LoadError naming the offending path.
ClusterState load_topology(const nlohmann::json& doc, std::uint64_t seed = 0);
ClusterState load_topology_text(std::string_view text, std::uint64_t seed = 0);
// `name_or_path` is either a bundled fixture name ("sock-shop") or a file path.
ClusterState load_topology_source(const std::string& name_or_path, std::uint64_t seed = 0);

TrafficProfile parse_traffic_profile(const nlohmann::json& doc, const std::string& path);

std::string_view to_string(ProbeKind kind);

}  // namespace skillforge::sim
