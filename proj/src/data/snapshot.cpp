#include "skillforge/data/snapshot.hpp"

#include <cstdio>

#include "skillforge/core/text.hpp"
#include "skillforge/metrics/promql.hpp"

namespace skillforge::data {

RunningStateSnapshot snapshot(const sim::Environment& env) {
  RunningStateSnapshot s;
  const auto& state = env.state();
  s.sim_time = state.sim_time;
  for (const auto& d : state.deployments) {
    DeploymentHealth h{d.ns, d.name, 0, d.replicas};
    for (const auto* p : state.pods_of(d)) h.ready += p->ready ? 1 : 0;
    if (!h.ok()) {
      s.anomalies.push_back("deployment " + d.ns + "/" + d.name + " has " + std::to_string(h.ready) + "/" +
                            std::to_string(h.desired) + " ready pods");
    }
    s.health.push_back(h);
  }
  const auto at = static_cast<double>(state.sim_time);
  for (const auto& e : metrics::eval("sum by (job) (rate(http_requests_total[5m]))", env.metrics(), at).entries) {
    s.requests_per_sec[e.labels.at("job")] = e.value;
  }
  for (const auto& e :
       metrics::eval("sum by (job) (rate(http_requests_total{status=~\"5..\"}[5m]))", env.metrics(), at).entries) {
    if (e.value > 0) s.anomalies.push_back("job " + e.labels.at("job") + " is serving 5xx responses");
  }
  if (!state.metrics_available) s.anomalies.push_back("resource metrics API is unavailable");
  return s;
}

nlohmann::json RunningStateSnapshot::to_json() const {
  nlohmann::json health_doc = nlohmann::json::array();
  for (const auto& h : health) {
    health_doc.push_back({{"namespace", h.ns},
                          {"deployment", h.name},
                          {"ready", h.ready},
                          {"desired", h.desired},
                          {"status", h.ok() ? "ok" : "degraded"}});
  }
  return {{"sim_time", sim_time}, {"health", health_doc}, {"requests_per_sec", requests_per_sec},
          {"anomalies", anomalies}};
}

std::string RunningStateSnapshot::to_text() const {
  std::string out = "sim_time: " + std::to_string(sim_time) + "s\n";
  for (const auto& h : health) {
    out += "deployment " + h.ns + "/" + h.name + ": " + (h.ok() ? "ok" : "degraded") + " (" +
           std::to_string(h.ready) + "/" + std::to_string(h.desired) + " ready)\n";
  }
  if (requests_per_sec.empty()) out += "traffic: no request traffic observed\n";
  for (const auto& [job, rps] : requests_per_sec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", rps);
    out += "traffic " + job + ": " + buf + " req/s\n";
  }
  out += anomalies.empty() ? "anomalies: none\n" : "anomalies:\n";
  for (const auto& a : anomalies) out += "- " + a + "\n";
  return out;
}

}  // namespace skillforge::data
