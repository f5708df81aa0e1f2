#include "skillforge/sim/environment.hpp"

#include <algorithm>
#include <cmath>

#include "skillforge/core/error.hpp"
#include "skillforge/core/quantity.hpp"
#include "skillforge/core/text.hpp"

namespace skillforge::sim {
namespace {

constexpr std::string_view kSuffixAlphabet = "bcdfghjklmnpqrstvwxz2456789";

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Counter-based stream: the draw for (seed, time, key) never depends on call order.
class StepRng {
 public:
  StepRng(std::uint64_t seed, std::int64_t t, std::string_view key)
      : state_(seed ^ (static_cast<std::uint64_t>(t) * 0xD1B54A32D192ED03ULL) ^ hash_str(key)) {}
  double uniform() { return static_cast<double>(splitmix(state_) >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

std::int64_t clamp_i64(double v, std::int64_t hi) {
  auto r = static_cast<std::int64_t>(std::llround(v));
  if (r < 0) r = 0;
  if (hi > 0 && r > hi) r = hi;
  return r;
}

const std::string& required_arg(const Mutation& m, const std::string& key) {
  auto it = m.args.find(key);
  if (it == m.args.end() || it->second.empty()) {
    throw InvalidArgument(std::string(to_string(m.action)) + " requires argument \"" + key + "\"");
  }
  return it->second;
}

int int_arg(const std::string& value, const std::string& key, int min_value) {
  auto v = text::parse_int(value);
  if (!v) throw InvalidArgument("argument \"" + key + "\" must be an integer, got \"" + value + "\"");
  if (*v < min_value) {
    throw InvalidArgument("argument \"" + key + "\": invalid value " + value +
                          ": must be greater than or equal to " + std::to_string(min_value));
  }
  return static_cast<int>(*v);
}

}  // namespace

std::string_view to_string(MutationAction action) {
  switch (action) {
    case MutationAction::scale: return "scale";
    case MutationAction::set_resources: return "set_resources";
    case MutationAction::kill_pod: return "kill_pod";
    case MutationAction::set_label: return "set_label";
    case MutationAction::set_probe: return "set_probe";
  }
  return "unknown";
}

MutationAction parse_mutation_action(std::string_view name) {
  for (auto a : {MutationAction::scale, MutationAction::set_resources, MutationAction::kill_pod,
                 MutationAction::set_label, MutationAction::set_probe}) {
    if (to_string(a) == name) return a;
  }
  throw InvalidArgument("unknown mutation action \"" + std::string(name) + "\"");
}

nlohmann::json to_json(const MutationRecord& r) {
  return {{"sim_time", r.sim_time},
          {"action", to_string(r.mutation.action)},
          {"namespace", r.mutation.ns},
          {"target", r.mutation.target},
          {"args", r.mutation.args}};
}

MutationRecord mutation_record_from_json(const nlohmann::json& doc) {
  MutationRecord r;
  r.sim_time = doc.at("sim_time").get<std::int64_t>();
  r.mutation.action = parse_mutation_action(doc.at("action").get<std::string>());
  r.mutation.ns = doc.at("namespace").get<std::string>();
  r.mutation.target = doc.at("target").get<std::string>();
  r.mutation.args = doc.at("args").get<std::map<std::string, std::string>>();
  return r;
}

Environment::Environment(ClusterState state) : state_(std::move(state)) {
  refresh_readiness();
  step(state_.sim_time, false);
}

void Environment::tick(std::int64_t dt) {
  if (dt <= 0) throw InvalidArgument("tick requires dt > 0, got " + std::to_string(dt));
  const std::int64_t end = state_.sim_time + dt;
  std::int64_t next = (state_.sim_time / kScrapeInterval + 1) * kScrapeInterval;
  for (; next <= end; next += kScrapeInterval) {
    state_.sim_time = next;
    step(next, true);
  }
  state_.sim_time = end;
}

void Environment::refresh_readiness() {
  for (auto& pod : state_.pods) {
    const Deployment* d = state_.find_deployment(pod.ns, pod.deployment);
    pod.ready = std::all_of(d->probes.begin(), d->probes.end(), [&](const ProbeSpec& p) {
      return p.http_path == d->app_health_path && p.port == d->port;
    });
  }
}

void Environment::step(std::int64_t t, bool advance) {
  for (const auto& d : state_.deployments) {
    const TrafficProfile& tp = d.traffic;
    int ready = 0;
    for (const auto& p : state_.pods) {
      if (p.ns == d.ns && p.deployment == d.name && p.ready) ++ready;
    }
    const std::string job = d.ns + "/" + d.name;
    for (auto& pod : state_.pods) {
      if (pod.ns != d.ns || pod.deployment != d.name) continue;
      const double pod_rps = pod.ready && ready > 0 ? tp.requests_per_sec / ready : 0.0;
      if (advance) {
        StepRng rng(state_.rng_seed, t, pod.name);
        const double u_req = rng.uniform();
        const double u_cpu = rng.uniform();
        const double u_mem = rng.uniform();
        auto& c = pod.counters;
        if (tp.requests_per_sec > 0 && pod.ready) {
          double expected = pod_rps * static_cast<double>(kScrapeInterval);
          double n = std::max(0.0, std::round(expected * (1 + tp.request_jitter * (2 * u_req - 1))));
          double n5 = std::round(n * tp.error_5xx);
          double n4 = std::round(n * tp.error_4xx);
          double n2 = std::max(0.0, n - n4 - n5);
          c.requests_by_status["200"] += n2;
          if (tp.error_4xx > 0) c.requests_by_status["404"] += n4;
          if (tp.error_5xx > 0) c.requests_by_status["500"] += n5;
          c.duration_sum += n * tp.mean_latency_seconds;
          c.duration_count += n;
          c.bucket_counts.resize(tp.latency.size() + 1, 0.0);
          for (size_t i = 0; i < tp.latency.size(); ++i) {
            c.bucket_counts[i] += std::round(n * tp.latency[i].cumulative_fraction);
          }
          c.bucket_counts.back() += n;
        }
        pod.cpu_m = clamp_i64(static_cast<double>(tp.base_cpu_m) + pod_rps * tp.cpu_per_rps_m +
                                  tp.cpu_jitter_m * (2 * u_cpu - 1),
                              d.resources.cpu_limit_m);
        pod.mem_bytes = clamp_i64(static_cast<double>(tp.base_mem) + pod_rps * tp.mem_per_rps +
                                      std::floor(u_mem * static_cast<double>(tp.mem_jitter)),
                                  d.resources.mem_limit);
        c.cpu_seconds += static_cast<double>(pod.cpu_m) / 1000.0 * static_cast<double>(kScrapeInterval);
      }

      const auto ts = static_cast<double>(t);
      metrics::Labels base{{"job", job}, {"instance", pod.name}};
      auto emit = [&](const std::string& name, metrics::Labels labels, double value) {
        store_.ingest({{name, std::move(labels)}, ts, value});
      };
      emit("up", base, 1.0);
      emit("process_cpu_seconds_total", base, pod.counters.cpu_seconds);
      emit("process_resident_memory_bytes", base, static_cast<double>(pod.mem_bytes));
      const auto& c = pod.counters;
      if (c.requests_by_status.empty()) continue;
      for (const auto& [status, count] : c.requests_by_status) {
        auto labels = base;
        labels["method"] = "get";
        labels["status"] = status;
        emit("http_requests_total", labels, count);
      }
      emit("http_request_duration_seconds_sum", base, c.duration_sum);
      emit("http_request_duration_seconds_count", base, c.duration_count);
      for (size_t i = 0; i < c.bucket_counts.size(); ++i) {
        auto labels = base;
        labels["le"] = i < tp.latency.size() ? text::format_double(tp.latency[i].le) : "+Inf";
        emit("request_duration_seconds_bucket", labels, c.bucket_counts[i]);
      }
    }
  }
}

std::string Environment::next_suffix(const Deployment& d) {
  while (true) {
    std::uint64_t s = state_.rng_seed ^ hash_str(d.ns + "/" + d.name) ^
                      (state_.pod_sequence * 0x9E3779B97F4A7C15ULL);
    ++state_.pod_sequence;
    std::uint64_t h = splitmix(s);
    std::string suffix;
    for (int i = 0; i < 5; ++i) {
      suffix.push_back(kSuffixAlphabet[h % kSuffixAlphabet.size()]);
      h /= kSuffixAlphabet.size();
    }
    std::string name = d.name + "-" + d.pod_template_hash + "-" + suffix;
    bool taken = std::any_of(state_.pods.begin(), state_.pods.end(),
                             [&](const Pod& p) { return p.name == name; });
    if (!taken) return suffix;
  }
}

Pod Environment::make_pod(const Deployment& d, std::string suffix) {
  Pod p;
  p.name = d.name + "-" + d.pod_template_hash + "-" + suffix;
  p.ns = d.ns;
  p.deployment = d.name;
  p.created_at = state_.sim_time;
  p.cpu_m = clamp_i64(static_cast<double>(d.traffic.base_cpu_m), d.resources.cpu_limit_m);
  p.mem_bytes = clamp_i64(static_cast<double>(d.traffic.base_mem), d.resources.mem_limit);
  return p;
}

void Environment::set_traffic(const std::string& ns, const std::string& deployment,
                              TrafficProfile profile) {
  Deployment* d = state_.find_deployment(ns, deployment);
  if (!d) throw NotFound("deployments.apps \"" + deployment + "\" not found");
  d->traffic = std::move(profile);
}

bool Environment::mutate(const Mutation& m) {
  if (!state_.namespaces.count(m.ns)) throw NotFound("namespaces \"" + m.ns + "\" not found");
  const std::string before = digest();

  auto deployment = [&]() -> Deployment& {
    Deployment* d = state_.find_deployment(m.ns, m.target);
    if (!d) throw NotFound("deployments.apps \"" + m.target + "\" not found");
    return *d;
  };

  switch (m.action) {
    case MutationAction::scale: {
      Deployment& d = deployment();
      int replicas = int_arg(required_arg(m, "replicas"), "replicas", 0);
      d.replicas = replicas;
      int current = static_cast<int>(state_.pods_of(d).size());
      for (; current < replicas; ++current) {
        state_.pods.push_back(make_pod(d, next_suffix(d)));
      }
      for (; current > replicas; --current) {
        for (auto it = state_.pods.rbegin(); it != state_.pods.rend(); ++it) {
          if (it->ns == d.ns && it->deployment == d.name) {
            state_.pods.erase(std::next(it).base());
            break;
          }
        }
      }
      break;
    }
    case MutationAction::set_resources: {
      Deployment& d = deployment();
      ResourceSpec r = d.resources;
      for (const auto& [key, value] : m.args) {
        if (key == "cpu_request") r.cpu_request_m = quantity::parse_cpu_millis(value);
        else if (key == "cpu_limit") r.cpu_limit_m = quantity::parse_cpu_millis(value);
        else if (key == "mem_request") r.mem_request = quantity::parse_memory_bytes(value);
        else if (key == "mem_limit") r.mem_limit = quantity::parse_memory_bytes(value);
        else throw InvalidArgument("set_resources: unknown argument \"" + key + "\"");
      }
      if (m.args.empty()) throw InvalidArgument("set_resources requires at least one quantity");
      if (r.cpu_request_m > r.cpu_limit_m) throw InvalidArgument("cpu request must be less than or equal to cpu limit");
      if (r.mem_request > r.mem_limit) throw InvalidArgument("memory request must be less than or equal to memory limit");
      d.resources = r;
      for (auto& p : state_.pods) {
        if (p.ns == d.ns && p.deployment == d.name) {
          p.cpu_m = std::min(p.cpu_m, r.cpu_limit_m);
          p.mem_bytes = std::min(p.mem_bytes, r.mem_limit);
        }
      }
      break;
    }
    case MutationAction::kill_pod: {
      auto it = std::find_if(state_.pods.begin(), state_.pods.end(),
                             [&](const Pod& p) { return p.ns == m.ns && p.name == m.target; });
      if (it == state_.pods.end()) throw NotFound("pods \"" + m.target + "\" not found");
      std::string owner = it->deployment;
      state_.pods.erase(it);
      const Deployment* d = state_.find_deployment(m.ns, owner);
      if (static_cast<int>(state_.pods_of(*d).size()) < d->replicas) {
        state_.pods.push_back(make_pod(*d, next_suffix(*d)));
      }
      break;
    }
    case MutationAction::set_label: {
      Deployment& d = deployment();
      const std::string& key = required_arg(m, "key");
      auto value = m.args.find("value");
      if (value == m.args.end()) throw InvalidArgument("set_label requires argument \"value\"");
      d.labels[key] = value->second;
      break;
    }
    case MutationAction::set_probe: {
      Deployment& d = deployment();
      const std::string& kind = required_arg(m, "kind");
      std::vector<ProbeKind> kinds;
      if (kind == "liveness" || kind == "both") kinds.push_back(ProbeKind::liveness);
      if (kind == "readiness" || kind == "both") kinds.push_back(ProbeKind::readiness);
      if (kinds.empty()) throw InvalidArgument("set_probe: kind must be liveness, readiness or both");
      std::vector<ProbeSpec> probes = d.probes;
      for (ProbeKind k : kinds) {
        auto it = std::find_if(probes.begin(), probes.end(), [&](const ProbeSpec& p) { return p.kind == k; });
        if (it == probes.end()) {
          if (!m.args.count("path")) throw InvalidArgument("set_probe: a new probe needs \"path\"");
          probes.push_back(ProbeSpec{k, "", d.port});
          it = std::prev(probes.end());
        }
        for (const auto& [key, value] : m.args) {
          if (key == "kind") continue;
          if (key == "path") it->http_path = value;
          else if (key == "port") it->port = int_arg(value, key, 1);
          else if (key == "initial_delay") it->initial_delay = int_arg(value, key, 0);
          else if (key == "timeout") it->timeout = int_arg(value, key, 1);
          else if (key == "period") it->period = int_arg(value, key, 1);
          else if (key == "success_threshold") it->success_threshold = int_arg(value, key, 1);
          else if (key == "failure_threshold") it->failure_threshold = int_arg(value, key, 1);
          else throw InvalidArgument("set_probe: unknown argument \"" + key + "\"");
        }
        if (it->timeout >= it->period) throw InvalidArgument("probe timeout must be shorter than its period");
      }
      d.probes = std::move(probes);
      break;
    }
  }
  refresh_readiness();
  const bool changed = digest() != before;
  if (changed) log_.push_back({state_.sim_time, m});
  return changed;
}

}  // namespace skillforge::sim
