#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "skillforge/assets.hpp"
#include "skillforge/core/error.hpp"
#include "skillforge/core/quantity.hpp"
#include "skillforge/core/text.hpp"
#include "skillforge/sim/cluster.hpp"

namespace skillforge::sim {

using nlohmann::json;

const Deployment* ClusterState::find_deployment(std::string_view ns, std::string_view name) const {
  for (const auto& d : deployments) {
    if (d.ns == ns && d.name == name) return &d;
  }
  return nullptr;
}

Deployment* ClusterState::find_deployment(std::string_view ns, std::string_view name) {
  for (auto& d : deployments) {
    if (d.ns == ns && d.name == name) return &d;
  }
  return nullptr;
}

const Pod* ClusterState::find_pod(std::string_view ns, std::string_view name) const {
  for (const auto& p : pods) {
    if (p.ns == ns && p.name == name) return &p;
  }
  return nullptr;
}

std::vector<const Pod*> ClusterState::pods_of(const Deployment& d) const {
  std::vector<const Pod*> out;
  for (const auto& p : pods) {
    if (p.ns == d.ns && p.deployment == d.name) out.push_back(&p);
  }
  return out;
}

std::string_view to_string(ProbeKind kind) {
  return kind == ProbeKind::liveness ? "liveness" : "readiness";
}

namespace {

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

json profile_json(const TrafficProfile& t) {
  json buckets = json::array();
  for (const auto& b : t.latency) buckets.push_back({b.le, b.cumulative_fraction});
  return {{"rps", t.requests_per_sec}, {"e4", t.error_4xx},        {"e5", t.error_5xx},
          {"lat", t.mean_latency_seconds}, {"buckets", buckets},   {"jitter", t.request_jitter},
          {"cpu", t.base_cpu_m},        {"cpu_rps", t.cpu_per_rps_m}, {"cpu_j", t.cpu_jitter_m},
          {"mem", t.base_mem},          {"mem_rps", t.mem_per_rps},   {"mem_j", t.mem_jitter}};
}

// ---- schema reader -------------------------------------------------------

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const { throw LoadError(path_.empty() ? "$" : path_, what); }

  const json& node() const { return node_; }
  const std::string& path() const { return path_; }

  Reader field(std::string_view key) const { return Reader(node_.at(std::string(key)), join(key)); }
  bool has(std::string_view key) const { return node_.contains(std::string(key)); }

  void require_object(std::initializer_list<std::string_view> allowed) const {
    if (!node_.is_object()) fail("expected an object");
    for (const auto& [key, value] : node_.items()) {
      bool known = false;
      for (auto a : allowed) known = known || a == key;
      if (!known) Reader(value, join(key)).fail("unknown field");
    }
  }

  Reader required(std::string_view key) const {
    if (!has(key)) Reader(nullptr, join(key)).fail("missing required field");
    return field(key);
  }

  std::string as_string() const {
    if (!node_.is_string()) fail("expected a string");
    return node_.get<std::string>();
  }
  long long as_int(long long min_value) const {
    if (!node_.is_number_integer()) fail("expected an integer");
    auto v = node_.get<long long>();
    if (v < min_value) fail("must be >= " + std::to_string(min_value));
    return v;
  }
  double as_number() const {
    if (!node_.is_number()) fail("expected a number");
    return node_.get<double>();
  }
  double as_fraction() const {
    double v = as_number();
    if (v < 0 || v > 1) fail("must be within [0, 1]");
    return v;
  }
  bool as_bool() const {
    if (!node_.is_boolean()) fail("expected a boolean");
    return node_.get<bool>();
  }
  std::vector<Reader> as_array() const {
    if (!node_.is_array()) fail("expected an array");
    std::vector<Reader> out;
    for (size_t i = 0; i < node_.size(); ++i) {
      out.emplace_back(node_[i], path_ + "[" + std::to_string(i) + "]");
    }
    return out;
  }
  std::int64_t as_cpu() const {
    try {
      if (node_.is_number()) return quantity::parse_cpu_millis(text::format_double(node_.get<double>()));
      return quantity::parse_cpu_millis(as_string());
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
  }
  std::int64_t as_memory() const {
    try {
      if (node_.is_number_integer()) return node_.get<std::int64_t>();
      return quantity::parse_memory_bytes(as_string());
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
  }

 private:
  std::string join(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json& node_;
  std::string path_;
};

ProbeSpec read_probe(const Reader& r) {
  r.require_object({"kind", "http_path", "port", "initial_delay", "timeout", "period",
                    "success_threshold", "failure_threshold"});
  ProbeSpec p;
  auto kind = r.required("kind").as_string();
  if (kind == "liveness") {
    p.kind = ProbeKind::liveness;
  } else if (kind == "readiness") {
    p.kind = ProbeKind::readiness;
  } else {
    r.field("kind").fail("expected \"liveness\" or \"readiness\"");
  }
  p.http_path = r.required("http_path").as_string();
  if (r.has("port")) p.port = static_cast<int>(r.field("port").as_int(1));
  if (r.has("initial_delay")) p.initial_delay = static_cast<int>(r.field("initial_delay").as_int(0));
  if (r.has("timeout")) p.timeout = static_cast<int>(r.field("timeout").as_int(1));
  if (r.has("period")) p.period = static_cast<int>(r.field("period").as_int(1));
  if (r.has("success_threshold")) p.success_threshold = static_cast<int>(r.field("success_threshold").as_int(1));
  if (r.has("failure_threshold")) p.failure_threshold = static_cast<int>(r.field("failure_threshold").as_int(1));
  if (p.timeout >= p.period) r.fail("timeout must be shorter than period");
  return p;
}

TrafficProfile read_profile(const Reader& r) {
  r.require_object({"requests_per_sec", "error_4xx", "error_5xx", "mean_latency_seconds",
                    "latency_buckets", "request_jitter", "base_cpu", "cpu_per_rps_millicores",
                    "cpu_jitter_millicores", "base_memory", "memory_per_rps", "memory_jitter"});
  TrafficProfile t;
  if (r.has("requests_per_sec")) {
    t.requests_per_sec = r.field("requests_per_sec").as_number();
    if (t.requests_per_sec < 0) r.field("requests_per_sec").fail("must be >= 0");
  }
  if (r.has("error_4xx")) t.error_4xx = r.field("error_4xx").as_fraction();
  if (r.has("error_5xx")) t.error_5xx = r.field("error_5xx").as_fraction();
  if (t.error_4xx + t.error_5xx > 1) r.fail("error fractions sum above 1");
  if (r.has("mean_latency_seconds")) t.mean_latency_seconds = r.field("mean_latency_seconds").as_number();
  if (r.has("latency_buckets")) {
    double prev_le = -HUGE_VAL;
    double prev_frac = 0;
    for (const auto& b : r.field("latency_buckets").as_array()) {
      b.require_object({"le", "fraction"});
      LatencyBucket bucket{b.required("le").as_number(), b.required("fraction").as_fraction()};
      if (bucket.le <= prev_le) b.fail("bucket bounds must be strictly increasing");
      if (bucket.cumulative_fraction < prev_frac) b.fail("cumulative fractions must not decrease");
      prev_le = bucket.le;
      prev_frac = bucket.cumulative_fraction;
      t.latency.push_back(bucket);
    }
  }
  if (r.has("request_jitter")) t.request_jitter = r.field("request_jitter").as_fraction();
  if (r.has("base_cpu")) t.base_cpu_m = r.field("base_cpu").as_cpu();
  if (r.has("cpu_per_rps_millicores")) t.cpu_per_rps_m = r.field("cpu_per_rps_millicores").as_number();
  if (r.has("cpu_jitter_millicores")) t.cpu_jitter_m = r.field("cpu_jitter_millicores").as_number();
  if (r.has("base_memory")) t.base_mem = r.field("base_memory").as_memory();
  if (r.has("memory_per_rps")) t.mem_per_rps = static_cast<double>(r.field("memory_per_rps").as_memory());
  if (r.has("memory_jitter")) t.mem_jitter = r.field("memory_jitter").as_memory();
  return t;
}

std::string default_hash(const std::string& ns, const std::string& name) {
  static constexpr std::string_view kAlphabet = "bcdfghjklmnpqrstvwxz2456789";
  std::uint64_t h = fnv1a(ns + "/" + name);
  std::string out;
  for (int i = 0; i < 10; ++i) {
    out.push_back(kAlphabet[h % kAlphabet.size()]);
    h /= kAlphabet.size();
    if (h == 0) h = fnv1a(out);
  }
  return out;
}

Deployment read_deployment(const Reader& r, const std::set<std::string>& namespaces,
                           std::vector<std::string>& suffixes) {
  r.require_object({"name", "namespace", "labels", "image", "command", "args", "port", "resources",
                    "probes", "replicas", "pod_template_hash", "pod_suffixes", "app_health_path",
                    "traffic_profile"});
  Deployment d;
  d.name = r.required("name").as_string();
  if (d.name.empty()) r.field("name").fail("must not be empty");
  d.ns = r.required("namespace").as_string();
  if (!namespaces.count(d.ns)) r.field("namespace").fail("namespace \"" + d.ns + "\" is not declared");
  d.image = r.required("image").as_string();
  if (r.has("labels")) {
    auto labels = r.field("labels");
    if (!labels.node().is_object()) labels.fail("expected an object");
    for (const auto& [k, v] : labels.node().items()) {
      d.labels[k] = Reader(v, labels.path() + "." + k).as_string();
    }
  }
  if (r.has("command")) d.command = r.field("command").as_string();
  if (r.has("args")) {
    for (const auto& a : r.field("args").as_array()) d.args.push_back(a.as_string());
  }
  if (r.has("port")) d.port = static_cast<int>(r.field("port").as_int(1));
  if (r.has("resources")) {
    auto res = r.field("resources");
    res.require_object({"requests", "limits"});
    auto read_pair = [](const Reader& pr, std::int64_t& cpu, std::int64_t& mem) {
      pr.require_object({"cpu", "memory"});
      if (pr.has("cpu")) cpu = pr.field("cpu").as_cpu();
      if (pr.has("memory")) mem = pr.field("memory").as_memory();
    };
    if (res.has("requests")) read_pair(res.field("requests"), d.resources.cpu_request_m, d.resources.mem_request);
    if (res.has("limits")) read_pair(res.field("limits"), d.resources.cpu_limit_m, d.resources.mem_limit);
    if (d.resources.cpu_limit_m == 0) d.resources.cpu_limit_m = d.resources.cpu_request_m;
    if (d.resources.mem_limit == 0) d.resources.mem_limit = d.resources.mem_request;
    if (d.resources.cpu_request_m > d.resources.cpu_limit_m) res.fail("cpu request exceeds limit");
    if (d.resources.mem_request > d.resources.mem_limit) res.fail("memory request exceeds limit");
  }
  if (r.has("probes")) {
    for (const auto& p : r.field("probes").as_array()) d.probes.push_back(read_probe(p));
  }
  if (r.has("replicas")) d.replicas = static_cast<int>(r.field("replicas").as_int(0));
  d.pod_template_hash = r.has("pod_template_hash") ? r.field("pod_template_hash").as_string()
                                                   : default_hash(d.ns, d.name);
  if (r.has("pod_suffixes")) {
    for (const auto& s : r.field("pod_suffixes").as_array()) suffixes.push_back(s.as_string());
  }
  if (r.has("app_health_path")) d.app_health_path = r.field("app_health_path").as_string();
  if (r.has("traffic_profile")) d.traffic = read_profile(r.field("traffic_profile"));
  return d;
}

}  // namespace

TrafficProfile parse_traffic_profile(const json& doc, const std::string& path) {
  return read_profile(Reader(doc, path));
}

json to_json(const ClusterState& s) {
  json deployments = json::array();
  for (const auto& d : s.deployments) {
    json probes = json::array();
    for (const auto& p : d.probes) {
      probes.push_back({to_string(p.kind), p.http_path, p.port, p.initial_delay, p.timeout, p.period,
                        p.success_threshold, p.failure_threshold});
    }
    deployments.push_back({{"name", d.name},
                           {"namespace", d.ns},
                           {"labels", d.labels},
                           {"image", d.image},
                           {"command", d.command},
                           {"args", d.args},
                           {"port", d.port},
                           {"resources",
                            {d.resources.cpu_request_m, d.resources.cpu_limit_m,
                             d.resources.mem_request, d.resources.mem_limit}},
                           {"probes", probes},
                           {"replicas", d.replicas},
                           {"hash", d.pod_template_hash},
                           {"health", d.app_health_path},
                           {"traffic", profile_json(d.traffic)}});
  }
  json pods = json::array();
  for (const auto& p : s.pods) {
    pods.push_back({{"name", p.name},
                    {"namespace", p.ns},
                    {"deployment", p.deployment},
                    {"created_at", p.created_at},
                    {"restarts", p.restarts},
                    {"ready", p.ready},
                    {"cpu_m", p.cpu_m},
                    {"mem", p.mem_bytes},
                    {"requests", p.counters.requests_by_status},
                    {"duration", {p.counters.duration_sum, p.counters.duration_count}},
                    {"buckets", p.counters.bucket_counts},
                    {"cpu_seconds", p.counters.cpu_seconds}});
  }
  return {{"namespaces", s.namespaces},
          {"deployments", deployments},
          {"pods", pods},
          {"sim_time", s.sim_time},
          {"seed", s.rng_seed},
          {"metrics_available", s.metrics_available},
          {"pod_sequence", s.pod_sequence}};
}

std::string state_digest(const ClusterState& state) {
  json doc = to_json(state);
  doc.erase("sim_time");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(doc.dump())));
  return buf;
}

ClusterState load_topology(const json& doc, std::uint64_t seed) {
  Reader root(doc, "");
  root.require_object({"schema", "name", "description", "namespaces", "deployments", "metrics_available"});
  ClusterState state;
  state.rng_seed = seed;
  for (const auto& ns : root.required("namespaces").as_array()) {
    auto name = ns.as_string();
    if (name.empty()) ns.fail("must not be empty");
    if (!state.namespaces.insert(name).second) ns.fail("duplicate namespace \"" + name + "\"");
  }
  if (root.has("metrics_available")) state.metrics_available = root.field("metrics_available").as_bool();
  for (const auto& dr : root.required("deployments").as_array()) {
    std::vector<std::string> suffixes;
    Deployment d = read_deployment(dr, state.namespaces, suffixes);
    if (state.find_deployment(d.ns, d.name)) dr.fail("duplicate deployment \"" + d.name + "\"");
    if (suffixes.size() > static_cast<size_t>(d.replicas)) {
      dr.field("pod_suffixes").fail("more suffixes than replicas");
    }
    state.deployments.push_back(d);
    for (int i = 0; i < d.replicas; ++i) {
      Pod p;
      p.ns = d.ns;
      p.deployment = d.name;
      std::string suffix;
      if (static_cast<size_t>(i) < suffixes.size()) {
        suffix = suffixes[static_cast<size_t>(i)];
      } else {
        // Deterministic but seed-independent so fixtures render the same everywhere.
        std::uint64_t h = fnv1a(d.pod_template_hash + "#" + std::to_string(i));
        static constexpr std::string_view kAlphabet = "bcdfghjklmnpqrstvwxz2456789";
        for (int c = 0; c < 5; ++c) {
          suffix.push_back(kAlphabet[h % kAlphabet.size()]);
          h /= kAlphabet.size();
        }
      }
      p.name = d.name + "-" + d.pod_template_hash + "-" + suffix;
      if (state.find_pod(p.ns, p.name)) dr.fail("duplicate pod name \"" + p.name + "\"");
      for (const auto& other : state.pods) {
        if (other.name == p.name) dr.fail("duplicate pod name \"" + p.name + "\"");
      }
      p.cpu_m = std::min(d.traffic.base_cpu_m, d.resources.cpu_limit_m > 0 ? d.resources.cpu_limit_m : d.traffic.base_cpu_m);
      p.mem_bytes = std::min(d.traffic.base_mem, d.resources.mem_limit > 0 ? d.resources.mem_limit : d.traffic.base_mem);
      state.pods.push_back(std::move(p));
      ++state.pod_sequence;
    }
  }
  return state;
}

ClusterState load_topology_text(std::string_view text, std::uint64_t seed) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError("$", std::string("malformed document: ") + e.what());
  }
  return load_topology(doc, seed);
}

ClusterState load_topology_source(const std::string& name_or_path, std::uint64_t seed) {
  if (auto bundled = assets::find("fixtures/topology/" + name_or_path + ".json")) {
    return load_topology_text(*bundled, seed);
  }
  std::ifstream in(name_or_path);
  if (!in) throw LoadError(name_or_path, "cannot open topology fixture");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_topology_text(ss.str(), seed);
}

}  // namespace skillforge::sim
