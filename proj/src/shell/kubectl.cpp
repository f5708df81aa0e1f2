#include "skillforge/shell/kubectl.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <tuple>

#include "skillforge/core/error.hpp"
#include "skillforge/core/quantity.hpp"
#include "skillforge/core/text.hpp"

namespace skillforge::shell {
namespace {

constexpr std::int64_t kReadMs = 120;
constexpr std::int64_t kWriteMs = 250;
constexpr std::int64_t kErrorMs = 60;

struct Failure {
  std::string message;
};

[[noreturn]] void fail(std::string message) { throw Failure{std::move(message)}; }

enum class Kind { deployment, pod, namespace_ };

std::optional<Kind> resource_kind(std::string_view word) {
  if (word == "deployment" || word == "deployments" || word == "deploy" || word == "deployment.apps" ||
      word == "deployments.apps") {
    return Kind::deployment;
  }
  if (word == "pod" || word == "pods" || word == "po") return Kind::pod;
  if (word == "namespace" || word == "namespaces" || word == "ns") return Kind::namespace_;
  return std::nullopt;
}

struct Parsed {
  std::string verb;
  std::vector<std::string> positional;
  std::map<std::string, std::string> flags;  // canonical long name -> value ("" for switches)
};

// Canonical name and whether the flag takes a value.
std::optional<std::pair<std::string, bool>> lookup_flag(std::string_view name) {
  static const std::map<std::string, std::pair<std::string, bool>, std::less<>> table = {
      {"-n", {"namespace", true}},
      {"--namespace", {"namespace", true}},
      {"-A", {"all-namespaces", false}},
      {"--all-namespaces", {"all-namespaces", false}},
      {"-l", {"selector", true}},
      {"--selector", {"selector", true}},
      {"--replicas", {"replicas", true}},
      {"--limits", {"limits", true}},
      {"--requests", {"requests", true}},
      {"--overwrite", {"overwrite", false}},
      {"--liveness", {"liveness", false}},
      {"--readiness", {"readiness", false}},
      {"--get-url", {"get-url", true}},
      {"--initial-delay-seconds", {"initial-delay-seconds", true}},
      {"--timeout-seconds", {"timeout-seconds", true}},
      {"--period-seconds", {"period-seconds", true}},
      {"--success-threshold", {"success-threshold", true}},
      {"--failure-threshold", {"failure-threshold", true}},
  };
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::string command_path(const Parsed& p) {
  std::string path = "kubectl " + p.verb;
  if (p.verb == "set" && !p.positional.empty()) path += " " + p.positional.front();
  return path;
}

Parsed parse_args(const std::vector<std::string>& args) {
  Parsed p;
  std::vector<std::string> pending_unknown;
  for (size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.size() > 1 && a.front() == '-') {
      std::string name = a;
      std::optional<std::string> value;
      if (auto eq = a.find('='); eq != std::string::npos && a.starts_with("--")) {
        name = a.substr(0, eq);
        value = a.substr(eq + 1);
      } else if (a.size() > 2 && a[1] != '-' && (a[1] == 'n' || a[1] == 'l')) {
        name = a.substr(0, 2);
        value = a.substr(2);
      }
      auto flag = lookup_flag(name);
      if (!flag) {
        pending_unknown.push_back(name);
        continue;
      }
      if (flag->second) {
        if (!value) {
          if (i + 1 >= args.size()) fail("error: flag needs an argument: '" + name + "' in " + name);
          value = args[++i];
        }
        p.flags[flag->first] = *value;
      } else {
        if (value) fail("error: flag " + name + " does not take a value");
        p.flags[flag->first] = "";
      }
      continue;
    }
    if (p.verb.empty()) {
      p.verb = a;
    } else {
      p.positional.push_back(a);
    }
  }
  if (p.verb.empty()) fail("error: unknown command \"\" for \"kubectl\": a verb is required");
  if (!pending_unknown.empty()) {
    fail("error: unknown command option \"" + pending_unknown.front() + "\" for \"" + command_path(p) + "\"");
  }
  return p;
}

void allow_flags(const Parsed& p, std::initializer_list<std::string_view> allowed) {
  for (const auto& [name, value] : p.flags) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      fail("error: unknown command option \"--" + name + "\" for \"" + command_path(p) + "\"");
    }
  }
}

std::string namespace_of(const Parsed& p, const sim::ClusterState& state) {
  auto it = p.flags.find("namespace");
  std::string ns = it == p.flags.end() ? "default" : it->second;
  if (!state.namespaces.count(ns)) fail("Error from server (NotFound): namespaces \"" + ns + "\" not found");
  return ns;
}

bool all_namespaces(const Parsed& p) { return p.flags.count("all-namespaces") > 0; }

// `kubectl get deployment/name` style.
std::pair<std::string, std::optional<std::string>> split_type_name(std::vector<std::string>& positional) {
  if (positional.empty()) fail("error: you must specify the type of resource");
  std::string type = positional.front();
  positional.erase(positional.begin());
  if (auto slash = type.find('/'); slash != std::string::npos) {
    std::string name = type.substr(slash + 1);
    type = type.substr(0, slash);
    return {type, name};
  }
  if (!positional.empty()) {
    std::string name = positional.front();
    positional.erase(positional.begin());
    return {type, name};
  }
  return {type, std::nullopt};
}

Kind require_kind(const std::string& type) {
  auto kind = resource_kind(type);
  if (!kind) fail("error: the server doesn't have a resource type \"" + type + "\"");
  return *kind;
}

std::map<std::string, std::string> parse_selector(const std::string& text) {
  std::map<std::string, std::string> sel;
  for (const auto& part : text::split(text, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos || eq == 0) fail("error: unable to parse requirement: \"" + part + "\"");
    std::string key = part.substr(0, eq);
    std::string value = part.substr(eq + 1);
    if (!value.empty() && value.front() == '=') value.erase(0, 1);
    sel[key] = value;
  }
  return sel;
}

std::map<std::string, std::string> pod_labels(const sim::Deployment& d) {
  auto labels = d.labels;
  labels["pod-template-hash"] = d.pod_template_hash;
  return labels;
}

bool selected(const std::map<std::string, std::string>& labels, const std::map<std::string, std::string>& sel) {
  for (const auto& [k, v] : sel) {
    auto it = labels.find(k);
    if (it == labels.end() || it->second != v) return false;
  }
  return true;
}

std::string join_labels(const std::map<std::string, std::string>& labels, std::string_view sep) {
  std::string out;
  for (const auto& [k, v] : labels) {
    if (!out.empty()) out += sep;
    out += k + "=" + v;
  }
  return out.empty() ? "<none>" : out;
}

std::string no_resources(bool all, const std::string& ns) {
  return all ? "No resources found\n" : "No resources found in " + ns + " namespace.\n";
}

// kubectl lists objects ordered by namespace, then name.
std::vector<const sim::Pod*> sorted_pods(const sim::ClusterState& s) {
  std::vector<const sim::Pod*> out;
  for (const auto& p : s.pods) out.push_back(&p);
  std::sort(out.begin(), out.end(), [](const sim::Pod* a, const sim::Pod* b) {
    return std::tie(a->ns, a->name) < std::tie(b->ns, b->name);
  });
  return out;
}

std::vector<const sim::Deployment*> sorted_deployments(const sim::ClusterState& s) {
  std::vector<const sim::Deployment*> out;
  for (const auto& d : s.deployments) out.push_back(&d);
  std::sort(out.begin(), out.end(), [](const sim::Deployment* a, const sim::Deployment* b) {
    return std::tie(a->ns, a->name) < std::tie(b->ns, b->name);
  });
  return out;
}

int ready_count(const sim::ClusterState& s, const sim::Deployment& d) {
  int n = 0;
  for (const auto* p : s.pods_of(d)) n += p->ready ? 1 : 0;
  return n;
}

std::string get(Parsed& p, const sim::ClusterState& s) {
  allow_flags(p, {"namespace", "all-namespaces", "selector"});
  auto [type, name] = split_type_name(p.positional);
  if (!p.positional.empty()) fail("error: unexpected argument \"" + p.positional.front() + "\"");
  Kind kind = require_kind(type);
  std::map<std::string, std::string> sel;
  if (auto it = p.flags.find("selector"); it != p.flags.end()) sel = parse_selector(it->second);

  if (kind == Kind::namespace_) {
    std::vector<std::vector<std::string>> rows{{"NAME", "STATUS", "AGE"}};
    for (const auto& ns : s.namespaces) {
      if (name && *name != ns) continue;
      rows.push_back({ns, "Active", format_age(s.sim_time)});
    }
    if (name && rows.size() == 1) fail("Error from server (NotFound): namespaces \"" + *name + "\" not found");
    return format_table(rows);
  }

  const bool all = all_namespaces(p);
  if (all && name) fail("error: a resource cannot be retrieved by name across all namespaces");
  const std::string ns = all ? "" : namespace_of(p, s);
  std::vector<std::vector<std::string>> rows;
  auto header = [&](std::vector<std::string> cols) {
    if (all) cols.insert(cols.begin(), "NAMESPACE");
    rows.push_back(std::move(cols));
  };
  auto row = [&](const std::string& row_ns, std::vector<std::string> cols) {
    if (all) cols.insert(cols.begin(), row_ns);
    rows.push_back(std::move(cols));
  };

  if (kind == Kind::deployment) {
    header({"NAME", "READY", "UP-TO-DATE", "AVAILABLE", "AGE"});
    for (const auto* dp : sorted_deployments(s)) {
      const auto& d = *dp;
      if (!all && d.ns != ns) continue;
      if (name && d.name != *name) continue;
      if (!selected(d.labels, sel)) continue;
      int ready = ready_count(s, d);
      auto total = s.pods_of(d).size();
      row(d.ns, {d.name, std::to_string(ready) + "/" + std::to_string(d.replicas), std::to_string(total),
                 std::to_string(ready), format_age(s.sim_time)});
    }
    if (name && rows.size() == 1) fail("Error from server (NotFound): deployments.apps \"" + *name + "\" not found");
  } else {
    header({"NAME", "READY", "STATUS", "RESTARTS", "AGE"});
    for (const auto* pp : sorted_pods(s)) {
      const auto& pod = *pp;
      if (!all && pod.ns != ns) continue;
      if (name && pod.name != *name) continue;
      const sim::Deployment* d = s.find_deployment(pod.ns, pod.deployment);
      if (d && !selected(pod_labels(*d), sel)) continue;
      row(pod.ns, {pod.name, pod.ready ? "1/1" : "0/1", "Running", std::to_string(pod.restarts),
                   format_age(s.sim_time - pod.created_at)});
    }
    if (name && rows.size() == 1) fail("Error from server (NotFound): pods \"" + *name + "\" not found");
  }
  if (rows.size() == 1) return no_resources(all, ns);
  return format_table(rows);
}

std::string describe(Parsed& p, const sim::ClusterState& s) {
  allow_flags(p, {"namespace", "selector"});
  auto [type, name] = split_type_name(p.positional);
  if (!p.positional.empty()) fail("error: unexpected argument \"" + p.positional.front() + "\"");
  Kind kind = require_kind(type);
  if (kind == Kind::namespace_) fail("error: describe supports deployments and pods");
  const std::string ns = namespace_of(p, s);
  std::map<std::string, std::string> sel;
  if (auto it = p.flags.find("selector"); it != p.flags.end()) sel = parse_selector(it->second);

  std::vector<std::string> blocks;
  if (kind == Kind::deployment) {
    if (name) {
      const sim::Deployment* d = s.find_deployment(ns, *name);
      if (!d) fail("Error from server (NotFound): deployments.apps \"" + *name + "\" not found");
      return describe_deployment(s, *d);
    }
    for (const auto* d : sorted_deployments(s)) {
      if (d->ns == ns && selected(d->labels, sel)) blocks.push_back(describe_deployment(s, *d));
    }
  } else {
    if (name) {
      const sim::Pod* pod = s.find_pod(ns, *name);
      if (!pod) fail("Error from server (NotFound): pods \"" + *name + "\" not found");
      return describe_pod(s, *pod);
    }
    for (const auto* pod : sorted_pods(s)) {
      const sim::Deployment* d = s.find_deployment(pod->ns, pod->deployment);
      if (pod->ns == ns && d && selected(pod_labels(*d), sel)) blocks.push_back(describe_pod(s, *pod));
    }
  }
  if (blocks.empty()) return no_resources(false, ns);
  return text::join(blocks, "\n\n");
}

std::string top(Parsed& p, const sim::ClusterState& s) {
  allow_flags(p, {"namespace", "all-namespaces", "selector"});
  if (p.positional.empty()) fail("error: you must specify a resource: top pod");
  std::string type = p.positional.front();
  p.positional.erase(p.positional.begin());
  if (resource_kind(type) != Kind::pod) fail("error: unknown command \"" + type + "\" for \"kubectl top\"");
  std::optional<std::string> name;
  if (!p.positional.empty()) {
    name = p.positional.front();
    p.positional.erase(p.positional.begin());
  }
  if (!p.positional.empty()) fail("error: unexpected argument \"" + p.positional.front() + "\"");
  const bool all = all_namespaces(p);
  const std::string ns = all ? "" : namespace_of(p, s);
  if (!s.metrics_available) fail("error: Metrics API not available");
  std::map<std::string, std::string> sel;
  if (auto it = p.flags.find("selector"); it != p.flags.end()) sel = parse_selector(it->second);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"NAME", "CPU(cores)", "MEMORY(bytes)"};
  if (all) header.insert(header.begin(), "NAMESPACE");
  rows.push_back(header);
  for (const auto* pp : sorted_pods(s)) {
    const auto& pod = *pp;
    if (!all && pod.ns != ns) continue;
    if (name && pod.name != *name) continue;
    const sim::Deployment* d = s.find_deployment(pod.ns, pod.deployment);
    if (d && !selected(pod_labels(*d), sel)) continue;
    std::vector<std::string> cols{pod.name, quantity::format_cpu(pod.cpu_m), quantity::format_memory_mi(pod.mem_bytes)};
    if (all) cols.insert(cols.begin(), pod.ns);
    rows.push_back(cols);
  }
  if (name && rows.size() == 1) fail("Error from server (NotFound): pods \"" + *name + "\" not found");
  if (rows.size() == 1) return no_resources(all, ns);
  return format_table(rows);
}

// Write verbs translate into audited environment mutations.
std::string apply(sim::Environment& env, const sim::Mutation& m, const std::string& done) {
  try {
    env.mutate(m);
  } catch (const NotFound& e) {
    fail(std::string("Error from server (NotFound): ") + e.what());
  } catch (const InvalidArgument& e) {
    fail(std::string("error: ") + e.what());
  }
  return done + "\n";
}

std::string deployment_target(Parsed& p, std::string_view verb) {
  auto [type, name] = split_type_name(p.positional);
  if (require_kind(type) != Kind::deployment) fail("error: " + std::string(verb) + " supports deployments only");
  if (!name) fail("error: resource name may not be empty");
  return *name;
}

std::string scale(Parsed& p, sim::Environment& env) {
  allow_flags(p, {"namespace", "replicas"});
  std::string name = deployment_target(p, "scale");
  if (!p.positional.empty()) fail("error: unexpected argument \"" + p.positional.front() + "\"");
  auto it = p.flags.find("replicas");
  if (it == p.flags.end()) fail("error: required flag(s) \"replicas\" not set");
  auto replicas = text::parse_int(it->second);
  if (!replicas || *replicas < 0) fail("error: invalid argument \"" + it->second + "\" for \"--replicas\" flag");
  sim::Mutation m{sim::MutationAction::scale, namespace_of(p, env.state()), name,
                  {{"replicas", std::to_string(*replicas)}}};
  return apply(env, m, "deployment.apps/" + name + " scaled");
}

void resource_pairs(const std::string& text, const std::string& flag, sim::Mutation& m) {
  const std::string suffix = flag == "limits" ? "_limit" : "_request";
  for (const auto& part : text::split(text, ',')) {
    auto eq = part.find('=');
    std::string key = eq == std::string::npos ? part : part.substr(0, eq);
    if (eq == std::string::npos || (key != "cpu" && key != "memory")) {
      fail("error: invalid resource specification \"" + part + "\" in --" + flag);
    }
    m.args[(key == "cpu" ? "cpu" : "mem") + suffix] = part.substr(eq + 1);
  }
}

std::string set(Parsed& p, sim::Environment& env) {
  if (p.positional.empty()) fail("error: unknown command \"\" for \"kubectl set\"");
  std::string sub = p.positional.front();
  p.positional.erase(p.positional.begin());
  if (sub == "resources") {
    allow_flags(p, {"namespace", "limits", "requests"});
    std::string name = deployment_target(p, "set resources");
    if (!p.positional.empty()) fail("error: unexpected argument \"" + p.positional.front() + "\"");
    sim::Mutation m{sim::MutationAction::set_resources, namespace_of(p, env.state()), name, {}};
    if (auto it = p.flags.find("limits"); it != p.flags.end()) resource_pairs(it->second, "limits", m);
    if (auto it = p.flags.find("requests"); it != p.flags.end()) resource_pairs(it->second, "requests", m);
    if (m.args.empty()) fail("error: you must specify an update to requests or limits");
    return apply(env, m, "deployment.apps/" + name + " resource requirements updated");
  }
  if (sub == "probe") {
    allow_flags(p, {"namespace", "liveness", "readiness", "get-url", "initial-delay-seconds", "timeout-seconds",
                    "period-seconds", "success-threshold", "failure-threshold"});
    std::string name = deployment_target(p, "set probe");
    if (!p.positional.empty()) fail("error: unexpected argument \"" + p.positional.front() + "\"");
    const bool live = p.flags.count("liveness") > 0;
    const bool ready = p.flags.count("readiness") > 0;
    if (!live && !ready) fail("error: you must specify one of --liveness or --readiness");
    sim::Mutation m{sim::MutationAction::set_probe, namespace_of(p, env.state()), name,
                    {{"kind", live && ready ? "both" : (live ? "liveness" : "readiness")}}};
    if (auto it = p.flags.find("get-url"); it != p.flags.end()) {
      std::string_view url = it->second;
      if (!url.starts_with("http://")) fail("error: --get-url must be an http URL, got \"" + it->second + "\"");
      url.remove_prefix(7);
      auto slash = url.find('/');
      std::string_view hostport = url.substr(0, slash);
      m.args["path"] = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
      if (auto colon = hostport.rfind(':'); colon != std::string_view::npos) {
        m.args["port"] = std::string(hostport.substr(colon + 1));
      }
    }
    static const std::pair<const char*, const char*> numeric[] = {
        {"initial-delay-seconds", "initial_delay"}, {"timeout-seconds", "timeout"}, {"period-seconds", "period"},
        {"success-threshold", "success_threshold"}, {"failure-threshold", "failure_threshold"}};
    for (const auto& [flag, key] : numeric) {
      if (auto it = p.flags.find(flag); it != p.flags.end()) m.args[key] = it->second;
    }
    return apply(env, m, "deployment.apps/" + name + " probes updated");
  }
  fail("error: unknown command \"" + sub + "\" for \"kubectl set\"");
}

std::string label(Parsed& p, sim::Environment& env) {
  allow_flags(p, {"namespace", "overwrite"});
  std::string name = deployment_target(p, "label");
  if (p.positional.empty()) fail("error: at least one label update is required");
  const std::string ns = namespace_of(p, env.state());
  const sim::Deployment* d = env.state().find_deployment(ns, name);
  if (!d) fail("Error from server (NotFound): deployments.apps \"" + name + "\" not found");
  std::vector<sim::Mutation> updates;
  for (const auto& kv : p.positional) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) fail("error: invalid label spec: " + kv);
    std::string key = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);
    auto existing = d->labels.find(key);
    if (existing != d->labels.end() && existing->second != value && !p.flags.count("overwrite")) {
      fail("error: '" + key + "' already has a value (" + existing->second + "), and --overwrite is false");
    }
    updates.push_back({sim::MutationAction::set_label, ns, name, {{"key", key}, {"value", value}}});
  }
  bool changed = false;
  for (const auto& m : updates) {
    try {
      changed = env.mutate(m) || changed;
    } catch (const InvalidArgument& e) {
      fail(std::string("error: ") + e.what());
    }
  }
  return "deployment.apps/" + name + (changed ? " labeled\n" : " not labeled\n");
}

std::string delete_pod(Parsed& p, sim::Environment& env) {
  allow_flags(p, {"namespace"});
  auto [type, name] = split_type_name(p.positional);
  if (require_kind(type) != Kind::pod) fail("error: delete supports pods only");
  if (!name) fail("error: resource(s) were provided, but no name was specified");
  if (!p.positional.empty()) fail("error: unexpected argument \"" + p.positional.front() + "\"");
  sim::Mutation m{sim::MutationAction::kill_pod, namespace_of(p, env.state()), *name, {}};
  return apply(env, m, "pod \"" + *name + "\" deleted");
}

std::string format_probe(const sim::ProbeSpec& probe) {
  return "http-get http://:" + std::to_string(probe.port) + probe.http_path + " delay=" +
         std::to_string(probe.initial_delay) + "s timeout=" + std::to_string(probe.timeout) +
         "s period=" + std::to_string(probe.period) + "s #success=" + std::to_string(probe.success_threshold) +
         " #failure=" + std::to_string(probe.failure_threshold);
}

// Renders "Key:" padded to `width`, with continuation lines for multi-valued labels.
std::string field(std::string_view key, const std::string& value, size_t width) {
  std::string line(key);
  line += ':';
  line.append(width > line.size() ? width - line.size() : 1, ' ');
  return line + value + "\n";
}

std::string multiline_labels(const std::map<std::string, std::string>& labels, size_t width) {
  if (labels.empty()) return "<none>";
  std::string out;
  for (const auto& [k, v] : labels) {
    if (!out.empty()) out += "\n" + std::string(width, ' ');
    out += k + "=" + v;
  }
  return out;
}

void container_block(std::string& out, const sim::Deployment& d, const sim::Pod* pod) {
  out += "    Image:      " + d.image + "\n";
  out += "    Port:       " + std::to_string(d.port) + "/TCP\n";
  out += "    Host Port:  0/TCP\n";
  if (!d.command.empty()) {
    out += "    Command:\n      " + d.command + "\n";
  }
  if (!d.args.empty()) {
    out += "    Args:\n";
    for (const auto& a : d.args) out += "      " + a + "\n";
  }
  if (pod) {
    out += "    State:          Running\n";
    out += std::string("    Ready:          ") + (pod->ready ? "True" : "False") + "\n";
    out += "    Restart Count:  " + std::to_string(pod->restarts) + "\n";
  }
  const auto& r = d.resources;
  if (r.cpu_limit_m || r.mem_limit) {
    out += "    Limits:\n";
    if (r.cpu_limit_m) out += "      cpu:     " + quantity::format_cpu(r.cpu_limit_m) + "\n";
    if (r.mem_limit) out += "      memory:  " + quantity::format_memory(r.mem_limit) + "\n";
  }
  if (r.cpu_request_m || r.mem_request) {
    out += "    Requests:\n";
    if (r.cpu_request_m) out += "      cpu:        " + quantity::format_cpu(r.cpu_request_m) + "\n";
    if (r.mem_request) out += "      memory:     " + quantity::format_memory(r.mem_request) + "\n";
  }
  for (sim::ProbeKind kind : {sim::ProbeKind::liveness, sim::ProbeKind::readiness}) {
    for (const auto& probe : d.probes) {
      if (probe.kind != kind) continue;
      out += std::string(kind == sim::ProbeKind::liveness ? "    Liveness:     " : "    Readiness:    ") +
             format_probe(probe) + "\n";
    }
  }
  out += "    Environment:  <none>\n";
  out += "    Mounts:       <none>\n";
}

}  // namespace

std::string format_age(std::int64_t seconds) {
  if (seconds < 0) seconds = 0;
  if (seconds < 120) return std::to_string(seconds) + "s";
  std::int64_t minutes = seconds / 60;
  if (minutes < 10) {
    std::int64_t rest = seconds % 60;
    return std::to_string(minutes) + "m" + (rest ? std::to_string(rest) + "s" : "");
  }
  if (minutes < 180) return std::to_string(minutes) + "m";
  std::int64_t hours = minutes / 60;
  if (hours < 48) {
    std::int64_t rest = minutes % 60;
    return std::to_string(hours) + "h" + (hours < 8 && rest ? std::to_string(rest) + "m" : "");
  }
  return std::to_string(hours / 24) + "d";
}

std::string format_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> widths;
  for (const auto& row : rows) {
    if (row.size() > widths.size()) widths.resize(row.size(), 0);
    for (size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line.append(widths[i] - row[i].size() + 3, ' ');
    }
    out += line + "\n";
  }
  return out;
}

std::string describe_deployment(const sim::ClusterState& s, const sim::Deployment& d) {
  constexpr size_t w = 24;
  const int ready = ready_count(s, d);
  const int total = static_cast<int>(s.pods_of(d).size());
  std::string out;
  out += field("Name", d.name, w);
  out += field("Namespace", d.ns, w);
  out += field("Labels", multiline_labels(d.labels, w), w);
  out += field("Selector", join_labels(d.labels, ","), w);
  out += field("Replicas", std::to_string(d.replicas) + " desired | " + std::to_string(total) + " updated | " +
                               std::to_string(total) + " total | " + std::to_string(ready) + " available | " +
                               std::to_string(std::max(0, d.replicas - ready)) + " unavailable",
               w);
  out += field("StrategyType", "RollingUpdate", w);
  out += field("MinReadySeconds", "0", w);
  out += "Pod Template:\n";
  out += "  Labels:  " + multiline_labels(d.labels, 11) + "\n";
  out += "  Containers:\n";
  out += "   " + d.name + ":\n";
  container_block(out, d, nullptr);
  out += "  Volumes:        <none>\n";
  out += "Conditions:\n";
  out += "  Type           Status\n";
  out += std::string("  Available      ") + (ready >= d.replicas ? "True" : "False") + "\n";
  out += field("NewReplicaSet", d.name + "-" + d.pod_template_hash + " (" + std::to_string(total) + "/" +
                                    std::to_string(d.replicas) + " replicas created)",
               w);
  return out;
}

std::string describe_pod(const sim::ClusterState& s, const sim::Pod& pod) {
  constexpr size_t w = 16;
  const sim::Deployment* d = s.find_deployment(pod.ns, pod.deployment);
  std::string out;
  out += field("Name", pod.name, w);
  out += field("Namespace", pod.ns, w);
  out += field("Node", "node-1/10.0.0.11", w);
  out += field("Start Time", "T+" + std::to_string(pod.created_at) + "s", w);
  out += field("Labels", d ? multiline_labels(pod_labels(*d), w) : "<none>", w);
  out += field("Status", "Running", w);
  if (d) out += field("Controlled By", "ReplicaSet/" + d->name + "-" + d->pod_template_hash, w);
  out += "Containers:\n";
  if (d) {
    out += "  " + d->name + ":\n";
    container_block(out, *d, &pod);
  }
  out += "Conditions:\n";
  out += "  Type              Status\n";
  out += std::string("  Ready             ") + (pod.ready ? "True" : "False") + "\n";
  out += std::string("  ContainersReady   ") + (pod.ready ? "True" : "False") + "\n";
  out += field("Events", "<none>", w);
  return out;
}

ExecutionResult run_kubectl(const std::vector<std::string>& args, sim::Environment& env, const Context& ctx) {
  ExecutionResult r;
  try {
    Parsed p = parse_args(args);
    static const std::set<std::string, std::less<>> writes = {"scale", "set", "label", "delete"};
    static const std::set<std::string, std::less<>> reads = {"get", "describe", "top"};
    if (!writes.count(p.verb) && !reads.count(p.verb)) {
      fail("error: unknown command \"" + p.verb + "\" for \"kubectl\"");
    }
    if (writes.count(p.verb) && ctx.read_only) {
      fail("error: write operations are disabled in observation-only mode");
    }
    r.duration_ms = writes.count(p.verb) ? kWriteMs : kReadMs;
    if (p.verb == "get") r.stdout_text = get(p, env.state());
    else if (p.verb == "describe") r.stdout_text = describe(p, env.state());
    else if (p.verb == "top") r.stdout_text = top(p, env.state());
    else if (p.verb == "scale") r.stdout_text = scale(p, env);
    else if (p.verb == "set") r.stdout_text = set(p, env);
    else if (p.verb == "label") r.stdout_text = label(p, env);
    else r.stdout_text = delete_pod(p, env);
  } catch (const Failure& f) {
    r.stdout_text.clear();
    r.stderr_text = f.message + "\n";
    r.exit_code = 1;
    r.duration_ms = kErrorMs;
  }
  return r;
}

}  // namespace skillforge::shell
