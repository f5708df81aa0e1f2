#pragma once

#include <string>
#include <vector>

#include "skillforge/shell/gateway.hpp"

namespace skillforge::shell {

// kubectl subset: get, describe, top, scale, set resources, set probe, label, delete pod.
ExecutionResult run_kubectl(const std::vector<std::string>& args, sim::Environment& env,
                            const Context& ctx);

// Text renderers, exposed for golden tests.
std::string describe_deployment(const sim::ClusterState& state, const sim::Deployment& d);
std::string describe_pod(const sim::ClusterState& state, const sim::Pod& pod);
std::string format_age(std::int64_t seconds);
std::string format_table(const std::vector<std::vector<std::string>>& rows);

}  // namespace skillforge::shell
