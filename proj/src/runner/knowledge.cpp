#include "skillforge/runner/knowledge.hpp"

#include "skillforge/core/text.hpp"

namespace skillforge::runner {
namespace {

bool has(const std::string& s, std::string_view needle) { return s.find(needle) != std::string::npos; }

}  // namespace

bool demonstrates(const std::string& point_id, const data::SkillEntry& e) {
  if (!e.validated) return false;
  const bool command = e.kind == data::SkillKind::command;
  const std::string all = e.body + " " + e.description;
  if (point_id == "kubectl-command-construction") {
    return command && e.body.starts_with("kubectl ") && has(e.body, "-n sock-shop");
  }
  if (point_id == "kubectl-resource-query") return command && e.body.starts_with("kubectl top ");
  if (point_id == "prometheus-config") {
    return has(all, "label/job/values") || has(all, "job=\"sock-shop/") || text::contains_ci(all, "job label");
  }
  if (point_id == "prometheus-query-encoding") {
    if (command) return has(e.body, "%7B");
    return e.kind == data::SkillKind::reflection && text::contains_ci(e.body, "encod");
  }
  if (point_id == "prometheus-metric-query") return command && has(e.body, "histogram_quantile");
  return false;
}

KnowledgeTracker::KnowledgeTracker()
    : points_{{"kubectl-command-construction", "kubectl command construction", "kubectl", std::nullopt},
              {"kubectl-resource-query", "kubectl resource usage query", "kubectl", std::nullopt},
              {"prometheus-config", "Prometheus settings and job labels", "prometheus", std::nullopt},
              {"prometheus-query-encoding", "Prometheus query URL encoding", "prometheus", std::nullopt},
              {"prometheus-metric-query", "Prometheus latency metric query", "prometheus", std::nullopt}} {}

std::vector<std::string> KnowledgeTracker::update(const data::SkillLibrary& library, int round) {
  std::vector<std::string> fresh;
  for (auto& p : points_) {
    if (p.acquired_round) continue;
    for (const auto& e : library.entries()) {
      if (demonstrates(p.id, e)) {
        p.acquired_round = round;
        fresh.push_back(p.id);
        break;
      }
    }
  }
  return fresh;
}

nlohmann::json KnowledgeTracker::to_json() const {
  auto out = nlohmann::json::array();
  for (const auto& p : points_) {
    out.push_back({{"id", p.id},
                   {"label", p.label},
                   {"family", p.family},
                   {"acquired_round", p.acquired_round ? nlohmann::json(*p.acquired_round) : nlohmann::json()}});
  }
  return out;
}

}  // namespace skillforge::runner
