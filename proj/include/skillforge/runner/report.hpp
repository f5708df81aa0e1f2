#pragma once

#include <string>
#include <vector>

#include "skillforge/runner/evaluation.hpp"
#include "skillforge/runner/knowledge.hpp"

namespace skillforge::runner {

std::string knowledge_csv(const std::vector<KnowledgePoint>& points);
// Timeline of knowledge points against rounds.
std::string knowledge_svg(const std::vector<KnowledgePoint>& points, int rounds);
// Heatmap with "x/y" cell labels.
std::string grid_svg(const Grid& grid);

std::string csv_field(const std::string& value);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace skillforge::runner
