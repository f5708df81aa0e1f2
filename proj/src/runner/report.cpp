#include "skillforge/runner/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "skillforge/core/error.hpp"

namespace skillforge::runner {
namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string svg_open(int width, int height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text_at(int x, int y, const std::string& s, const char* anchor = "start", const char* extra = "") {
  return "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" text-anchor=\"" + anchor + "\"" +
         extra + ">" + xml_escape(s) + "</text>\n";
}

// White to dark blue.
std::string shade(double fraction) {
  auto mix = [&](int from, int to) { return static_cast<int>(from + (to - from) * fraction + 0.5); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(247, 8), mix(251, 48), mix(255, 107));
  return buf;
}

}  // namespace

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

std::string knowledge_csv(const std::vector<KnowledgePoint>& points) {
  std::string out = "point,label,family,acquired_round\n";
  for (const auto& p : points) {
    out += csv_field(p.id) + "," + csv_field(p.label) + "," + p.family + "," +
           (p.acquired_round ? std::to_string(*p.acquired_round) : "") + "\n";
  }
  return out;
}

std::string knowledge_svg(const std::vector<KnowledgePoint>& points, int rounds) {
  const int left = 260, top = 40, col = 70, row = 34;
  const int width = left + col * std::max(rounds, 1) + 40;
  const int height = top + row * static_cast<int>(points.size()) + 50;
  std::string out = svg_open(width, height);
  out += text_at(10, 22, "Knowledge points acquired per round", "start", " font-weight=\"bold\"");
  for (int r = 1; r <= rounds; ++r) {
    int x = left + col * (r - 1) + col / 2;
    out += text_at(x, height - 18, "round " + std::to_string(r), "middle");
    out += "<line x1=\"" + std::to_string(x) + "\" y1=\"" + std::to_string(top) + "\" x2=\"" + std::to_string(x) +
           "\" y2=\"" + std::to_string(height - 36) + "\" stroke=\"#dddddd\"/>\n";
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const int y = top + row * static_cast<int>(i) + row / 2;
    out += text_at(10, y + 4, p.label);
    if (!p.acquired_round) continue;
    const int x0 = left + col * (*p.acquired_round - 1) + col / 2;
    const int x1 = left + col * (rounds - 1) + col / 2;
    const char* colour = p.family == "kubectl" ? "#2b8a3e" : "#1c5fa8";
    if (x1 > x0) {
      out += "<line x1=\"" + std::to_string(x0) + "\" y1=\"" + std::to_string(y) + "\" x2=\"" + std::to_string(x1) +
             "\" y2=\"" + std::to_string(y) + "\" stroke=\"" + colour + "\" stroke-width=\"4\"/>\n";
    }
    out += "<circle cx=\"" + std::to_string(x0) + "\" cy=\"" + std::to_string(y) + "\" r=\"7\" fill=\"" + colour +
           "\"/>\n";
  }
  return out + "</svg>\n";
}

std::string grid_svg(const Grid& grid) {
  const int left = 200, top = 40, col = 80, row = 36;
  const int width = left + col * static_cast<int>(grid.columns.size()) + 20;
  const int height = top + row * static_cast<int>(grid.rows.size()) + 20;
  std::string out = svg_open(width, height);
  out += text_at(10, 22, "Successful runs per evaluation task", "start", " font-weight=\"bold\"");
  for (std::size_t c = 0; c < grid.columns.size(); ++c) {
    out += text_at(left + col * static_cast<int>(c) + col / 2, top - 6, grid.columns[c], "middle");
  }
  for (std::size_t r = 0; r < grid.rows.size(); ++r) {
    const int y = top + row * static_cast<int>(r);
    out += text_at(10, y + row / 2 + 4, grid.rows[r]);
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
      const int x = left + col * static_cast<int>(c);
      const int n = grid.successes[r][c];
      const double f = grid.repeats > 0 ? static_cast<double>(n) / grid.repeats : 0;
      out += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" + std::to_string(col) +
             "\" height=\"" + std::to_string(row) + "\" fill=\"" + shade(f) + "\" stroke=\"white\"/>\n";
      out += text_at(x + col / 2, y + row / 2 + 4, std::to_string(n) + "/" + std::to_string(grid.repeats), "middle",
                     f > 0.5 ? " fill=\"white\"" : "");
    }
  }
  return out + "</svg>\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << content;
  if (!f) throw Error("cannot write " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError(path, "cannot open file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace skillforge::runner
