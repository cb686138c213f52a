#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace relaxoc::io {

/// %.17g text (17 significant digits).
std::string fmt17(double v);

/// Writes to a temporary sibling and renames it over path.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// RFC 4180 table (CRLF line endings, fields quoted when needed).
std::string csv(const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// SVG 1.1 document with one polyline per series on log-log axes.
/// Nonpositive values are skipped.
std::string svg_loglog(const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const std::vector<Series>& series);

}  // namespace relaxoc::io
