#pragma once

#include <optional>
#include <string>
#include <vector>

namespace xconsist::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Static line chart with markers; NaN points are skipped.
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       std::optional<std::pair<double, double>> y_range = std::nullopt);

// values[row][col]; rows drawn bottom-up so row 0 sits at the bottom.
std::string heatmap(const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<double>& col_values,
                    const std::vector<double>& row_values,
                    const std::vector<std::vector<double>>& values);

// Scatter points plus an optional fitted line y = slope * x + intercept.
std::string scatter_with_fit(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<double>& x,
                             const std::vector<double>& y,
                             std::optional<std::pair<double, double>> line);

}  // namespace xconsist::svg
