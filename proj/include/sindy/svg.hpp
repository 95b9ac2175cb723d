#pragma once

#include <string>
#include <vector>

#include "sindy/library.hpp"

namespace sindy::svg {

struct Series {
    std::string name;
    std::vector<double> y;
};

/// Line chart with axes, tick labels and a legend. NaN points break the line.
std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<double>& x, const std::vector<Series>& series, bool log_x = false);

/// Grey-scale map: white = 1, black = 0, hatched red = NaN (invalid cell).
std::string heat_map(const std::string& title, const std::string& row_label, const std::string& col_label,
                     const std::vector<double>& rows, const std::vector<double>& cols, const Matrix& values);

}  // namespace sindy::svg
