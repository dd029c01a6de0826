#pragma once

#include <string>
#include <vector>

namespace dlab::svg {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
};

// simple line chart with axes and a legend
void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series, const std::string& x_label,
                      const std::string& y_label);

struct HistogramPanel {
    std::string label;
    std::string color;
    std::vector<std::size_t> counts;  // uniform bins over [0,1]
};

void write_histogram(const std::string& path, const std::string& title,
                     const std::vector<HistogramPanel>& panels);

struct BarPair {
    std::string label;
    double left = 0.0;   // group 0
    double right = 0.0;  // group 1
    bool valid = true;
};

void write_bar_pairs(const std::string& path, const std::string& title,
                     const std::vector<BarPair>& bars, const std::string& left_label,
                     const std::string& right_label);

}  // namespace dlab::svg
