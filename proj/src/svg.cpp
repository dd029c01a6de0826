#include "dlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dlab::svg {

namespace {

constexpr double kWidth = 560, kHeight = 360;
constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

struct Canvas {
    std::ofstream os;
    explicit Canvas(const std::string& path) : os(path) {
        if (!os) throw std::runtime_error("cannot write " + path);
        os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
           << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
           << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 12,
              const std::string& anchor = "start", const std::string& color = "#222") {
        os << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
           << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\" fill=\"" << color
           << "\">" << escape(s) << "</text>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width = 1.0, bool dashed = false) {
        os << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
           << "\" y2=\"" << num(y2) << "\" stroke=\"" << color << "\" stroke-width=\""
           << num(width) << "\"";
        if (dashed) os << " stroke-dasharray=\"5,4\"";
        os << "/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill) {
        os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
           << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
    }
    void polyline(const std::string& points, const std::string& color) {
        os << "<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
    }
    void close() { os << "</svg>\n"; }
};

struct Scale {
    double lo, hi, pix_lo, pix_hi;
    double operator()(double v) const {
        if (hi == lo) return 0.5 * (pix_lo + pix_hi);
        return pix_lo + (v - lo) / (hi - lo) * (pix_hi - pix_lo);
    }
};

void draw_axes(Canvas& c, const Scale& sx, const Scale& sy, const std::string& x_label,
               const std::string& y_label) {
    c.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "#444");
    c.line(kLeft, kTop, kLeft, kHeight - kBottom, "#444");
    for (int i = 0; i <= 4; ++i) {
        const double fx = sx.lo + (sx.hi - sx.lo) * i / 4.0;
        const double fy = sy.lo + (sy.hi - sy.lo) * i / 4.0;
        c.text(sx(fx), kHeight - kBottom + 16, num(fx), 10, "middle");
        c.text(kLeft - 6, sy(fy) + 4, num(fy), 10, "end");
    }
    c.text((kLeft + kWidth - kRight) / 2, kHeight - 12, x_label, 12, "middle");
    c.text(16, kTop - 10, y_label, 12, "start");
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series, const std::string& x_label,
                      const std::string& y_label) {
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xlo = xhi = s.x[i];
                ylo = yhi = s.y[i];
                first = false;
            }
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    if (yhi == ylo) yhi = ylo + 1.0;

    Canvas c(path);
    c.text(kWidth / 2, 22, title, 14, "middle");
    Scale sx{xlo, xhi, kLeft, kWidth - kRight};
    Scale sy{ylo, yhi, kHeight - kBottom, kTop};
    draw_axes(c, sx, sy, x_label, y_label);
    double ly = kTop + 6;
    for (const auto& s : series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            pts += num(sx(s.x[i])) + "," + num(sy(s.y[i])) + " ";
        }
        c.polyline(pts, s.color);
        c.line(kWidth - kRight - 120, ly, kWidth - kRight - 100, ly, s.color, 2.0);
        c.text(kWidth - kRight - 95, ly + 4, s.label, 10);
        ly += 14;
    }
    c.close();
}

void write_histogram(const std::string& path, const std::string& title,
                     const std::vector<HistogramPanel>& panels) {
    std::size_t max_count = 1;
    std::size_t bins = 1;
    for (const auto& p : panels) {
        bins = std::max(bins, p.counts.size());
        for (std::size_t v : p.counts) max_count = std::max(max_count, v);
    }
    Canvas c(path);
    c.text(kWidth / 2, 22, title, 14, "middle");
    Scale sx{0.0, 1.0, kLeft, kWidth - kRight};
    Scale sy{0.0, static_cast<double>(max_count), kHeight - kBottom, kTop};
    draw_axes(c, sx, sy, "predicted risk", "count");
    const double bw = (kWidth - kLeft - kRight) / static_cast<double>(bins);
    double ly = kTop + 6;
    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const auto& p = panels[pi];
        const double sub = bw / static_cast<double>(panels.size());
        for (std::size_t b = 0; b < p.counts.size(); ++b) {
            const double h = sy(0.0) - sy(static_cast<double>(p.counts[b]));
            c.rect(kLeft + bw * static_cast<double>(b) + sub * static_cast<double>(pi),
                   sy(static_cast<double>(p.counts[b])), sub * 0.9, h, p.color);
        }
        c.rect(kWidth - kRight - 120, ly - 8, 14, 10, p.color);
        c.text(kWidth - kRight - 100, ly, p.label, 10);
        ly += 14;
    }
    c.close();
}

void write_bar_pairs(const std::string& path, const std::string& title,
                     const std::vector<BarPair>& bars, const std::string& left_label,
                     const std::string& right_label) {
    Canvas c(path);
    c.text(kWidth / 2, 22, title, 14, "middle");
    Scale sy{0.0, 1.0, kHeight - kBottom, kTop};
    c.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "#444");
    c.line(kLeft, kTop, kLeft, kHeight - kBottom, "#444");
    for (int i = 0; i <= 4; ++i) {
        const double fy = i / 4.0;
        c.text(kLeft - 6, sy(fy) + 4, num(fy), 10, "end");
    }
    const double group_w = (kWidth - kLeft - kRight) / std::max<std::size_t>(1, bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double x0 = kLeft + group_w * static_cast<double>(i) + group_w * 0.15;
        const double bw = group_w * 0.3;
        if (bars[i].valid) {
            c.rect(x0, sy(bars[i].left), bw, sy(0) - sy(bars[i].left), "#4477aa");
            c.rect(x0 + bw + 2, sy(bars[i].right), bw, sy(0) - sy(bars[i].right), "#ee6677");
        } else {
            c.text(x0 + bw, sy(0.5), "N/A", 10, "middle", "#999");
        }
        c.text(x0 + bw, kHeight - kBottom + 16, bars[i].label, 10, "middle");
    }
    c.rect(kWidth - kRight - 140, kTop + 0, 14, 10, "#4477aa");
    c.text(kWidth - kRight - 120, kTop + 8, left_label, 10);
    c.rect(kWidth - kRight - 140, kTop + 16, 14, 10, "#ee6677");
    c.text(kWidth - kRight - 120, kTop + 24, right_label, 10);
    c.close();
}

}  // namespace dlab::svg
