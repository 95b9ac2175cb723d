#include "sindy/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sindy::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

void header(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(title)
       << "</text>\n";
}

void axis_labels(std::ostringstream& os, const std::string& xlabel, const std::string& ylabel) {
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
       << esc(xlabel) << "</text>\n"
       << "<text transform=\"translate(18," << kTop + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << esc(ylabel) << "</text>\n";
}

}  // namespace

std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<double>& x, const std::vector<Series>& series, bool log_x) {
    if (x.empty()) throw std::invalid_argument("line plot needs at least one x value");
    for (const auto& s : series)
        if (s.y.size() != x.size()) throw std::invalid_argument("series '" + s.name + "' has the wrong length");
    auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
    double x0 = tx(x.front()), x1 = tx(x.front());
    for (double v : x) {
        x0 = std::min(x0, tx(v));
        x1 = std::max(x1, tx(v));
    }
    double y0 = 0.0, y1 = 1.0;
    for (const auto& s : series)
        for (double v : s.y)
            if (std::isfinite(v)) {
                y0 = std::min(y0, v);
                y1 = std::max(y1, v);
            }
    if (x1 == x0) x1 = x0 + 1.0;
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (tx(v) - x0) / (x1 - x0) * plot_w; };
    auto py = [&](double v) { return kTop + plot_h - (v - y0) / (y1 - y0) * plot_h; };

    std::ostringstream os;
    header(os, title);
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << plot_h
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = y0 + (y1 - y0) * i / 4.0;
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">" << tick(v) << "</text>\n";
    }
    for (double v : x)
        os << "<text x=\"" << px(v) << "\" y=\"" << kTop + plot_h + 16 << "\" text-anchor=\"middle\">" << tick(v)
           << "</text>\n";
    axis_labels(os, xlabel, ylabel);

    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* colour = kPalette[k % std::size(kPalette)];
        std::string path;
        bool pen = false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = series[k].y[i];
            if (!std::isfinite(v)) {
                pen = false;
                continue;
            }
            char buf[64];
            std::snprintf(buf, sizeof buf, "%c%.2f,%.2f ", pen ? 'L' : 'M', px(x[i]), py(v));
            path += buf;
            pen = true;
            os << "<circle cx=\"" << px(x[i]) << "\" cy=\"" << py(v) << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
        }
        if (!path.empty())
            os << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << kWidth - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 32
           << "\" y2=\"" << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly + 4 << "\">" << esc(series[k].name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string heat_map(const std::string& title, const std::string& row_label, const std::string& col_label,
                     const std::vector<double>& rows, const std::vector<double>& cols, const Matrix& values) {
    if (values.rows() != static_cast<Eigen::Index>(rows.size()) || values.cols() != static_cast<Eigen::Index>(cols.size()))
        throw std::invalid_argument("heat map values do not match the axes");
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    const double cw = plot_w / std::max<std::size_t>(cols.size(), 1);
    const double ch = plot_h / std::max<std::size_t>(rows.size(), 1);

    std::ostringstream os;
    header(os, title);
    os << "<defs><pattern id=\"invalid\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
          "<path d=\"M0,6 L6,0\" stroke=\"#d62728\"/></pattern></defs>\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double v = values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            const double x = kLeft + cw * static_cast<double>(c);
            const double y = kTop + plot_h - ch * static_cast<double>(r + 1);
            std::string fill = "url(#invalid)";
            if (std::isfinite(v)) {
                const int g = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
                char buf[16];
                std::snprintf(buf, sizeof buf, "#%02x%02x%02x", g, g, g);
                fill = buf;
            }
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\""
               << fill << "\" stroke=\"#888\" stroke-width=\"0.5\"/>\n";
        }
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + plot_h - ch * (static_cast<double>(r) + 0.5) + 4
           << "\" text-anchor=\"end\">" << tick(rows[r]) << "</text>\n";
    }
    for (std::size_t c = 0; c < cols.size(); ++c)
        os << "<text x=\"" << kLeft + cw * (static_cast<double>(c) + 0.5) << "\" y=\"" << kTop + plot_h + 16
           << "\" text-anchor=\"middle\">" << tick(cols[c]) << "</text>\n";
    axis_labels(os, col_label, row_label);
    os << "<text x=\"" << kWidth - kRight + 12 << "\" y=\"" << kTop + 14 << "\">white = 1, black = 0</text>\n"
       << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << kTop + 24 << "\" width=\"14\" height=\"14\" "
       << "fill=\"url(#invalid)\" stroke=\"#888\"/><text x=\"" << kWidth - kRight + 32 << "\" y=\"" << kTop + 36
       << "\">invalid</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace sindy::svg
