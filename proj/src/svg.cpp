#include "ditchkit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ditchkit/error.hpp"

namespace ditchkit::svg {

namespace {

// Blue-white-red ramp over [0, 1].
std::string colour(double t) {
    t = std::clamp(t, 0.0, 1.0);
    int r, g, b;
    if (t < 0.5) {
        const double s = t / 0.5;
        r = static_cast<int>(59 + s * (245 - 59));
        g = static_cast<int>(76 + s * (245 - 76));
        b = static_cast<int>(192 + s * (245 - 192));
    } else {
        const double s = (t - 0.5) / 0.5;
        r = static_cast<int>(245 + s * (180 - 245));
        g = static_cast<int>(245 + s * (4 - 245));
        b = static_cast<int>(245 + s * (38 - 245));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

void save(const std::filesystem::path& path, const std::string& body) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw FormatError(FormatErrc::io, "cannot create " + path.string());
    out << body;
}

}  // namespace

void heatmap(const std::filesystem::path& path, std::span<const double> values, std::size_t H, std::size_t W,
             const HeatmapOptions& opts) {
    if (values.size() != H * W) throw ShapeError("heatmap: value count is not H*W");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (opts.mask_below && v < *opts.mask_below) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (opts.vmin) lo = *opts.vmin;
    if (opts.vmax) hi = *opts.vmax;
    if (!(hi > lo)) hi = lo + 1.0;

    const double c = opts.cell, top = 30.0, left = 10.0;
    const double width = left + W * c + 80.0, height = top + H * c + 20.0;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    s << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << escape(opts.title)
      << "</text>\n";
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
            const double v = values[i * W + j];
            if (opts.mask_below && v < *opts.mask_below) continue;
            s << "<rect x=\"" << left + j * c << "\" y=\"" << top + i * c << "\" width=\"" << c << "\" height=\"" << c
              << "\" fill=\"" << colour((v - lo) / (hi - lo)) << "\"/>\n";
        }
    const double bx = left + W * c + 15.0, bh = H * c;
    for (int k = 0; k < 50; ++k)
        s << "<rect x=\"" << bx << "\" y=\"" << top + bh * (1.0 - (k + 1) / 50.0) << "\" width=\"12\" height=\""
          << bh / 50.0 + 0.5 << "\" fill=\"" << colour((k + 0.5) / 50.0) << "\"/>\n";
    s << "<text x=\"" << bx + 16 << "\" y=\"" << top + 10 << "\" font-family=\"sans-serif\" font-size=\"10\">" << hi
      << "</text>\n";
    s << "<text x=\"" << bx + 16 << "\" y=\"" << top + bh << "\" font-family=\"sans-serif\" font-size=\"10\">" << lo
      << "</text>\n";
    s << "</svg>\n";
    save(path, s.str());
}

void line_plot(const std::filesystem::path& path, const std::vector<Series>& series, const std::string& title,
               const std::string& xlabel, const std::string& ylabel) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};
    double ymax = 0.0;
    std::size_t n = 1;
    for (const auto& sr : series) {
        n = std::max(n, sr.y.size());
        for (double v : sr.y)
            if (std::isfinite(v)) ymax = std::max(ymax, v);
    }
    if (ymax <= 0.0) ymax = 1.0;
    const double L = 60, T = 30, Wp = 480, Hp = 280;
    auto px = [&](std::size_t i) { return L + Wp * (n > 1 ? static_cast<double>(i) / (n - 1) : 0.0); };
    auto py = [&](double v) { return T + Hp * (1.0 - v / ymax); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << L + Wp + 140 << "\" height=\"" << T + Hp + 50
      << "\">\n";
    s << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title) << "</text>\n";
    s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << Wp << "\" height=\"" << Hp
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    s << "<text x=\"" << L + Wp / 2 << "\" y=\"" << T + Hp + 35 << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << escape(xlabel) << "</text>\n";
    s << "<text x=\"5\" y=\"" << T + Hp / 2 << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(ylabel)
      << "</text>\n";
    s << "<text x=\"" << L - 5 << "\" y=\"" << T + 10 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << ymax << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* col = palette[k % 7];
        s << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[k].y.size(); ++i)
            if (std::isfinite(series[k].y[i])) s << px(i) << ',' << py(series[k].y[i]) << ' ';
        s << "\"/>\n";
        s << "<text x=\"" << L + Wp + 10 << "\" y=\"" << T + 15 + 15 * k << "\" fill=\"" << col
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(series[k].label) << "</text>\n";
    }
    s << "</svg>\n";
    save(path, s.str());
}

}  // namespace ditchkit::svg
