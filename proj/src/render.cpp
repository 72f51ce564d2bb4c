#include "numaff/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "numaff/error.hpp"

namespace numaff {

namespace {

std::uint8_t lerp_channel(std::uint8_t lo, std::uint8_t hi, double t) {
    const double v = static_cast<double>(lo) + t * (static_cast<double>(hi) - static_cast<double>(lo));
    return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string num(double v) { return fmt("%.2f", v); }

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string svg_open(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\">\n" +
           "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"#ffffff\"/>\n";
}

std::string line(double x1, double y1, double x2, double y2) {
    return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
           "\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor, double size,
                 const std::string& extra = {}) {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) + "\" text-anchor=\"" +
           anchor + "\"" + extra + ">" + xml_escape(s) + "</text>\n";
}

std::string heatmap_impl(const SimilarityMatrix& m, const std::vector<std::size_t>& order) {
    constexpr double cell = 40, margin = 130, legend_w = 20, pad = 20;
    const double n = static_cast<double>(order.size());
    const double grid = cell * n;
    const double width = margin + grid + pad + legend_w + 60;
    const double height = margin + grid + pad;

    std::string out = svg_open(width, height);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const double y = margin + cell * static_cast<double>(r);
        out += text(margin - 6, y + cell / 2 + 4, m.names[order[r]], "end", 12);
        const double x = margin + cell * static_cast<double>(r) + cell / 2;
        out += text(x, margin - 6, m.names[order[r]], "start", 12,
                    " transform=\"rotate(-60 " + num(x) + " " + num(margin - 6) + ")\"");
    }
    for (std::size_t r = 0; r < order.size(); ++r) {
        for (std::size_t c = 0; c < order.size(); ++c) {
            const double v = m.at(order[r], order[c]);
            const double x = margin + cell * static_cast<double>(c);
            const double y = margin + cell * static_cast<double>(r);
            out += "<rect class=\"cell\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) +
                   "\" height=\"" + num(cell) + "\" fill=\"" + hex_color(heat_color(v)) + "\"/>\n";
            const char* ink = v < 0.5 ? "#ffffff" : "#000000";
            out += text(x + cell / 2, y + cell / 2 + 4, fmt("%.2f", v), "middle", 10,
                        std::string(" fill=\"") + ink + "\"");
        }
    }
    // Legend: 11 stops from 1 (top) to 0 (bottom).
    const double lx = margin + grid + pad;
    const double step = grid / 11.0;
    for (int k = 0; k <= 10; ++k) {
        const double v = 1.0 - k / 10.0;
        const double y = margin + step * k;
        out += "<rect x=\"" + num(lx) + "\" y=\"" + num(y) + "\" width=\"" + num(legend_w) + "\" height=\"" +
               num(step) + "\" fill=\"" + hex_color(heat_color(v)) + "\"/>\n";
        if (k % 5 == 0) out += text(lx + legend_w + 4, y + step / 2 + 4, fmt("%.1f", v), "start", 10);
    }
    out += "</svg>\n";
    return out;
}

} // namespace

Rgb heat_color(double similarity) {
    const double t = std::clamp(similarity, 0.0, 1.0);
    return {lerp_channel(kRampLow.r, kRampHigh.r, t), lerp_channel(kRampLow.g, kRampHigh.g, t),
            lerp_channel(kRampLow.b, kRampHigh.b, t)};
}

std::string hex_color(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

void require_consistent(const SimilarityMatrix& matrix, const Dendrogram& tree) {
    const std::set<std::string> a(matrix.names.begin(), matrix.names.end());
    const std::set<std::string> b(tree.names.begin(), tree.names.end());
    if (a != b || matrix.names.size() != tree.names.size())
        throw Error(Errc::name_mismatch, "matrix and tree name different datasets");
}

std::string heatmap_svg(const SimilarityMatrix& matrix, const Dendrogram& tree) {
    validate_matrix(matrix);
    validate_dendrogram(tree);
    require_consistent(matrix, tree);
    std::vector<std::size_t> order;
    for (std::size_t leaf : tree.leaf_order()) order.push_back(matrix.index_of(tree.names[leaf]));
    return heatmap_impl(matrix, order);
}

std::string heatmap_svg(const SimilarityMatrix& matrix) {
    validate_matrix(matrix);
    std::vector<std::size_t> order(matrix.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    return heatmap_impl(matrix, order);
}

std::string dendrogram_svg(const Dendrogram& tree) {
    validate_dendrogram(tree);
    constexpr double row = 28, label_w = 140, plot_w = 420, top = 20, axis_h = 50;
    const std::size_t m = tree.leaf_count();
    const auto order = tree.leaf_order();

    auto height_of = [&](std::size_t node) {
        return node < m ? 0.0 : 1.0 - tree.merge_of(node).similarity;
    };
    double hmax = m > 1 ? height_of(tree.root_id()) : 0.0;
    if (!(hmax > 0.0)) hmax = 1.0;
    auto x_of = [&](double h) { return label_w + plot_w * h / hmax; };

    std::vector<double> y(2 * m - 1, 0.0);
    for (std::size_t k = 0; k < order.size(); ++k) y[order[k]] = top + row * (static_cast<double>(k) + 0.5);

    const double height = top + row * static_cast<double>(m) + axis_h;
    std::string out = svg_open(label_w + plot_w + 40, height);
    for (std::size_t leaf = 0; leaf < m; ++leaf)
        out += text(label_w - 8, y[leaf] + 4, tree.names[leaf], "end", 12);
    for (std::size_t k = 0; k < tree.merges.size(); ++k) {
        const auto& r = tree.merges[k];
        const std::size_t node = m + k;
        y[node] = (y[r.left] + y[r.right]) / 2;
        const double xn = x_of(height_of(node));
        out += line(x_of(height_of(r.left)), y[r.left], xn, y[r.left]);
        out += line(x_of(height_of(r.right)), y[r.right], xn, y[r.right]);
        out += line(xn, y[r.left], xn, y[r.right]);
    }
    const double ay = top + row * static_cast<double>(m) + 10;
    out += line(x_of(0), ay, x_of(hmax), ay);
    for (int k = 0; k <= 4; ++k) {
        const double h = hmax * k / 4.0;
        out += line(x_of(h), ay, x_of(h), ay + 5);
        out += text(x_of(h), ay + 18, fmt("%.3f", h), "middle", 10);
    }
    out += text(x_of(hmax / 2), ay + 36, "height = 1 - similarity", "middle", 11);
    out += "</svg>\n";
    return out;
}

std::string dendrogram_ascii(const Dendrogram& tree) {
    validate_dendrogram(tree);
    const std::size_t m = tree.leaf_count();
    std::string out;
    std::function<void(std::size_t, const std::string&, bool, bool)> walk =
        [&](std::size_t node, const std::string& prefix, bool root, bool last) {
            const std::string branch = root ? "" : (last ? "`-- " : "|-- ");
            if (node < m) {
                out += prefix + branch + tree.names[node] + "\n";
                return;
            }
            const auto& r = tree.merge_of(node);
            out += prefix + branch + fmt("[s=%.4f", r.similarity) + fmt(" h=%.4f]", 1.0 - r.similarity) + "\n";
            const std::string child_prefix = prefix + (root ? "" : (last ? "    " : "|   "));
            walk(r.left, child_prefix, false, false);
            walk(r.right, child_prefix, false, true);
        };
    walk(m > 1 ? tree.root_id() : 0, "", true, true);
    return out;
}

} // namespace numaff
