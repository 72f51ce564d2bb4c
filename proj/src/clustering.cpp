#include "numaff/clustering.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

#include "json.hpp"

#include "numaff/error.hpp"

namespace numaff {

const MergeRecord& Dendrogram::merge_of(std::size_t node) const {
    if (node < names.size() || node - names.size() >= merges.size())
        throw Error(Errc::invalid_argument, "node " + std::to_string(node) + " is not an internal node");
    return merges[node - names.size()];
}

std::vector<std::size_t> Dendrogram::leaves_under(std::size_t node) const {
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
        const std::size_t n = stack.back();
        stack.pop_back();
        if (n < names.size()) {
            out.push_back(n);
        } else {
            const auto& m = merge_of(n);
            stack.push_back(m.left);
            stack.push_back(m.right);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> Dendrogram::leaf_order() const {
    std::vector<std::size_t> out;
    if (names.size() == 1) return {0};
    std::function<void(std::size_t)> walk = [&](std::size_t n) {
        if (n < names.size()) {
            out.push_back(n);
            return;
        }
        const auto& m = merge_of(n);
        walk(m.left);
        walk(m.right);
    };
    walk(root_id());
    return out;
}

namespace {

void require_clusterable(const SimilarityMatrix& matrix) {
    validate_matrix(matrix);
    if (matrix.size() < 2) throw Error(Errc::invalid_argument, "clustering needs at least 2 datasets");
}

} // namespace

Dendrogram upgma_cluster(const SimilarityMatrix& matrix) {
    require_clusterable(matrix);
    const std::size_t m = matrix.size();
    const std::size_t total = 2 * m - 1;

    // phi[i][j] for active cluster ids; sizes per id.
    std::vector<std::vector<double>> phi(total, std::vector<double>(total, 0.0));
    std::vector<std::size_t> size(total, 0);
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < m; ++i) {
        size[i] = 1;
        active.push_back(i);
        for (std::size_t j = 0; j < m; ++j) phi[i][j] = matrix.at(i, j);
    }

    Dendrogram tree{matrix.names, {}};
    for (std::size_t next = m; next < total; ++next) {
        // `active` stays sorted, so the first strict maximum is the
        // lexicographically smallest tied pair.
        std::size_t bi = 0, bj = 0;
        double best = -1.0;
        for (std::size_t x = 0; x < active.size(); ++x)
            for (std::size_t y = x + 1; y < active.size(); ++y) {
                const double v = phi[active[x]][active[y]];
                if (v > best) {
                    best = v;
                    bi = active[x];
                    bj = active[y];
                }
            }

        size[next] = size[bi] + size[bj];
        const double wi = static_cast<double>(size[bi]), wj = static_cast<double>(size[bj]);
        for (std::size_t c : active) {
            if (c == bi || c == bj) continue;
            const double v = (wi * phi[bi][c] + wj * phi[bj][c]) / (wi + wj);
            phi[next][c] = v;
            phi[c][next] = v;
        }
        tree.merges.push_back({bi, bj, best, size[next]});
        std::erase(active, bi);
        std::erase(active, bj);
        active.push_back(next);
    }
    return tree;
}

Dendrogram brute_force_upgma(const SimilarityMatrix& matrix) {
    require_clusterable(matrix);
    const std::size_t m = matrix.size();
    if (m > 10) throw Error(Errc::invalid_argument, "brute_force_upgma is limited to 10 datasets");

    struct Cluster {
        std::size_t id;
        std::vector<std::size_t> leaves;
    };
    std::vector<Cluster> clusters;
    for (std::size_t i = 0; i < m; ++i) clusters.push_back({i, {i}});

    auto linkage = [&](const Cluster& a, const Cluster& b) {
        double sum = 0.0;
        for (std::size_t x : a.leaves)
            for (std::size_t y : b.leaves) sum += matrix.at(x, y);
        return sum / static_cast<double>(a.leaves.size() * b.leaves.size());
    };

    Dendrogram tree{matrix.names, {}};
    std::size_t next = m;
    while (clusters.size() > 1) {
        std::size_t bx = 0, by = 1;
        double best = -1.0;
        for (std::size_t x = 0; x < clusters.size(); ++x)
            for (std::size_t y = 0; y < clusters.size(); ++y) {
                if (clusters[x].id >= clusters[y].id) continue;
                const double v = linkage(clusters[x], clusters[y]);
                const bool better =
                    v > best || (v == best && std::pair(clusters[x].id, clusters[y].id) <
                                                  std::pair(clusters[bx].id, clusters[by].id));
                if (better) {
                    best = v;
                    bx = x;
                    by = y;
                }
            }
        Cluster merged{next, clusters[bx].leaves};
        merged.leaves.insert(merged.leaves.end(), clusters[by].leaves.begin(), clusters[by].leaves.end());
        std::sort(merged.leaves.begin(), merged.leaves.end());
        tree.merges.push_back({clusters[bx].id, clusters[by].id, best, merged.leaves.size()});
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(std::max(bx, by)));
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(std::min(bx, by)));
        clusters.push_back(std::move(merged));
        ++next;
    }
    return tree;
}

void validate_dendrogram(const Dendrogram& tree) {
    const std::size_t m = tree.names.size();
    if (m < 1) throw Error(Errc::invalid_argument, "dendrogram has no leaves");
    if (tree.merges.size() + 1 != m)
        throw Error(Errc::invalid_argument, "dendrogram over " + std::to_string(m) + " leaves needs " +
                                                std::to_string(m - 1) + " merges, has " +
                                                std::to_string(tree.merges.size()));
    std::vector<std::size_t> size(2 * m - 1, 0);
    std::vector<bool> consumed(2 * m - 1, false);
    for (std::size_t i = 0; i < m; ++i) size[i] = 1;
    for (std::size_t k = 0; k < tree.merges.size(); ++k) {
        const auto& r = tree.merges[k];
        const std::size_t id = m + k;
        if (r.left >= r.right || r.right >= id || consumed[r.left] || consumed[r.right])
            throw Error(Errc::invalid_argument, "merge " + std::to_string(k) + " references invalid children");
        if (r.size != size[r.left] + size[r.right])
            throw Error(Errc::invalid_argument, "merge " + std::to_string(k) + " has inconsistent size");
        consumed[r.left] = consumed[r.right] = true;
        size[id] = r.size;
    }
}

namespace {

std::string fixed6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// Six decimals with trailing zeros (and a bare point) removed.
std::string branch_length(double v) {
    if (v < 0 && v > -5e-7) v = 0.0;
    std::string s = fixed6(v);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

std::string newick_label(const std::string& name) {
    if (name.find_first_of(" ()[]':;,\t\r\n") == std::string::npos) return name;
    std::string q = "'";
    for (char c : name) {
        if (c == '\'') q += '\'';
        q += c;
    }
    return q + "'";
}

} // namespace

std::string to_newick(const Dendrogram& tree) {
    validate_dendrogram(tree);
    const std::size_t m = tree.names.size();
    if (m == 1) return newick_label(tree.names[0]) + ";";

    auto height = [&](std::size_t node) {
        return node < m ? 0.0 : 1.0 - tree.merge_of(node).similarity;
    };
    std::function<std::string(std::size_t)> emit = [&](std::size_t node) -> std::string {
        if (node < m) return newick_label(tree.names[node]);
        const auto& r = tree.merge_of(node);
        const double h = height(node);
        return "(" + emit(r.left) + ":" + branch_length(h - height(r.left)) + "," + emit(r.right) + ":" +
               branch_length(h - height(r.right)) + ")" + fixed6(r.similarity);
    };
    return emit(tree.root_id()) + ";";
}

std::string dendrogram_json(const Dendrogram& tree) {
    validate_dendrogram(tree);
    nlohmann::ordered_json j;
    j["leaves"] = tree.names;
    nlohmann::ordered_json merges = nlohmann::ordered_json::array();
    for (const auto& r : tree.merges)
        merges.push_back({{"left", r.left}, {"right", r.right}, {"similarity", r.similarity}, {"size", r.size}});
    j["merges"] = merges;
    return j.dump(2) + "\n";
}

Dendrogram parse_dendrogram_json(std::string_view text) {
    Dendrogram tree;
    try {
        const auto j = nlohmann::json::parse(text);
        tree.names = j.at("leaves").get<std::vector<std::string>>();
        for (const auto& r : j.at("merges"))
            tree.merges.push_back({r.at("left").get<std::size_t>(), r.at("right").get<std::size_t>(),
                                   r.at("similarity").get<double>(), r.at("size").get<std::size_t>()});
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::decode, std::string("dendrogram json: ") + e.what());
    }
    try {
        validate_dendrogram(tree);
    } catch (const Error& e) {
        throw Error(Errc::decode, std::string("dendrogram json: ") + e.what());
    }
    return tree;
}

} // namespace numaff
