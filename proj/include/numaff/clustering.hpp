#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "numaff/simmatrix.hpp"

namespace numaff {

/// One agglomeration step. Leaves are ids 0..M-1; the node created by merge
/// k gets id M + k. left < right always.
struct MergeRecord {
    std::size_t left;
    std::size_t right;
    double similarity; ///< average-linkage similarity at which the two joined
    std::size_t size;  ///< leaves under the new node

    friend bool operator==(const MergeRecord&, const MergeRecord&) = default;
};

struct Dendrogram {
    std::vector<std::string> names;
    std::vector<MergeRecord> merges;

    std::size_t leaf_count() const { return names.size(); }
    std::size_t root_id() const { return 2 * names.size() - 2; }
    /// Children of an internal node; throws for leaves.
    const MergeRecord& merge_of(std::size_t node) const;
    /// Leaf ids under `node`, ascending.
    std::vector<std::size_t> leaves_under(std::size_t node) const;
    /// Leaf ids in drawing order (left subtree first).
    std::vector<std::size_t> leaf_order() const;
};

/// Similarity-based UPGMA: repeatedly joins the pair of clusters with the
/// highest average pairwise similarity, maintained incrementally as
///   phi(A u B, C) = (|A| phi(A, C) + |B| phi(B, C)) / (|A| + |B|).
/// Ties go to the lexicographically smallest (left, right) id pair.
Dendrogram upgma_cluster(const SimilarityMatrix& matrix);

/// Reference implementation recomputing every phi from leaf pairs at every
/// step. Limited to M <= 10.
Dendrogram brute_force_upgma(const SimilarityMatrix& matrix);

/// Newick with node height 1 - similarity; branch lengths are parent height
/// minus child height, internal nodes labeled with their similarity.
std::string to_newick(const Dendrogram& tree);

/// {"leaves": [...], "merges": [{"left", "right", "similarity", "size"}, ...]}
std::string dendrogram_json(const Dendrogram& tree);

/// Parses dendrogram_json output; Errc::decode on malformed or inconsistent input.
Dendrogram parse_dendrogram_json(std::string_view text);

/// Throws Errc::invalid_argument unless `tree` is a complete binary merge
/// history over its leaves.
void validate_dendrogram(const Dendrogram& tree);

} // namespace numaff
