#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "doctest.h"
#include "support.hpp"

#include "numaff/error.hpp"
#include "numaff/clustering.hpp"

using namespace numaff;

namespace {

SimilarityMatrix random_matrix(Rng& rng, std::size_t m) {
    SimilarityMatrix s;
    for (std::size_t i = 0; i < m; ++i) s.names.push_back("d" + std::to_string(i));
    s.values.assign(m * m, 1.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) s.at(i, j) = s.at(j, i) = rng.uniform01();
    return s;
}

SimilarityMatrix worked_example() {
    return {{"A", "B", "C"}, {1, 0.9, 0.2, 0.9, 1, 0.4, 0.2, 0.4, 1}};
}

// Leaf-name set of every internal node.
std::set<std::set<std::string>> clades(const Dendrogram& t) {
    std::set<std::set<std::string>> out;
    for (std::size_t k = 0; k < t.merges.size(); ++k) {
        std::set<std::string> names;
        for (std::size_t leaf : t.leaves_under(t.leaf_count() + k)) names.insert(t.names[leaf]);
        out.insert(names);
    }
    return out;
}

// Root-to-leaf path length under h = 1 - s.
std::vector<double> leaf_depths(const Dendrogram& t) {
    const std::size_t m = t.leaf_count();
    std::vector<double> depth(m, 0.0);
    auto h = [&](std::size_t n) { return n < m ? 0.0 : 1.0 - t.merge_of(n).similarity; };
    std::function<void(std::size_t, double)> walk = [&](std::size_t n, double acc) {
        if (n < m) {
            depth[n] = acc;
            return;
        }
        const auto& r = t.merge_of(n);
        walk(r.left, acc + h(n) - h(r.left));
        walk(r.right, acc + h(n) - h(r.right));
    };
    walk(t.root_id(), 0.0);
    return depth;
}

} // namespace

TEST_SUITE("clustering") {

TEST_CASE("two leaves merge once") {
    const SimilarityMatrix s{{"A", "B"}, {1, 0.7, 0.7, 1}};
    const Dendrogram t = upgma_cluster(s);
    REQUIRE(t.merges.size() == 1);
    CHECK(t.merges[0] == MergeRecord{0, 1, 0.7, 2});
    CHECK(brute_force_upgma(s).merges == t.merges);
    CHECK(to_newick(t) == "(A:0.3,B:0.3)0.700000;");
}

TEST_CASE("worked three-leaf example") {
    const Dendrogram t = upgma_cluster(worked_example());
    REQUIRE(t.merges.size() == 2);
    CHECK(t.merges[0].left == 0);
    CHECK(t.merges[0].right == 1);
    CHECK(t.merges[0].similarity == 0.9);
    CHECK(t.merges[1].left == 2);
    CHECK(t.merges[1].right == 3);
    CHECK(t.merges[1].similarity == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(t.merges[1].size == 3);
    const Dendrogram b = brute_force_upgma(worked_example());
    CHECK(b.merges.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(b.merges[k].left == t.merges[k].left);
        CHECK(b.merges[k].right == t.merges[k].right);
        CHECK(std::abs(b.merges[k].similarity - t.merges[k].similarity) <= 1e-12);
    }
    CHECK(to_newick(t) == "(C:0.7,(A:0.1,B:0.1)0.900000:0.6)0.300000;");
}

TEST_CASE("ties go to the smallest id pair") {
    const SimilarityMatrix s{{"a", "b", "c", "d"}, {1, 0.5, 0.5, 0.5, 0.5, 1, 0.5, 0.5, 0.5, 0.5, 1, 0.5, 0.5, 0.5, 0.5, 1}};
    const Dendrogram t = upgma_cluster(s);
    CHECK(t.merges[0] == MergeRecord{0, 1, 0.5, 2});
    CHECK(t.merges[1] == MergeRecord{2, 3, 0.5, 2});
    CHECK(t.merges[2] == MergeRecord{4, 5, 0.5, 4});
    CHECK(brute_force_upgma(s).merges == t.merges);
}

TEST_CASE("incremental equals brute force on random instances") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const SimilarityMatrix s = random_matrix(rng, 2 + rng.index(7));
        const Dendrogram a = upgma_cluster(s), b = brute_force_upgma(s);
        REQUIRE(a.merges.size() == b.merges.size());
        for (std::size_t k = 0; k < a.merges.size(); ++k) {
            CHECK(a.merges[k].left == b.merges[k].left);
            CHECK(a.merges[k].right == b.merges[k].right);
            CHECK(a.merges[k].size == b.merges[k].size);
            CHECK(std::abs(a.merges[k].similarity - b.merges[k].similarity) <= 1e-12);
            if (k) CHECK(a.merges[k].similarity <= a.merges[k - 1].similarity);
        }
        CHECK(a.merges.back().size == s.size());
    }
}

TEST_CASE("merge similarity is the mean over leaf pairs") {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const SimilarityMatrix s = random_matrix(rng, 3 + rng.index(6));
        const Dendrogram t = upgma_cluster(s);
        for (const auto& r : t.merges) {
            const auto l = t.leaves_under(r.left), rr = t.leaves_under(r.right);
            double sum = 0;
            for (auto i : l)
                for (auto j : rr) sum += s.at(i, j);
            CHECK(std::abs(r.similarity - sum / static_cast<double>(l.size() * rr.size())) <= 1e-12);
        }
    }
}

TEST_CASE("permuting leaves gives the same clades") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 3 + rng.index(6);
        const SimilarityMatrix s = random_matrix(rng, m);
        std::vector<std::size_t> perm(m);
        for (std::size_t i = 0; i < m; ++i) perm[i] = i;
        for (std::size_t i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
        SimilarityMatrix p;
        for (std::size_t i = 0; i < m; ++i) p.names.push_back(s.names[perm[i]]);
        p.values.resize(m * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) p.at(i, j) = s.at(perm[i], perm[j]);
        CHECK(clades(upgma_cluster(s)) == clades(upgma_cluster(p)));
    }
}

TEST_CASE("tree is ultrametric") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Dendrogram t = upgma_cluster(random_matrix(rng, 2 + rng.index(7)));
        const auto d = leaf_depths(t);
        const double root_h = 1.0 - t.merges.back().similarity;
        for (double v : d) CHECK(std::abs(v - root_h) < 1e-12);
    }
}

TEST_CASE("invalid matrices are rejected") {
    CHECK_THROWS_AS(upgma_cluster({{"A"}, {1}}), Error);
    try {
        upgma_cluster({{"A", "B"}, {1, 0.3, 0.4, 1}});
        FAIL("expected asymmetry");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::asymmetric);
    }
    try {
        upgma_cluster({{"A", "B"}, {1, -0.1, -0.1, 1}});
        FAIL("expected range error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::out_of_range);
    }
    Rng rng(5);
    CHECK_THROWS_AS(brute_force_upgma(random_matrix(rng, 11)), Error);
}

TEST_CASE("newick single merge has equal sibling branches") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const double v = rng.uniform01();
        const SimilarityMatrix s{{"x", "y"}, {1, v, v, 1}};
        const std::string nw = to_newick(upgma_cluster(s));
        const auto colon1 = nw.find(':'), comma = nw.find(',');
        const auto colon2 = nw.find(':', comma), close = nw.find(')');
        CHECK(nw.substr(colon1 + 1, comma - colon1 - 1) == nw.substr(colon2 + 1, close - colon2 - 1));
    }
}

TEST_CASE("newick quotes awkward labels") {
    const SimilarityMatrix s{{"Old Norse", "it's"}, {1, 0.5, 0.5, 1}};
    CHECK(to_newick(upgma_cluster(s)) == "('Old Norse':0.5,'it''s':0.5)0.500000;");
}

TEST_CASE("json round trip and validation") {
    Rng rng(7);
    const Dendrogram t = upgma_cluster(random_matrix(rng, 6));
    const Dendrogram back = parse_dendrogram_json(dendrogram_json(t));
    CHECK(back.names == t.names);
    CHECK(back.merges == t.merges);

    Dendrogram bad = t;
    bad.merges[1].size += 1;
    CHECK_THROWS_AS(validate_dendrogram(bad), Error);
    bad = t;
    bad.merges.back().left = bad.merges.back().right;
    CHECK_THROWS_AS(validate_dendrogram(bad), Error);
    try {
        parse_dendrogram_json("{\"leaves\": [\"a\"], \"merges\": [{}]}");
        FAIL("expected decode error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::decode);
    }
}

} // TEST_SUITE
