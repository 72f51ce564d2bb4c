#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "numaff/dataset.hpp"
#include "numaff/rng.hpp"
#include "numaff/siamese.hpp"

namespace numaff {

struct SamplingConfig {
    std::size_t samples_per_digit = 200; ///< N
    std::uint64_t master_seed = 0;
};

/// Scores one image pair. Implementations must be safe for concurrent
/// score() calls once prepare() has returned.
class PairScorer {
public:
    virtual ~PairScorer() = default;

    /// Called once before any scoring with every dataset that will be used.
    virtual void prepare(std::span<const Dataset> datasets) { (void)datasets; }

    virtual double score(const Sample& a, const Sample& b) const = 0;
};

/// The twin network, with embeddings cached per image after prepare().
class SiameseScorer final : public PairScorer {
public:
    explicit SiameseScorer(SiameseModel model);

    void prepare(std::span<const Dataset> datasets) override;
    double score(const Sample& a, const Sample& b) const override;

    const SiameseModel& model() const { return model_; }

private:
    SiameseModel model_;
    std::unordered_map<const Sample*, Tensor> cache_;
};

/// Returns the same value for every pair.
class ConstantScorer final : public PairScorer {
public:
    explicit ConstantScorer(double value);
    double score(const Sample&, const Sample&) const override { return value_; }

private:
    double value_;
};

/// Mean over digits 0..9 of N tuples (a from `a` class d, b from `b` class d),
/// each drawn with replacement as rng.index(|A_d|) then rng.index(|B_d|).
double dataset_pair_similarity(const PairScorer& scorer, const Dataset& a, const Dataset& b,
                               const SamplingConfig& config, Rng& pair_rng);

/// splitmix64(master ^ fnv1a(first, '\0', second)) with the two names in
/// lexicographic order, so the seed does not depend on argument order.
std::uint64_t pair_seed(std::uint64_t master_seed, std::string_view name_a, std::string_view name_b);

struct SimilarityMatrix {
    std::vector<std::string> names;
    std::vector<double> values; ///< row-major M x M

    std::size_t size() const { return names.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * names.size() + j]; }
    /// Throws Errc::invalid_argument for unknown names.
    std::size_t index_of(std::string_view name) const;
    double at(std::string_view a, std::string_view b) const { return at(index_of(a), index_of(b)); }
};

inline constexpr double kSymmetryTolerance = 1e-9;

/// Errc::asymmetric beyond kSymmetryTolerance, Errc::out_of_range outside
/// [0, 1], Errc::duplicate_name, Errc::shape_mismatch for inconsistent sizes.
void validate_matrix(const SimilarityMatrix& m);

struct PairProgress {
    std::string name_a;
    std::string name_b;
    double score;
    double elapsed_seconds;
};

using ProgressFn = std::function<void(const PairProgress&)>;

/// Computes the C(M,2) upper-triangle scores, mirrors them, and fixes the
/// diagonal at 1. Each pair draws from its own pair_seed stream, so the
/// result is independent of `jobs` and of dataset order. The progress
/// callback may be invoked from worker threads but never concurrently.
SimilarityMatrix similarity_matrix(PairScorer& scorer, std::span<const Dataset> datasets,
                                   const SamplingConfig& config, std::size_t jobs = 1,
                                   const ProgressFn& progress = {});

/// Header ",name_0,...,name_{M-1}", then one "name_i,v_i0,..." row per
/// dataset; values printed with 9 significant digits.
std::string matrix_csv(const SimilarityMatrix& m);

/// Errc::ragged_rows, Errc::non_numeric, Errc::asymmetric, Errc::out_of_range
/// and Errc::name_mismatch (row label differs from header) are distinct.
SimilarityMatrix parse_matrix_csv(std::string_view text);

void write_matrix_csv(const SimilarityMatrix& m, const std::filesystem::path& path);
SimilarityMatrix read_matrix_csv(const std::filesystem::path& path);

} // namespace numaff
