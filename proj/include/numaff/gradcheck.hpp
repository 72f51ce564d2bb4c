#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "numaff/tensor.hpp"

namespace numaff {

inline constexpr double kGradCheckStep = 1e-5;

/// Gradients smaller than this (times the loss scale) are compared in
/// absolute terms; below it central differences are dominated by roundoff.
inline constexpr double kGradCheckFloor = 1e-5;

/// |analytic - numeric| / max(|analytic|, |numeric|, kGradCheckFloor * max(1, |scale|))
double relative_error(double analytic, double numeric, double scale = 1.0) noexcept;

/// A scalar function of some 64-bit tensors together with its analytic gradient.
struct GradCheckProblem {
    std::vector<Tensor64*> wrt;
    std::function<double()> loss;
    /// Same order and shapes as `wrt`, evaluated at the unperturbed point.
    std::vector<Tensor64> analytic;
    /// Optional fingerprint of the piecewise-smooth region at the current
    /// point (relu signs, pooling winners). Coordinates whose +h or -h
    /// evaluation lands in another region are not compared.
    std::function<std::uint64_t()> region;
};

struct GradCheckOptions {
    double step = kGradCheckStep;
    /// 0 checks every coordinate; otherwise a seeded sample of this many per tensor.
    std::size_t coords_per_tensor = 0;
    std::uint64_t sample_seed = 0;
};

struct GradCheckReport {
    double worst = 0.0;
    std::size_t checked = 0;
    /// Coordinates dropped because a perturbation crossed a kink. When
    /// sampling, each is replaced by a fresh draw.
    std::size_t skipped = 0;
};

/// Central differences against the analytic gradient.
GradCheckReport check_gradients(const GradCheckProblem& problem, const GradCheckOptions& opts = {});

/// check_gradients(...).worst
double max_relative_error(const GradCheckProblem& problem, const GradCheckOptions& opts = {});

enum class GradCheckLayer { conv2d, maxpool2, dense, relu, sigmoid, bce, siamese_small };

/// Builds a random instance of `layer` from `shapes` and `seed`, projects its
/// output onto a fixed random vector, and returns the worst relative error
/// over all parameters and inputs.
///
/// shapes: conv2d {input[C,H,W], weights[Co,C,kh,kw]}; maxpool2/relu/sigmoid
/// {input}; dense {input[n], weights[m,n]}; bce and siamese_small ignore it.
/// Relu and maxpool inputs are drawn away from their kinks. The composed
/// siamese case samples 8 coordinates per tensor and skips kink crossings.
double gradcheck(GradCheckLayer layer, const std::vector<Shape>& shapes, std::uint64_t seed);

GradCheckReport gradcheck_report(GradCheckLayer layer, const std::vector<Shape>& shapes, std::uint64_t seed);

} // namespace numaff
