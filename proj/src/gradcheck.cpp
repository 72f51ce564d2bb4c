#include "numaff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "numaff/layers.hpp"
#include "numaff/rng.hpp"
#include "numaff/siamese.hpp"

namespace numaff {

double relative_error(double analytic, double numeric, double scale) noexcept {
    const double floor = kGradCheckFloor * std::max(1.0, std::abs(scale));
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(const GradCheckProblem& problem, const GradCheckOptions& opts) {
    if (problem.wrt.size() != problem.analytic.size())
        throw Error(Errc::shape_mismatch, "gradcheck: analytic gradient count does not match inputs");
    Rng pick(splitmix64(opts.sample_seed));
    const double scale = problem.loss();
    const std::uint64_t base_region = problem.region ? problem.region() : 0;
    GradCheckReport report;

    // False when the coordinate could not be compared.
    auto check_one = [&](Tensor64& x, const Tensor64& g, std::size_t i) {
        const double orig = x[i];
        bool same = true;
        x[i] = orig + opts.step;
        const double up = problem.loss();
        if (problem.region) same = problem.region() == base_region;
        x[i] = orig - opts.step;
        const double down = problem.loss();
        if (problem.region) same = same && problem.region() == base_region;
        x[i] = orig;
        if (!same) {
            ++report.skipped;
            return false;
        }
        ++report.checked;
        report.worst = std::max(report.worst, relative_error(g[i], (up - down) / (2.0 * opts.step), scale));
        return true;
    };

    for (std::size_t t = 0; t < problem.wrt.size(); ++t) {
        Tensor64& x = *problem.wrt[t];
        const Tensor64& g = problem.analytic[t];
        if (g.shape() != x.shape())
            throw Error(Errc::shape_mismatch, "gradcheck: analytic gradient shape " +
                                                  shape_str(g.shape()) + " != " + shape_str(x.shape()));
        if (opts.coords_per_tensor && opts.coords_per_tensor < x.size()) {
            std::size_t done = 0;
            for (std::size_t tries = 0; done < opts.coords_per_tensor && tries < 4 * opts.coords_per_tensor; ++tries)
                done += check_one(x, g, pick.index(x.size()));
        } else {
            for (std::size_t i = 0; i < x.size(); ++i) check_one(x, g, i);
        }
    }
    return report;
}

double max_relative_error(const GradCheckProblem& problem, const GradCheckOptions& opts) {
    return check_gradients(problem, opts).worst;
}

namespace {

Tensor64 random_tensor(const Shape& shape, Rng& rng) {
    Tensor64 t(shape);
    for (double& v : t.data()) v = rng.normal();
    return t;
}

// Normal draws re-drawn while within `margin` of zero.
Tensor64 random_away_from_zero(const Shape& shape, Rng& rng, double margin) {
    Tensor64 t(shape);
    for (double& v : t.data()) {
        do v = rng.normal();
        while (std::abs(v) < margin);
    }
    return t;
}

// Distinct values with spacing >= 2/n, randomly placed, so no 2x2 window has a near tie.
Tensor64 random_distinct(const Shape& shape, Rng& rng) {
    Tensor64 t(shape);
    const std::size_t n = t.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = (static_cast<double>(perm[i]) + 0.5) / static_cast<double>(n) * 2.0 - 1.0;
    return t;
}

double project(const Tensor64& y, const Tensor64& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
}

const Shape& shape_at(const std::vector<Shape>& shapes, std::size_t i, const char* layer) {
    if (i >= shapes.size())
        throw Error(Errc::invalid_argument, std::string("gradcheck: missing shape for ") + layer);
    return shapes[i];
}

GradCheckReport check_conv2d(const std::vector<Shape>& shapes, Rng& rng) {
    Tensor64 x = random_tensor(shape_at(shapes, 0, "conv2d input"), rng);
    Tensor64 w = random_tensor(shape_at(shapes, 1, "conv2d weights"), rng);
    Tensor64 b = random_tensor({w.dim(0)}, rng);
    const Tensor64 y0 = conv2d(x, w, b);
    const Tensor64 r = random_tensor(y0.shape(), rng);
    auto g = conv2d_backward(x, w, r);
    GradCheckProblem p{{&x, &w, &b}, [&] { return project(conv2d(x, w, b), r); },
                       {g.input, g.weights, g.bias}, {}};
    return check_gradients(p);
}

GradCheckReport check_maxpool2(const std::vector<Shape>& shapes, Rng& rng) {
    Tensor64 x = random_distinct(shape_at(shapes, 0, "maxpool2 input"), rng);
    const auto fwd = maxpool2(x);
    const Tensor64 r = random_tensor(fwd.output.shape(), rng);
    GradCheckProblem p{{&x}, [&] { return project(maxpool2(x).output, r); },
                       {maxpool2_backward(r, fwd.argmax, x.shape())}, {}};
    return check_gradients(p);
}

GradCheckReport check_dense(const std::vector<Shape>& shapes, Rng& rng) {
    Tensor64 x = random_tensor(shape_at(shapes, 0, "dense input"), rng);
    Tensor64 w = random_tensor(shape_at(shapes, 1, "dense weights"), rng);
    Tensor64 b = random_tensor({w.dim(0)}, rng);
    const Tensor64 r = random_tensor({w.dim(0)}, rng);
    auto g = dense_backward(x, w, r);
    GradCheckProblem p{{&x, &w, &b}, [&] { return project(dense(x, w, b), r); },
                       {g.input, g.weights, g.bias}, {}};
    return check_gradients(p);
}

GradCheckReport check_relu(const std::vector<Shape>& shapes, Rng& rng) {
    Tensor64 x = random_away_from_zero(shape_at(shapes, 0, "relu input"), rng, 1e-3);
    const Tensor64 r = random_tensor(x.shape(), rng);
    GradCheckProblem p{{&x}, [&] { return project(relu(x), r); }, {relu_backward(x, r)}, {}};
    return check_gradients(p);
}

GradCheckReport check_sigmoid(const std::vector<Shape>& shapes, Rng& rng) {
    Tensor64 x = random_tensor(shape_at(shapes, 0, "sigmoid input"), rng);
    const Tensor64 r = random_tensor(x.shape(), rng);
    GradCheckProblem p{{&x}, [&] { return project(sigmoid(x), r); },
                       {sigmoid_backward(sigmoid(x), r)}, {}};
    return check_gradients(p);
}

GradCheckReport check_bce(Rng& rng) {
    Tensor64 pred({1}, rng.uniform(0.05, 0.95));
    const int label = static_cast<int>(rng.index(2));
    Tensor64 grad({1}, bce_loss(pred[0], label).gradient_wrt_prediction);
    GradCheckProblem p{{&pred}, [&] { return bce_loss(pred[0], label).value; }, {grad}, {}};
    return check_gradients(p);
}

// FNV-1a over relu signs, pooling winners and the signs of h1 - h2.
template <typename T>
std::uint64_t region_of(const PairTrace<T>& trace) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    for (const EncoderTrace<T>* e : {&trace.left, &trace.right}) {
        for (const auto& out : e->conv_outputs)
            for (std::size_t i = 0; i < out.size(); ++i) mix(out[i] > T(0));
        for (const auto& am : e->pool_argmax)
            for (std::size_t a : am) mix(a);
    }
    for (std::size_t i = 0; i < trace.left.embedding.size(); ++i)
        mix(trace.left.embedding[i] > trace.right.embedding[i]);
    return h;
}

GradCheckReport check_siamese_small(std::uint64_t seed, Rng& rng) {
    SiameseModel64 model = init_model(Preset::small, seed).cast<double>();
    const std::size_t s = model.arch().input_size;
    Tensor64 left({1, s, s}), right({1, s, s});
    for (double& v : left.data()) v = rng.uniform01();
    for (double& v : right.data()) v = rng.uniform01();
    const int label = static_cast<int>(rng.index(2));

    auto loss = [&] { return bce_loss(forward_pair(model, left, right), label).value; };

    PairTrace<double> trace;
    const double prob = forward_pair(model, left, right, &trace);
    auto grads = zero_grads(model);
    Tensor64 gl, gr;
    backward_pair(model, trace, bce_loss(prob, label).gradient_wrt_prediction, grads, &gl, &gr);

    GradCheckProblem p;
    p.loss = loss;
    p.region = [&] {
        PairTrace<double> t;
        forward_pair(model, left, right, &t);
        return region_of(t);
    };
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        p.wrt.push_back(&model.params[i]);
        p.analytic.push_back(grads[i]);
    }
    p.wrt.push_back(&left);
    p.analytic.push_back(gl);
    p.wrt.push_back(&right);
    p.analytic.push_back(gr);

    GradCheckOptions opts;
    opts.coords_per_tensor = 8;
    opts.sample_seed = seed;
    return check_gradients(p, opts);
}

} // namespace

GradCheckReport gradcheck_report(GradCheckLayer layer, const std::vector<Shape>& shapes, std::uint64_t seed) {
    Rng rng(splitmix64(seed ^ 0x6772616463686b00ULL));
    switch (layer) {
    case GradCheckLayer::conv2d: return check_conv2d(shapes, rng);
    case GradCheckLayer::maxpool2: return check_maxpool2(shapes, rng);
    case GradCheckLayer::dense: return check_dense(shapes, rng);
    case GradCheckLayer::relu: return check_relu(shapes, rng);
    case GradCheckLayer::sigmoid: return check_sigmoid(shapes, rng);
    case GradCheckLayer::bce: return check_bce(rng);
    case GradCheckLayer::siamese_small: return check_siamese_small(seed, rng);
    }
    throw Error(Errc::invalid_argument, "gradcheck: unknown layer");
}

double gradcheck(GradCheckLayer layer, const std::vector<Shape>& shapes, std::uint64_t seed) {
    return gradcheck_report(layer, shapes, seed).worst;
}

} // namespace numaff
