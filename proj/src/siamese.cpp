#include "numaff/siamese.hpp"

#include <cmath>

#include "numaff/layers.hpp"
#include "numaff/rng.hpp"

namespace numaff {

Preset parse_preset(std::string_view name) {
    if (name == "full") return Preset::full;
    if (name == "small") return Preset::small;
    throw Error(Errc::invalid_argument, "unknown architecture preset '" + std::string(name) + "'");
}

std::string_view preset_name(Preset preset) {
    switch (preset) {
    case Preset::full: return "full";
    case Preset::small: return "small";
    }
    throw Error(Errc::invalid_argument, "unknown architecture preset id " +
                                            std::to_string(static_cast<std::uint32_t>(preset)));
}

const Architecture& architecture(Preset preset) {
    static const Architecture full{Preset::full,
                                   105,
                                   {{64, 10, true}, {128, 7, true}, {128, 4, true}, {256, 4, false}},
                                   4096};
    static const Architecture small{Preset::small, 35, {{8, 5, true}, {16, 3, true}}, 64};
    switch (preset) {
    case Preset::full: return full;
    case Preset::small: return small;
    }
    throw Error(Errc::invalid_argument, "unknown architecture preset id " +
                                            std::to_string(static_cast<std::uint32_t>(preset)));
}

std::vector<std::size_t> spatial_chain(const Architecture& arch) {
    std::vector<std::size_t> chain{arch.input_size};
    std::size_t s = arch.input_size;
    for (const auto& c : arch.convs) {
        if (c.kernel == 0 || c.kernel > s)
            throw Error(Errc::shape_mismatch, "conv kernel " + std::to_string(c.kernel) +
                                                  " does not fit spatial extent " + std::to_string(s));
        s = s - c.kernel + 1;
        chain.push_back(s);
        if (c.pool) {
            if (s < 2) throw Error(Errc::shape_mismatch, "maxpool2 on extent below 2");
            s /= 2;
            chain.push_back(s);
        }
    }
    return chain;
}

std::vector<Shape> parameter_shapes(const Architecture& arch) {
    const std::size_t spatial = spatial_chain(arch).back();
    std::vector<Shape> shapes;
    std::size_t channels = 1;
    for (const auto& c : arch.convs) {
        shapes.push_back({c.out_channels, channels, c.kernel, c.kernel});
        shapes.push_back({c.out_channels});
        channels = c.out_channels;
    }
    const std::size_t flat = channels * spatial * spatial;
    shapes.push_back({arch.embedding_dim, flat});
    shapes.push_back({arch.embedding_dim});
    shapes.push_back({1, arch.embedding_dim});
    shapes.push_back({1});
    return shapes;
}

SiameseModel init_model(Preset preset, std::uint64_t seed) {
    const Architecture& arch = architecture(preset);
    const auto shapes = parameter_shapes(arch);
    SiameseModel m{preset, seed, {}};
    Rng rng(splitmix64(seed));
    const std::size_t nconv = arch.convs.size();
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        Tensor t(shapes[i]);
        const bool is_weight = i % 2 == 0;
        if (is_weight) {
            std::size_t fan_in = 1;
            for (std::size_t d = 1; d < shapes[i].size(); ++d) fan_in *= shapes[i][d];
            const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (float& v : t.data()) v = static_cast<float>(stddev * rng.normal());
        } else if (i / 2 < nconv) {
            t.fill(0.5f);
        }
        m.params.push_back(std::move(t));
    }
    return m;
}

template <typename T>
void validate_model(const BasicSiameseModel<T>& model) {
    const auto shapes = parameter_shapes(model.arch());
    if (model.params.size() != shapes.size())
        throw Error(Errc::shape_mismatch, "model has " + std::to_string(model.params.size()) +
                                              " parameter tensors, preset expects " +
                                              std::to_string(shapes.size()));
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (model.params[i].shape() != shapes[i])
            throw Error(Errc::shape_mismatch, "parameter " + std::to_string(i) + " has shape " +
                                                  shape_str(model.params[i].shape()) + ", expected " +
                                                  shape_str(shapes[i]));
        require_finite(model.params[i], "model parameters");
    }
}

template <typename T>
BasicTensor<T> image_tensor(const BinaryImage& img) {
    BasicTensor<T> t({1, img.height, img.width});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) t[i] = static_cast<T>(img.pixels[i]);
    return t;
}

template <typename T>
BasicTensor<T> encode(const BasicSiameseModel<T>& model, const BasicTensor<T>& input,
                      EncoderTrace<T>* trace) {
    const Architecture& arch = model.arch();
    const Shape want{1, arch.input_size, arch.input_size};
    if (input.shape() != want)
        throw Error(Errc::shape_mismatch, "encoder input is " + shape_str(input.shape()) + ", preset " +
                                              std::string(preset_name(model.preset)) + " expects " +
                                              shape_str(want));
    BasicTensor<T> x = input;
    for (std::size_t i = 0; i < arch.convs.size(); ++i) {
        BasicTensor<T> pre = conv2d(x, model.conv_weights(i), model.conv_bias(i));
        BasicTensor<T> act = relu(pre);
        if (trace) {
            trace->conv_inputs.push_back(std::move(x));
            trace->conv_outputs.push_back(std::move(pre));
        }
        if (arch.convs[i].pool) {
            auto pooled = maxpool2(act);
            if (trace) {
                trace->pool_input_shapes.push_back(act.shape());
                trace->pool_argmax.push_back(std::move(pooled.argmax));
            }
            x = std::move(pooled.output);
        } else {
            x = std::move(act);
        }
    }
    BasicTensor<T> flat = x.reshaped({x.size()});
    BasicTensor<T> emb = sigmoid(dense(flat, model.embed_weights(), model.embed_bias()));
    if (trace) {
        trace->flat = std::move(flat);
        trace->embedding = emb;
    }
    return emb;
}

template <typename T>
T merge_head(const BasicSiameseModel<T>& model, const BasicTensor<T>& emb_a,
             const BasicTensor<T>& emb_b) {
    if (emb_a.size() != emb_b.size())
        throw Error(Errc::shape_mismatch, "embedding lengths differ");
    BasicTensor<T> diff({emb_a.size()});
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(emb_a[i] - emb_b[i]);
    return sigmoid(dense(diff, model.head_weights(), model.head_bias())[0]);
}

template <typename T>
T forward_pair(const BasicSiameseModel<T>& model, const BasicTensor<T>& left,
               const BasicTensor<T>& right, PairTrace<T>* trace) {
    BasicTensor<T> ea = encode(model, left, trace ? &trace->left : nullptr);
    BasicTensor<T> eb = encode(model, right, trace ? &trace->right : nullptr);
    BasicTensor<T> diff({ea.size()});
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(ea[i] - eb[i]);
    const T p = sigmoid(dense(diff, model.head_weights(), model.head_bias())[0]);
    if (trace) {
        trace->abs_diff = std::move(diff);
        trace->probability = p;
    }
    return p;
}

template <typename T>
std::vector<BasicTensor<T>> zero_grads(const BasicSiameseModel<T>& model) {
    std::vector<BasicTensor<T>> g;
    g.reserve(model.params.size());
    for (const auto& p : model.params) g.emplace_back(p.shape());
    return g;
}

namespace {

template <typename T>
void add_into(BasicTensor<T>& acc, const BasicTensor<T>& v) {
    T* a = acc.raw();
    const T* b = v.raw();
    for (std::size_t i = 0; i < acc.size(); ++i) a[i] += b[i];
}

template <typename T>
BasicTensor<T> encoder_backward(const BasicSiameseModel<T>& model, const EncoderTrace<T>& tr,
                                const BasicTensor<T>& grad_embedding,
                                std::vector<BasicTensor<T>>& grads) {
    const Architecture& arch = model.arch();
    const std::size_t nconv = arch.convs.size();

    BasicTensor<T> g = sigmoid_backward(tr.embedding, grad_embedding);
    auto dg = dense_backward(tr.flat, model.embed_weights(), g);
    add_into(grads[2 * nconv], dg.weights);
    add_into(grads[2 * nconv + 1], dg.bias);

    std::size_t pool_idx = tr.pool_argmax.size();
    // Gradient w.r.t. the last block's output, reshaped back to [C, H, W].
    BasicTensor<T> grad = std::move(dg.input);
    for (std::size_t i = nconv; i-- > 0;) {
        const Shape& pre_shape = tr.conv_outputs[i].shape();
        if (arch.convs[i].pool) {
            --pool_idx;
            const Shape& ps = tr.pool_input_shapes[pool_idx];
            const Shape pooled{ps[0], ps[1] / 2, ps[2] / 2};
            grad = maxpool2_backward(grad.reshaped(pooled), tr.pool_argmax[pool_idx], ps);
        } else {
            grad = grad.reshaped(pre_shape);
        }
        grad = relu_backward(tr.conv_outputs[i], grad);
        auto cg = conv2d_backward(tr.conv_inputs[i], model.conv_weights(i), grad);
        add_into(grads[2 * i], cg.weights);
        add_into(grads[2 * i + 1], cg.bias);
        grad = std::move(cg.input);
    }
    return grad;
}

} // namespace

template <typename T>
void backward_pair(const BasicSiameseModel<T>& model, const PairTrace<T>& trace,
                   T grad_probability, std::vector<BasicTensor<T>>& grads,
                   BasicTensor<T>* grad_left, BasicTensor<T>* grad_right) {
    const std::size_t nconv = model.num_convs();
    const T p = trace.probability;
    BasicTensor<T> g_logit({1}, grad_probability * p * (T{1} - p));
    auto hg = dense_backward(trace.abs_diff, model.head_weights(), g_logit);
    add_into(grads[2 * nconv + 2], hg.weights);
    add_into(grads[2 * nconv + 3], hg.bias);

    const auto& ea = trace.left.embedding;
    const auto& eb = trace.right.embedding;
    BasicTensor<T> ga(ea.shape()), gb(eb.shape());
    for (std::size_t i = 0; i < ea.size(); ++i) {
        const T d = ea[i] - eb[i];
        const T s = d > T{0} ? T{1} : (d < T{0} ? T{-1} : T{0});
        ga[i] = hg.input[i] * s;
        gb[i] = -hg.input[i] * s;
    }
    BasicTensor<T> in_a = encoder_backward(model, trace.left, ga, grads);
    BasicTensor<T> in_b = encoder_backward(model, trace.right, gb, grads);
    if (grad_left) *grad_left = std::move(in_a);
    if (grad_right) *grad_right = std::move(in_b);
}

namespace {

void require_canonical(const SiameseModel& model, const BinaryImage& img) {
    const std::size_t s = model.arch().input_size;
    if (img.width != s || img.height != s)
        throw Error(Errc::shape_mismatch, "image is " + std::to_string(img.width) + "x" +
                                              std::to_string(img.height) + ", preset " +
                                              std::string(preset_name(model.preset)) + " expects " +
                                              std::to_string(s) + "x" + std::to_string(s));
}

} // namespace

std::vector<float> embed(const SiameseModel& model, const BinaryImage& img) {
    require_canonical(model, img);
    const Tensor e = encode(model, image_tensor<float>(img));
    return {e.data().begin(), e.data().end()};
}

double pair_similarity(const SiameseModel& model, const BinaryImage& a, const BinaryImage& b) {
    require_canonical(model, a);
    require_canonical(model, b);
    return forward_pair(model, image_tensor<float>(a), image_tensor<float>(b));
}

#define NUMAFF_INSTANTIATE_SIAMESE(T)                                                             \
    template void validate_model(const BasicSiameseModel<T>&);                                    \
    template BasicTensor<T> image_tensor<T>(const BinaryImage&);                                  \
    template BasicTensor<T> encode(const BasicSiameseModel<T>&, const BasicTensor<T>&,            \
                                   EncoderTrace<T>*);                                             \
    template T merge_head(const BasicSiameseModel<T>&, const BasicTensor<T>&,                     \
                          const BasicTensor<T>&);                                                 \
    template T forward_pair(const BasicSiameseModel<T>&, const BasicTensor<T>&,                   \
                            const BasicTensor<T>&, PairTrace<T>*);                                \
    template std::vector<BasicTensor<T>> zero_grads(const BasicSiameseModel<T>&);                 \
    template void backward_pair(const BasicSiameseModel<T>&, const PairTrace<T>&, T,              \
                                std::vector<BasicTensor<T>>&, BasicTensor<T>*, BasicTensor<T>*);

NUMAFF_INSTANTIATE_SIAMESE(float)
NUMAFF_INSTANTIATE_SIAMESE(double)

#undef NUMAFF_INSTANTIATE_SIAMESE

} // namespace numaff
