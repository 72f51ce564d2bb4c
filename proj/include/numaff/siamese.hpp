#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "numaff/image.hpp"
#include "numaff/tensor.hpp"

namespace numaff {

enum class Preset : std::uint32_t {
    full = 0,  ///< four-conv stack on 105x105 inputs
    small = 1, ///< reduced stack on 35x35 inputs, for tests and desk-scale runs
};

Preset parse_preset(std::string_view name);
std::string_view preset_name(Preset preset);

struct ConvBlockSpec {
    std::size_t out_channels;
    std::size_t kernel;
    bool pool; ///< maxpool2 after the ReLU
};

/// Encoder layout: conv blocks, flatten, dense + sigmoid embedding.
/// The merge head (|h1 - h2| -> dense 1 -> sigmoid) is implicit.
struct Architecture {
    Preset preset;
    std::size_t input_size;
    std::vector<ConvBlockSpec> convs;
    std::size_t embedding_dim;
};

const Architecture& architecture(Preset preset);

/// Parameter shapes in storage order:
///   conv_w[0], conv_b[0], ..., emb_w, emb_b, head_w, head_b.
/// Throws Errc::shape_mismatch if the conv stack does not fit the input.
std::vector<Shape> parameter_shapes(const Architecture& arch);

/// Spatial extent after each conv and each pool, starting with the input.
std::vector<std::size_t> spatial_chain(const Architecture& arch);

template <typename T>
struct BasicSiameseModel {
    Preset preset = Preset::small;
    std::uint64_t seed = 0;
    std::vector<BasicTensor<T>> params;

    const Architecture& arch() const { return architecture(preset); }
    std::size_t num_convs() const { return arch().convs.size(); }

    const BasicTensor<T>& conv_weights(std::size_t i) const { return params[2 * i]; }
    const BasicTensor<T>& conv_bias(std::size_t i) const { return params[2 * i + 1]; }
    const BasicTensor<T>& embed_weights() const { return params[2 * num_convs()]; }
    const BasicTensor<T>& embed_bias() const { return params[2 * num_convs() + 1]; }
    const BasicTensor<T>& head_weights() const { return params[2 * num_convs() + 2]; }
    const BasicTensor<T>& head_bias() const { return params[2 * num_convs() + 3]; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.size();
        return n;
    }

    template <typename U>
    BasicSiameseModel<U> cast() const {
        BasicSiameseModel<U> m{preset, seed, {}};
        m.params.reserve(params.size());
        for (const auto& p : params) m.params.push_back(p.template cast<U>());
        return m;
    }

    friend bool operator==(const BasicSiameseModel&, const BasicSiameseModel&) = default;
};

using SiameseModel = BasicSiameseModel<float>;
using SiameseModel64 = BasicSiameseModel<double>;

/// Seeded initialization. Conv and dense weights ~ N(0, 1/fan_in); conv
/// biases 0.5; embedding and head biases 0.
SiameseModel init_model(Preset preset, std::uint64_t seed);

/// Throws Errc::shape_mismatch / Errc::non_finite if params do not match the preset.
template <typename T>
void validate_model(const BasicSiameseModel<T>& model);

// --- forward / backward ----------------------------------------------------

/// Intermediates of one encoder pass, kept for the backward pass.
template <typename T>
struct EncoderTrace {
    std::vector<BasicTensor<T>> conv_inputs;
    std::vector<BasicTensor<T>> conv_outputs; // pre-ReLU
    std::vector<std::vector<std::size_t>> pool_argmax;
    std::vector<Shape> pool_input_shapes;
    BasicTensor<T> flat;
    BasicTensor<T> embedding;
};

template <typename T>
struct PairTrace {
    EncoderTrace<T> left;
    EncoderTrace<T> right;
    BasicTensor<T> abs_diff;
    T probability{};
};

/// Image tensor [1, S, S] with pixels {0,1}.
template <typename T>
BasicTensor<T> image_tensor(const BinaryImage& img);

template <typename T>
BasicTensor<T> encode(const BasicSiameseModel<T>& model, const BasicTensor<T>& input,
                      EncoderTrace<T>* trace = nullptr);

template <typename T>
T forward_pair(const BasicSiameseModel<T>& model, const BasicTensor<T>& left,
               const BasicTensor<T>& right, PairTrace<T>* trace = nullptr);

/// Head output from two embeddings: sigmoid(w . |a - b| + b).
template <typename T>
T merge_head(const BasicSiameseModel<T>& model, const BasicTensor<T>& emb_a,
             const BasicTensor<T>& emb_b);

/// Gradient buffers shaped like model.params, zero-filled.
template <typename T>
std::vector<BasicTensor<T>> zero_grads(const BasicSiameseModel<T>& model);

/// Accumulates d(output)/d(params) * grad_probability into `grads`.
/// Optionally returns input gradients for both images.
template <typename T>
void backward_pair(const BasicSiameseModel<T>& model, const PairTrace<T>& trace,
                   T grad_probability, std::vector<BasicTensor<T>>& grads,
                   BasicTensor<T>* grad_left = nullptr, BasicTensor<T>* grad_right = nullptr);

// --- inference API ----------------------------------------------------------

/// Embedding of a canonical image; every component lies in (0, 1).
std::vector<float> embed(const SiameseModel& model, const BinaryImage& img);

/// Similarity score in (0, 1); exactly symmetric in its arguments.
double pair_similarity(const SiameseModel& model, const BinaryImage& a, const BinaryImage& b);

} // namespace numaff
