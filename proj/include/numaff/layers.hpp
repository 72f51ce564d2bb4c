#pragma once

// Forward and backward passes for the layer set the twin network needs.
// Every function is a pure function of its arguments; callers own all state.

#include <cstddef>
#include <vector>

#include "numaff/tensor.hpp"

namespace numaff {

// ---------------------------------------------------------------------------
// conv2d: valid cross-correlation, stride 1, no padding.
//   input   [C_in, H, W]
//   weights [C_out, C_in, kh, kw]
//   bias    [C_out]
//   output  [C_out, H-kh+1, W-kw+1]

template <typename T>
struct Conv2dGrads {
    BasicTensor<T> input;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                      const BasicTensor<T>& bias);

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                               const BasicTensor<T>& grad_output);

// ---------------------------------------------------------------------------
// maxpool2: 2x2 window, stride 2; a trailing odd row/column is dropped.

template <typename T>
struct MaxPoolResult {
    BasicTensor<T> output;
    /// Flat input index that won each output cell (first in row-major order on ties).
    std::vector<std::size_t> argmax;
};

template <typename T>
MaxPoolResult<T> maxpool2(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& grad_output,
                                 const std::vector<std::size_t>& argmax,
                                 const Shape& input_shape);

// ---------------------------------------------------------------------------
// dense: y = W x + b with x [n], W [m, n], b [m].

template <typename T>
struct DenseGrads {
    BasicTensor<T> input;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_output);

// ---------------------------------------------------------------------------
// Elementwise activations. relu' is 1 only for x > 0; sigmoid' = s(1-s) is
// computed from the forward output.

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_output);

template <typename T>
T sigmoid(T x) noexcept;

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& output, const BasicTensor<T>& grad_output);

// ---------------------------------------------------------------------------
// Binary cross entropy on a single probability.

inline constexpr double kBceClamp = 1e-7;

struct LossValue {
    double value = 0.0;
    /// d(loss)/d(prediction), evaluated at the clamped prediction.
    double gradient_wrt_prediction = 0.0;
};

/// Label must be 0 or 1; the prediction is clamped to [1e-7, 1-1e-7].
LossValue bce_loss(double prediction, int label);

// ---------------------------------------------------------------------------
// Adam with bias correction.

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    std::size_t step_count = 0;
    BasicTensor<T> first_moment;
    BasicTensor<T> second_moment;
    AdamConfig config;

    AdamState() = default;
    AdamState(const Shape& shape, AdamConfig cfg)
        : first_moment(shape), second_moment(shape), config(cfg) {}
};

/// In-place update used by the training loop.
template <typename T>
void adam_update(BasicTensor<T>& param, const BasicTensor<T>& grad, AdamState<T>& state);

template <typename T>
struct AdamStepResult {
    BasicTensor<T> param;
    AdamState<T> state;
};

/// Pure form: returns the new parameter and state, inputs untouched.
template <typename T>
AdamStepResult<T> adam_step(const BasicTensor<T>& param, const BasicTensor<T>& grad,
                            const AdamState<T>& state);

} // namespace numaff
