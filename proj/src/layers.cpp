#include "numaff/layers.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace numaff {

namespace {

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
    throw Error(Errc::shape_mismatch, op + ": " + detail);
}

void require_rank(const std::string& op, const char* what, const Shape& s, std::size_t rank) {
    if (s.size() != rank) {
        std::ostringstream os;
        os << what << " must have rank " << rank << ", got " << shape_str(s);
        shape_error(op, os.str());
    }
}

void require_dim(const std::string& op, const char* dim_name, std::size_t got, std::size_t want) {
    if (got != want) {
        std::ostringstream os;
        os << dim_name << " is " << got << ", expected " << want;
        shape_error(op, os.str());
    }
}

} // namespace

// --- conv2d ----------------------------------------------------------------

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                      const BasicTensor<T>& bias) {
    const std::string op = "conv2d";
    require_rank(op, "input", input.shape(), 3);
    require_rank(op, "weights", weights.shape(), 4);
    require_rank(op, "bias", bias.shape(), 1);
    const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t cout = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    require_dim(op, "weights in_channels", weights.dim(1), cin);
    require_dim(op, "bias length", bias.dim(0), cout);
    if (kh == 0 || kw == 0 || cout == 0) shape_error(op, "kernel extents must be positive");
    if (kh > h) shape_error(op, "kernel_h " + std::to_string(kh) + " exceeds input height " + std::to_string(h));
    if (kw > w) shape_error(op, "kernel_w " + std::to_string(kw) + " exceeds input width " + std::to_string(w));
    require_finite(input, "conv2d");

    const std::size_t ho = h - kh + 1, wo = w - kw + 1;
    BasicTensor<T> out({cout, ho, wo});
    const T* in = input.raw();
    const T* wt = weights.raw();
    T* o = out.raw();

    for (std::size_t co = 0; co < cout; ++co) {
        T* oc = o + co * ho * wo;
        std::fill(oc, oc + ho * wo, bias[co]);
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const T* ic = in + ci * h * w;
            const T* kc = wt + (co * cin + ci) * kh * kw;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const T k = kc[ky * kw + kx];
                    for (std::size_t y = 0; y < ho; ++y) {
                        const T* irow = ic + (y + ky) * w + kx;
                        T* orow = oc + y * wo;
                        for (std::size_t x = 0; x < wo; ++x) orow[x] += k * irow[x];
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                               const BasicTensor<T>& grad_output) {
    const std::string op = "conv2d_backward";
    require_rank(op, "input", input.shape(), 3);
    require_rank(op, "weights", weights.shape(), 4);
    require_rank(op, "grad_output", grad_output.shape(), 3);
    const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::size_t cout = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    require_dim(op, "weights in_channels", weights.dim(1), cin);
    if (kh > h || kw > w) shape_error(op, "kernel exceeds input");
    const std::size_t ho = h - kh + 1, wo = w - kw + 1;
    require_dim(op, "grad_output channels", grad_output.dim(0), cout);
    require_dim(op, "grad_output height", grad_output.dim(1), ho);
    require_dim(op, "grad_output width", grad_output.dim(2), wo);

    Conv2dGrads<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(weights.shape()),
                     BasicTensor<T>({cout})};
    const T* in = input.raw();
    const T* wt = weights.raw();
    const T* dy = grad_output.raw();
    T* dx = g.input.raw();
    T* dw = g.weights.raw();

    for (std::size_t co = 0; co < cout; ++co) {
        const T* dyc = dy + co * ho * wo;
        T acc{0};
        for (std::size_t i = 0; i < ho * wo; ++i) acc += dyc[i];
        g.bias[co] = acc;
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const T* ic = in + ci * h * w;
            T* dxc = dx + ci * h * w;
            const T* kc = wt + (co * cin + ci) * kh * kw;
            T* dkc = dw + (co * cin + ci) * kh * kw;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const T k = kc[ky * kw + kx];
                    T sum{0};
                    for (std::size_t y = 0; y < ho; ++y) {
                        const T* irow = ic + (y + ky) * w + kx;
                        T* dxrow = dxc + (y + ky) * w + kx;
                        const T* dyrow = dyc + y * wo;
                        for (std::size_t x = 0; x < wo; ++x) {
                            sum += dyrow[x] * irow[x];
                            dxrow[x] += k * dyrow[x];
                        }
                    }
                    dkc[ky * kw + kx] = sum;
                }
            }
        }
    }
    return g;
}

// --- maxpool2 --------------------------------------------------------------

template <typename T>
MaxPoolResult<T> maxpool2(const BasicTensor<T>& input) {
    const std::string op = "maxpool2";
    require_rank(op, "input", input.shape(), 3);
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h < 2 || w < 2)
        shape_error(op, "input " + shape_str(input.shape()) + " is smaller than the 2x2 window");
    require_finite(input, "maxpool2");

    const std::size_t ho = h / 2, wo = w / 2;
    MaxPoolResult<T> r{BasicTensor<T>({c, ho, wo}), std::vector<std::size_t>(c * ho * wo)};
    const T* in = input.raw();
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < ho; ++y) {
            for (std::size_t x = 0; x < wo; ++x) {
                const std::size_t base = ch * h * w + 2 * y * w + 2 * x;
                const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
                std::size_t best = cand[0];
                for (int k = 1; k < 4; ++k)
                    if (in[cand[k]] > in[best]) best = cand[k];
                const std::size_t oi = (ch * ho + y) * wo + x;
                r.output[oi] = in[best];
                r.argmax[oi] = best;
            }
        }
    }
    return r;
}

template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& grad_output,
                                 const std::vector<std::size_t>& argmax,
                                 const Shape& input_shape) {
    if (grad_output.size() != argmax.size())
        shape_error("maxpool2_backward", "grad_output has " + std::to_string(grad_output.size()) +
                                             " elements but argmax has " + std::to_string(argmax.size()));
    BasicTensor<T> dx(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] >= dx.size()) shape_error("maxpool2_backward", "argmax index outside input");
        dx[argmax[i]] += grad_output[i];
    }
    return dx;
}

// --- dense -----------------------------------------------------------------

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias) {
    const std::string op = "dense";
    require_rank(op, "weights", weights.shape(), 2);
    require_rank(op, "bias", bias.shape(), 1);
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    require_dim(op, "input length", input.size(), n);
    require_dim(op, "bias length", bias.dim(0), m);
    require_finite(input, "dense");

    BasicTensor<T> out({m});
    const T* x = input.raw();
    for (std::size_t i = 0; i < m; ++i) {
        const T* row = weights.raw() + i * n;
        T acc = bias[i];
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
    return out;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_output) {
    const std::string op = "dense_backward";
    require_rank(op, "weights", weights.shape(), 2);
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    require_dim(op, "input length", input.size(), n);
    require_dim(op, "grad_output length", grad_output.size(), m);

    DenseGrads<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(weights.shape()),
                    BasicTensor<T>({m})};
    const T* x = input.raw();
    T* dx = g.input.raw();
    for (std::size_t i = 0; i < m; ++i) {
        const T gy = grad_output[i];
        g.bias[i] = gy;
        const T* row = weights.raw() + i * n;
        T* drow = g.weights.raw() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            drow[j] = gy * x[j];
            dx[j] += gy * row[j];
        }
    }
    return g;
}

// --- activations -----------------------------------------------------------

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
    BasicTensor<T> out = input;
    for (T& v : out.data()) v = v > T{0} ? v : T{0};
    return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_output) {
    if (input.size() != grad_output.size())
        shape_error("relu_backward", "input and grad_output sizes differ");
    BasicTensor<T> dx(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i)
        dx[i] = input[i] > T{0} ? grad_output[i] : T{0};
    return dx;
}

template <typename T>
T sigmoid(T x) noexcept {
    // Branch keeps exp() from overflowing for large |x|.
    if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input) {
    BasicTensor<T> out = input;
    for (T& v : out.data()) v = sigmoid(v);
    return out;
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& output, const BasicTensor<T>& grad_output) {
    if (output.size() != grad_output.size())
        shape_error("sigmoid_backward", "output and grad_output sizes differ");
    BasicTensor<T> dx(output.shape());
    for (std::size_t i = 0; i < output.size(); ++i)
        dx[i] = grad_output[i] * output[i] * (T{1} - output[i]);
    return dx;
}

// --- loss ------------------------------------------------------------------

LossValue bce_loss(double prediction, int label) {
    if (label != 0 && label != 1)
        throw Error(Errc::invalid_argument, "bce_loss: label must be 0 or 1, got " + std::to_string(label));
    if (std::isnan(prediction)) throw Error(Errc::non_finite, "bce_loss: prediction is NaN");
    const double p = std::clamp(prediction, kBceClamp, 1.0 - kBceClamp);
    if (label == 1) return {-std::log(p), -1.0 / p};
    return {-std::log1p(-p), 1.0 / (1.0 - p)};
}

// --- adam ------------------------------------------------------------------

template <typename T>
void adam_update(BasicTensor<T>& param, const BasicTensor<T>& grad, AdamState<T>& state) {
    if (param.shape() != grad.shape() || param.shape() != state.first_moment.shape() ||
        param.shape() != state.second_moment.shape())
        shape_error("adam_step", "param " + shape_str(param.shape()) + ", grad " +
                                     shape_str(grad.shape()) + ", moments " +
                                     shape_str(state.first_moment.shape()) + " must agree");
    const AdamConfig& c = state.config;
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);
    const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);

    T* p = param.raw();
    T* m = state.first_moment.raw();
    T* v = state.second_moment.raw();
    const T* g = grad.raw();
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = b1 * m[i] + (T{1} - b1) * g[i];
        v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
        const double mhat = static_cast<double>(m[i]) / bc1;
        const double vhat = static_cast<double>(v[i]) / bc2;
        p[i] = static_cast<T>(static_cast<double>(p[i]) - c.lr * mhat / (std::sqrt(vhat) + c.epsilon));
    }
}

template <typename T>
AdamStepResult<T> adam_step(const BasicTensor<T>& param, const BasicTensor<T>& grad,
                            const AdamState<T>& state) {
    AdamStepResult<T> r{param, state};
    adam_update(r.param, grad, r.state);
    return r;
}

// --- instantiations --------------------------------------------------------

#define NUMAFF_INSTANTIATE_LAYERS(T)                                                              \
    template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                   const BasicTensor<T>&);                                        \
    template Conv2dGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                            const BasicTensor<T>&);                               \
    template MaxPoolResult<T> maxpool2(const BasicTensor<T>&);                                    \
    template BasicTensor<T> maxpool2_backward(const BasicTensor<T>&,                              \
                                              const std::vector<std::size_t>&, const Shape&);     \
    template BasicTensor<T> dense(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                  const BasicTensor<T>&);                                         \
    template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                          const BasicTensor<T>&);                                 \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                          \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);          \
    template T sigmoid(T) noexcept;                                                               \
    template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                       \
    template BasicTensor<T> sigmoid_backward(const BasicTensor<T>&, const BasicTensor<T>&);       \
    template void adam_update(BasicTensor<T>&, const BasicTensor<T>&, AdamState<T>&);             \
    template AdamStepResult<T> adam_step(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                         const AdamState<T>&);

NUMAFF_INSTANTIATE_LAYERS(float)
NUMAFF_INSTANTIATE_LAYERS(double)

#undef NUMAFF_INSTANTIATE_LAYERS

} // namespace numaff
