#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "numaff/error.hpp"

namespace numaff {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major array of rank <= 4.
///
/// T is float for training and inference, double for gradient checking.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T{0})
        : shape_(checked(std::move(shape))), data_(shape_numel(shape_), fill) {}

    BasicTensor(Shape shape, std::vector<T> data)
        : shape_(checked(std::move(shape))), data_(std::move(data)) {
        if (data_.size() != shape_numel(shape_))
            throw Error(Errc::shape_mismatch,
                        "tensor data length " + std::to_string(data_.size()) +
                            " does not match shape " + shape_str(shape_));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    T* raw() noexcept { return data_.data(); }
    const T* raw() const noexcept { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    /// Same data under a new shape of equal element count.
    BasicTensor reshaped(Shape shape) const {
        return BasicTensor(std::move(shape), data_);
    }

    template <typename U>
    BasicTensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return BasicTensor<U>(shape_, std::move(out));
    }

    bool all_finite() const noexcept {
        for (T v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    static Shape checked(Shape s) {
        if (s.size() > 4)
            throw Error(Errc::shape_mismatch, "tensor rank " + std::to_string(s.size()) + " exceeds 4");
        return s;
    }

    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Throws Errc::non_finite naming `where` if any element is NaN or Inf.
template <typename T>
void require_finite(const BasicTensor<T>& t, const char* where) {
    if (!t.all_finite())
        throw Error(Errc::non_finite, std::string("non-finite value entering ") + where);
}

} // namespace numaff
