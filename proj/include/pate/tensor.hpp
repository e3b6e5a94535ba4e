#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pate {

/// Dense n-dimensional array, row-major. The float instantiation is the
/// working precision everywhere; the double one exists for the gradient
/// verification mode.
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;

    explicit TensorT(std::vector<int> s) : shape(std::move(s)), data(numel(shape), T(0)) {}

    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel(shape))
            throw std::invalid_argument("tensor: data length " + std::to_string(data.size()) +
                                        " does not match shape " + shape_string(shape));
    }

    static std::size_t numel(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension in shape " + shape_string(s));
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t size() const { return data.size(); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    static std::string shape_string(const std::vector<int>& s) {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
        os << "]";
        return os.str();
    }
};

using Tensor = TensorT<float>;

template <typename T, typename U>
TensorT<T> tensor_cast(const TensorT<U>& src) {
    TensorT<T> out(src.shape);
    for (std::size_t i = 0; i < src.data.size(); ++i) out.data[i] = static_cast<T>(src.data[i]);
    return out;
}

}  // namespace pate
