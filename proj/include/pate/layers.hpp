#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pate/tensor.hpp"

namespace pate {

enum class LayerKind { conv2d, maxpool2d, relu, flatten, linear };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::maxpool2d: return "maxpool2d";
        case LayerKind::relu: return "relu";
        case LayerKind::flatten: return "flatten";
        case LayerKind::linear: return "linear";
    }
    return "?";
}

/// One layer of the fixed set. Convolutions are 5x5, stride 1, no padding;
/// pooling is 2x2, stride 2. Output shapes are pure functions of input shape.
struct LayerSpec {
    LayerKind kind;
    int in_channels = 0;   // conv2d
    int out_channels = 0;  // conv2d
    int kernel = 5;        // conv2d
    int window = 2;        // maxpool2d
    int stride = 2;        // maxpool2d
    int in_features = 0;   // linear
    int out_features = 0;  // linear

    static LayerSpec conv2d(int in_ch, int out_ch, int kernel = 5) {
        LayerSpec s{LayerKind::conv2d};
        s.in_channels = in_ch;
        s.out_channels = out_ch;
        s.kernel = kernel;
        return s;
    }
    static LayerSpec maxpool2d() { return LayerSpec{LayerKind::maxpool2d}; }
    static LayerSpec relu() { return LayerSpec{LayerKind::relu}; }
    static LayerSpec flatten() { return LayerSpec{LayerKind::flatten}; }
    static LayerSpec linear(int in_f, int out_f) {
        LayerSpec s{LayerKind::linear};
        s.in_features = in_f;
        s.out_features = out_f;
        return s;
    }

    bool has_params() const { return kind == LayerKind::conv2d || kind == LayerKind::linear; }
};

/// Shape of a single sample (no batch dimension) after this layer.
inline std::vector<int> output_shape(const LayerSpec& layer, const std::vector<int>& in) {
    auto fail = [&](const std::string& why) {
        throw std::invalid_argument(std::string(layer_kind_name(layer.kind)) + ": " + why +
                                    " (input shape " + Tensor::shape_string(in) + ")");
    };
    switch (layer.kind) {
        case LayerKind::conv2d: {
            if (in.size() != 3) fail("expects CxHxW input");
            if (in[0] != layer.in_channels)
                fail("expects " + std::to_string(layer.in_channels) + " input channels");
            const int oh = in[1] - layer.kernel + 1;
            const int ow = in[2] - layer.kernel + 1;
            if (oh <= 0 || ow <= 0) fail("input smaller than kernel");
            return {layer.out_channels, oh, ow};
        }
        case LayerKind::maxpool2d: {
            if (in.size() != 3) fail("expects CxHxW input");
            if (in[1] % layer.window != 0 || in[2] % layer.window != 0)
                fail("spatial dims must be divisible by the pooling window");
            return {in[0], in[1] / layer.stride, in[2] / layer.stride};
        }
        case LayerKind::relu:
            return in;
        case LayerKind::flatten: {
            int n = 1;
            for (int d : in) n *= d;
            return {n};
        }
        case LayerKind::linear: {
            if (in.size() != 1) fail("expects flattened input");
            if (in[0] != layer.in_features)
                fail("expects " + std::to_string(layer.in_features) + " input features, got " +
                     std::to_string(in[0]));
            return {layer.out_features};
        }
    }
    fail("unknown layer kind");
    return {};
}

// ---------------------------------------------------------------------------
// Single-sample kernels. All loops run in a fixed order (output channel,
// input channel, kernel row/col, then row-major spatial) so accumulation is
// deterministic. The inner spatial loops touch contiguous rows and vectorize.
// ---------------------------------------------------------------------------

namespace kernels {

template <typename T>
void conv2d_forward(const T* in, int C, int H, int W, const T* weight, const T* bias, int O,
                    int K, T* out) {
    const int OH = H - K + 1;
    const int OW = W - K + 1;
    for (int o = 0; o < O; ++o) {
        T* plane = out + static_cast<std::size_t>(o) * OH * OW;
        std::fill(plane, plane + static_cast<std::size_t>(OH) * OW, bias[o]);
        for (int c = 0; c < C; ++c) {
            const T* inplane = in + static_cast<std::size_t>(c) * H * W;
            for (int u = 0; u < K; ++u) {
                for (int v = 0; v < K; ++v) {
                    const T wv = weight[((static_cast<std::size_t>(o) * C + c) * K + u) * K + v];
                    for (int i = 0; i < OH; ++i) {
                        const T* src = inplane + static_cast<std::size_t>(i + u) * W + v;
                        T* dst = plane + static_cast<std::size_t>(i) * OW;
                        for (int j = 0; j < OW; ++j) dst[j] += wv * src[j];
                    }
                }
            }
        }
    }
}

template <typename T>
void conv2d_backward(const T* in, int C, int H, int W, const T* weight, int O, int K,
                     const T* dout, T* din, T* dweight, T* dbias) {
    const int OH = H - K + 1;
    const int OW = W - K + 1;
    for (int o = 0; o < O; ++o) {
        const T* dplane = dout + static_cast<std::size_t>(o) * OH * OW;
        T acc = 0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(OH) * OW; ++i) acc += dplane[i];
        dbias[o] += acc;
        for (int c = 0; c < C; ++c) {
            const T* inplane = in + static_cast<std::size_t>(c) * H * W;
            T* dinplane = din ? din + static_cast<std::size_t>(c) * H * W : nullptr;
            for (int u = 0; u < K; ++u) {
                for (int v = 0; v < K; ++v) {
                    const std::size_t widx = ((static_cast<std::size_t>(o) * C + c) * K + u) * K + v;
                    const T wv = weight[widx];
                    T wgrad = 0;
                    for (int i = 0; i < OH; ++i) {
                        const T* src = inplane + static_cast<std::size_t>(i + u) * W + v;
                        const T* dst = dplane + static_cast<std::size_t>(i) * OW;
                        for (int j = 0; j < OW; ++j) wgrad += dst[j] * src[j];
                        if (dinplane) {
                            T* dsrc = dinplane + static_cast<std::size_t>(i + u) * W + v;
                            for (int j = 0; j < OW; ++j) dsrc[j] += wv * dst[j];
                        }
                    }
                    dweight[widx] += wgrad;
                }
            }
        }
    }
}

/// 2x2 stride-2 max pooling; ties go to the first candidate in row-major
/// scan order. argmax holds the flat input-plane index of each winner.
template <typename T>
void maxpool2d_forward(const T* in, int C, int H, int W, int window, int stride, T* out,
                       int* argmax) {
    const int OH = H / stride;
    const int OW = W / stride;
    std::size_t oidx = 0;
    for (int c = 0; c < C; ++c) {
        const T* plane = in + static_cast<std::size_t>(c) * H * W;
        for (int i = 0; i < OH; ++i) {
            for (int j = 0; j < OW; ++j, ++oidx) {
                const int base_i = i * stride;
                const int base_j = j * stride;
                T best = plane[static_cast<std::size_t>(base_i) * W + base_j];
                int best_idx = base_i * W + base_j;
                for (int u = 0; u < window; ++u) {
                    for (int v = 0; v < window; ++v) {
                        const int idx = (base_i + u) * W + (base_j + v);
                        const T val = plane[idx];
                        if (val > best) {
                            best = val;
                            best_idx = idx;
                        }
                    }
                }
                out[oidx] = best;
                argmax[oidx] = best_idx + c * H * W;
            }
        }
    }
}

template <typename T>
void maxpool2d_backward(const T* dout, const int* argmax, std::size_t out_size, T* din) {
    for (std::size_t i = 0; i < out_size; ++i) din[argmax[i]] += dout[i];
}

template <typename T>
void relu_forward(const T* in, std::size_t n, T* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
}

// Derivative at exactly 0 is taken as 0.
template <typename T>
void relu_backward(const T* in, const T* dout, std::size_t n, T* din) {
    for (std::size_t i = 0; i < n; ++i) din[i] = in[i] > T(0) ? dout[i] : T(0);
}

template <typename T>
void linear_forward(const T* in, int I, const T* weight, const T* bias, int O, T* out) {
    for (int o = 0; o < O; ++o) {
        const T* row = weight + static_cast<std::size_t>(o) * I;
        T acc = bias[o];
        for (int i = 0; i < I; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

template <typename T>
void linear_backward(const T* in, int I, const T* weight, int O, const T* dout, T* din,
                     T* dweight, T* dbias) {
    if (din) std::fill(din, din + I, T(0));
    for (int o = 0; o < O; ++o) {
        const T d = dout[o];
        dbias[o] += d;
        const T* row = weight + static_cast<std::size_t>(o) * I;
        T* wrow = dweight + static_cast<std::size_t>(o) * I;
        for (int i = 0; i < I; ++i) wrow[i] += d * in[i];
        if (din)
            for (int i = 0; i < I; ++i) din[i] += d * row[i];
    }
}

}  // namespace kernels
}  // namespace pate
