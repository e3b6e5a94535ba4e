#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pate/layers.hpp"
#include "pate/parallel.hpp"
#include "pate/rng.hpp"
#include "pate/tensor.hpp"

namespace pate {

enum class ParamRole { weight, bias };

/// One named tensor inside the flat parameter store. Offsets are assigned in
/// layer order, weights before biases, so the global index of every scalar is
/// dense, stable and fully determined by the graph structure.
struct ParamEntry {
    std::string name;
    ParamRole role;
    int layer;  // index into NetworkT::layers
    std::vector<int> shape;
    std::size_t offset;
    std::size_t size;
};

/// A layer sequence plus its flat parameter store. Immutable during forward
/// and backward passes; only optimizer steps mutate `params`. Independent
/// instances can be used from different threads.
template <typename T>
struct NetworkT {
    std::vector<int> input_shape;  // C,H,W of one sample
    std::vector<LayerSpec> layers;
    std::vector<ParamEntry> entries;
    std::vector<T> params;

    std::size_t param_count() const { return params.size(); }

    std::span<T> span_of(const ParamEntry& e) { return {params.data() + e.offset, e.size}; }
    std::span<const T> span_of(const ParamEntry& e) const {
        return {params.data() + e.offset, e.size};
    }

    /// Entry pair (weight, bias) for a parameterized layer, by layer index.
    std::pair<const ParamEntry*, const ParamEntry*> layer_params(int layer) const {
        const ParamEntry* w = nullptr;
        const ParamEntry* b = nullptr;
        for (const auto& e : entries) {
            if (e.layer != layer) continue;
            (e.role == ParamRole::weight ? w : b) = &e;
        }
        return {w, b};
    }

    int num_classes() const {
        for (auto it = layers.rbegin(); it != layers.rend(); ++it)
            if (it->kind == LayerKind::linear) return it->out_features;
        throw std::invalid_argument("network: no linear output layer");
    }
};

using NetworkGraph = NetworkT<float>;

/// Builds a network, validating that consecutive layer shapes compose, and
/// lays out the canonical parameter flattening.
template <typename T = float>
NetworkT<T> make_network(std::vector<int> input_shape, std::vector<LayerSpec> layers) {
    NetworkT<T> net;
    net.input_shape = std::move(input_shape);
    net.layers = std::move(layers);

    std::vector<int> shape = net.input_shape;
    std::size_t offset = 0;
    int conv_no = 0, fc_no = 0;
    for (int li = 0; li < static_cast<int>(net.layers.size()); ++li) {
        const LayerSpec& spec = net.layers[li];
        shape = output_shape(spec, shape);  // throws if composition fails
        if (!spec.has_params()) continue;

        std::string base;
        std::vector<int> wshape, bshape;
        if (spec.kind == LayerKind::conv2d) {
            base = "conv" + std::to_string(++conv_no);
            wshape = {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel};
            bshape = {spec.out_channels};
        } else {
            base = "fc" + std::to_string(++fc_no);
            wshape = {spec.out_features, spec.in_features};
            bshape = {spec.out_features};
        }
        const std::size_t wsize = TensorT<T>::numel(wshape);
        const std::size_t bsize = TensorT<T>::numel(bshape);
        net.entries.push_back({base + ".weight", ParamRole::weight, li, wshape, offset, wsize});
        offset += wsize;
        net.entries.push_back({base + ".bias", ParamRole::bias, li, bshape, offset, bsize});
        offset += bsize;
    }
    net.params.assign(offset, T(0));
    return net;
}

/// Per-sample shape trace, input first, logits last.
template <typename T>
std::vector<std::vector<int>> shape_trace(const NetworkT<T>& net) {
    std::vector<std::vector<int>> trace{net.input_shape};
    for (const auto& layer : net.layers) trace.push_back(output_shape(layer, trace.back()));
    return trace;
}

/// Fan-in scaled uniform init (He-style for ReLU nets): weights from
/// U(-sqrt(6/fan_in), +sqrt(6/fan_in)), biases zero.
template <typename T>
void init_he_uniform(NetworkT<T>& net, std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& e : net.entries) {
        auto span = net.span_of(e);
        if (e.role == ParamRole::bias) {
            std::fill(span.begin(), span.end(), T(0));
            continue;
        }
        const LayerSpec& spec = net.layers[e.layer];
        const double fan_in = spec.kind == LayerKind::conv2d
                                  ? double(spec.in_channels) * spec.kernel * spec.kernel
                                  : double(spec.in_features);
        const double bound = std::sqrt(6.0 / fan_in);
        for (auto& v : span) v = static_cast<T>(rng.uniform(-bound, bound));
    }
}

template <typename T, typename U>
NetworkT<T> network_cast(const NetworkT<U>& src) {
    NetworkT<T> out;
    out.input_shape = src.input_shape;
    out.layers = src.layers;
    out.entries = src.entries;
    out.params.resize(src.params.size());
    for (std::size_t i = 0; i < src.params.size(); ++i) out.params[i] = static_cast<T>(src.params[i]);
    return out;
}

namespace detail {

/// Scratch space for one sample's forward (and optionally backward) pass.
template <typename T>
struct Workspace {
    std::vector<std::vector<T>> acts;        // acts[i] = input of layer i; back() = logits
    std::vector<std::vector<int>> pool_arg;  // per layer (empty unless maxpool)
    std::vector<std::vector<T>> dacts;       // gradient buffers, same layout as acts

    void prepare(const std::vector<std::vector<int>>& trace, bool for_backward) {
        acts.resize(trace.size());
        pool_arg.resize(trace.size());
        if (for_backward) dacts.resize(trace.size());
        for (std::size_t i = 0; i < trace.size(); ++i) {
            std::size_t n = 1;
            for (int d : trace[i]) n *= static_cast<std::size_t>(d);
            acts[i].assign(n, T(0));
            if (for_backward) dacts[i].assign(n, T(0));
        }
    }
};

template <typename T>
void forward_sample(const NetworkT<T>& net, const std::vector<std::vector<int>>& trace,
                    const T* sample, Workspace<T>& ws) {
    std::copy(sample, sample + ws.acts[0].size(), ws.acts[0].begin());
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const LayerSpec& spec = net.layers[li];
        const auto& in_shape = trace[li];
        const T* in = ws.acts[li].data();
        T* out = ws.acts[li + 1].data();
        switch (spec.kind) {
            case LayerKind::conv2d: {
                auto [w, b] = net.layer_params(static_cast<int>(li));
                kernels::conv2d_forward(in, in_shape[0], in_shape[1], in_shape[2],
                                        net.span_of(*w).data(), net.span_of(*b).data(),
                                        spec.out_channels, spec.kernel, out);
                break;
            }
            case LayerKind::maxpool2d: {
                ws.pool_arg[li].resize(ws.acts[li + 1].size());
                kernels::maxpool2d_forward(in, in_shape[0], in_shape[1], in_shape[2], spec.window,
                                           spec.stride, out, ws.pool_arg[li].data());
                break;
            }
            case LayerKind::relu:
                kernels::relu_forward(in, ws.acts[li].size(), out);
                break;
            case LayerKind::flatten:
                std::copy(ws.acts[li].begin(), ws.acts[li].end(), ws.acts[li + 1].begin());
                break;
            case LayerKind::linear: {
                auto [w, b] = net.layer_params(static_cast<int>(li));
                kernels::linear_forward(in, spec.in_features, net.span_of(*w).data(),
                                        net.span_of(*b).data(), spec.out_features, out);
                break;
            }
        }
    }
}

/// Backward through all layers for one sample. `dlogits` must already hold
/// the loss gradient w.r.t. the logits; parameter gradients accumulate into
/// `grads` (flat, unscaled).
template <typename T>
void backward_sample(const NetworkT<T>& net, const std::vector<std::vector<int>>& trace,
                     Workspace<T>& ws, const T* dlogits, std::vector<T>& grads) {
    std::copy(dlogits, dlogits + ws.dacts.back().size(), ws.dacts.back().begin());
    for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
        const LayerSpec& spec = net.layers[li];
        const auto& in_shape = trace[li];
        const T* in = ws.acts[li].data();
        const T* dout = ws.dacts[li + 1].data();
        T* din = ws.dacts[li].data();
        switch (spec.kind) {
            case LayerKind::conv2d: {
                auto [w, b] = net.layer_params(li);
                std::fill(ws.dacts[li].begin(), ws.dacts[li].end(), T(0));
                kernels::conv2d_backward(in, in_shape[0], in_shape[1], in_shape[2],
                                         net.span_of(*w).data(), spec.out_channels, spec.kernel,
                                         dout, li > 0 ? din : nullptr, grads.data() + w->offset,
                                         grads.data() + b->offset);
                break;
            }
            case LayerKind::maxpool2d:
                std::fill(ws.dacts[li].begin(), ws.dacts[li].end(), T(0));
                kernels::maxpool2d_backward(dout, ws.pool_arg[li].data(), ws.dacts[li + 1].size(),
                                            din);
                break;
            case LayerKind::relu:
                kernels::relu_backward(in, dout, ws.acts[li].size(), din);
                break;
            case LayerKind::flatten:
                std::copy(ws.dacts[li + 1].begin(), ws.dacts[li + 1].end(), ws.dacts[li].begin());
                break;
            case LayerKind::linear: {
                auto [w, b] = net.layer_params(li);
                kernels::linear_backward(in, spec.in_features, net.span_of(*w).data(),
                                         spec.out_features, dout, li > 0 ? din : nullptr,
                                         grads.data() + w->offset, grads.data() + b->offset);
                break;
            }
        }
    }
}

template <typename T>
void check_batch_shape(const NetworkT<T>& net, const TensorT<T>& batch) {
    const bool ok = batch.shape.size() == net.input_shape.size() + 1 && batch.shape[0] >= 1 &&
                    std::equal(net.input_shape.begin(), net.input_shape.end(),
                               batch.shape.begin() + 1);
    if (!ok)
        throw std::invalid_argument(
            "forward: batch shape " + Tensor::shape_string(batch.shape) +
            " does not match network input " + Tensor::shape_string(net.input_shape));
}

}  // namespace detail

/// Runs the network on a batch [B x C x H x W]; returns logits [B x K].
/// Deterministic: two calls with identical inputs and parameters produce
/// bitwise-identical outputs.
template <typename T>
TensorT<T> forward(const NetworkT<T>& net, const TensorT<T>& batch) {
    detail::check_batch_shape(net, batch);
    const auto trace = shape_trace(net);
    const int B = batch.shape[0];
    const std::size_t sample_size = batch.size() / static_cast<std::size_t>(B);
    const int K = net.num_classes();
    TensorT<T> logits({B, K});
    detail::Workspace<T> ws;
    ws.prepare(trace, false);
    for (int b = 0; b < B; ++b) {
        detail::forward_sample(net, trace, batch.ptr() + sample_size * b, ws);
        std::copy(ws.acts.back().begin(), ws.acts.back().end(), logits.ptr() + std::size_t(b) * K);
    }
    return logits;
}

/// Row-wise softmax, stabilized by max subtraction. Total on finite input.
template <typename T>
TensorT<T> softmax(const TensorT<T>& logits) {
    if (logits.shape.size() != 2)
        throw std::invalid_argument("softmax: expects BxK logits, got " +
                                    Tensor::shape_string(logits.shape));
    TensorT<T> out(logits.shape);
    const int B = logits.shape[0];
    const int K = logits.shape[1];
    for (int b = 0; b < B; ++b) {
        const T* row = logits.ptr() + std::size_t(b) * K;
        T* orow = out.ptr() + std::size_t(b) * K;
        T mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        T sum = 0;
        for (int k = 0; k < K; ++k) {
            orow[k] = std::exp(row[k] - mx);
            sum += orow[k];
        }
        for (int k = 0; k < K; ++k) orow[k] /= sum;
    }
    return out;
}

/// Mean of -log softmax(logits)[label] over the batch.
template <typename T>
T cross_entropy_loss(const TensorT<T>& logits, const std::vector<int>& labels) {
    if (logits.shape.size() != 2 || static_cast<std::size_t>(logits.shape[0]) != labels.size())
        throw std::invalid_argument("cross_entropy_loss: logits/labels size mismatch");
    const int B = logits.shape[0];
    const int K = logits.shape[1];
    T total = 0;
    for (int b = 0; b < B; ++b) {
        const int label = labels[b];
        if (label < 0 || label >= K)
            throw std::invalid_argument("cross_entropy_loss: label " + std::to_string(label) +
                                        " out of range [0," + std::to_string(K) + ")");
        const T* row = logits.ptr() + std::size_t(b) * K;
        T mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        T sum = 0;
        for (int k = 0; k < K; ++k) sum += std::exp(row[k] - mx);
        total += std::log(sum) - (row[label] - mx);
    }
    return total / static_cast<T>(B);
}

/// Gradient structure: one scalar per parameter, flat, aligned with the
/// network's entry table (same names, shapes and global indices).
template <typename T>
using GradientsT = std::vector<T>;

using Gradients = GradientsT<float>;

/// Forward + analytic reverse pass; returns (mean cross-entropy, gradients).
/// The batch may be split across `workers` threads in contiguous chunks;
/// per-sample results are reduced in a fixed order, so output is
/// deterministic for a fixed worker count.
template <typename T>
std::pair<T, GradientsT<T>> backward(const NetworkT<T>& net, const TensorT<T>& batch,
                                     const std::vector<int>& labels, int workers = 1) {
    detail::check_batch_shape(net, batch);
    const int B = batch.shape[0];
    if (static_cast<std::size_t>(B) != labels.size())
        throw std::invalid_argument("backward: batch/labels size mismatch");
    const int K = net.num_classes();
    for (int label : labels)
        if (label < 0 || label >= K)
            throw std::invalid_argument("backward: label out of range [0," + std::to_string(K) + ")");

    const auto trace = shape_trace(net);
    const std::size_t sample_size = batch.size() / static_cast<std::size_t>(B);
    const int nchunks = std::max(1, std::min(workers, B));

    std::vector<GradientsT<T>> chunk_grads(nchunks);
    std::vector<T> sample_loss(B, T(0));

    parallel_for(static_cast<std::size_t>(nchunks), nchunks, [&](std::size_t w) {
        auto [begin, end] = chunk_bounds(static_cast<std::size_t>(B), nchunks, static_cast<int>(w));
        auto& grads = chunk_grads[w];
        grads.assign(net.params.size(), T(0));
        detail::Workspace<T> ws;
        ws.prepare(trace, true);
        std::vector<T> dlogits(K);
        for (std::size_t b = begin; b < end; ++b) {
            detail::forward_sample(net, trace, batch.ptr() + sample_size * b, ws);
            // Fused softmax + cross-entropy gradient, unscaled by 1/B.
            const T* row = ws.acts.back().data();
            T mx = row[0];
            for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
            T sum = 0;
            for (int k = 0; k < K; ++k) {
                dlogits[k] = std::exp(row[k] - mx);
                sum += dlogits[k];
            }
            const int label = labels[b];
            sample_loss[b] = std::log(sum) - (row[label] - mx);
            for (int k = 0; k < K; ++k) dlogits[k] /= sum;
            dlogits[label] -= T(1);
            detail::backward_sample(net, trace, ws, dlogits.data(), grads);
        }
    });

    T loss = 0;
    for (int b = 0; b < B; ++b) loss += sample_loss[b];
    loss /= static_cast<T>(B);

    GradientsT<T> grads = std::move(chunk_grads[0]);
    for (int c = 1; c < nchunks; ++c)
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += chunk_grads[c][i];
    const T inv_b = T(1) / static_cast<T>(B);
    for (auto& g : grads) g *= inv_b;
    return {loss, std::move(grads)};
}

}  // namespace pate
