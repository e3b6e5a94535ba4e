#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pate/errors.hpp"
#include "pate/rng.hpp"
#include "pate/tensor.hpp"

namespace pate {

/// Labeled image set, stored as normalized floats in [0,1], N x C x H x W.
struct Dataset {
    int channels = 3, height = 32, width = 32;
    int num_classes = 10;
    std::vector<float> images;
    std::vector<int> labels;
    std::string split;

    std::size_t size() const { return labels.size(); }
    std::size_t sample_size() const {
        return static_cast<std::size_t>(channels) * height * width;
    }
    std::span<const float> image(std::size_t i) const {
        return {images.data() + i * sample_size(), sample_size()};
    }
};

/// Copies the samples at `idx` into a batch tensor and label vector.
inline Tensor make_batch(const Dataset& data, std::span<const std::size_t> idx,
                         std::vector<int>& labels_out) {
    Tensor batch({static_cast<int>(idx.size()), data.channels, data.height, data.width});
    labels_out.resize(idx.size());
    const std::size_t n = data.sample_size();
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const auto img = data.image(idx[b]);
        std::copy(img.begin(), img.end(), batch.ptr() + b * n);
        labels_out[b] = data.labels[idx[b]];
    }
    return batch;
}

// ---------------------------------------------------------------------------
// CIFAR binary format. One record = 1 label byte (2 for CIFAR-100:
// coarse then fine) followed by 3072 pixel bytes, channel-major R,G,B,
// each plane row-major.
// ---------------------------------------------------------------------------

namespace detail {

inline void read_cifar_file(const std::filesystem::path& path, int label_bytes, int used_label,
                            int expected_records, Dataset& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cifar: cannot open " + path.string());
    const std::size_t record = static_cast<std::size_t>(label_bytes) + 3072;
    const std::size_t expected_bytes = record * static_cast<std::size_t>(expected_records);
    std::vector<unsigned char> buf(expected_bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected_bytes));
    if (static_cast<std::size_t>(in.gcount()) != expected_bytes)
        throw io_error("cifar: " + path.string() + " holds " + std::to_string(in.gcount()) +
                       " bytes, expected " + std::to_string(expected_bytes) + " (" +
                       std::to_string(expected_records) + " records of " + std::to_string(record) +
                       " bytes)");
    for (int r = 0; r < expected_records; ++r) {
        const unsigned char* rec = buf.data() + record * static_cast<std::size_t>(r);
        out.labels.push_back(static_cast<int>(rec[used_label]));
        const unsigned char* pix = rec + label_bytes;
        for (std::size_t i = 0; i < 3072; ++i)
            out.images.push_back(static_cast<float>(pix[i]) / 255.0f);
    }
}

}  // namespace detail

/// Loads the standard CIFAR-10 binary batches: data_batch_{1..5}.bin plus
/// test_batch.bin, 50,000 train / 10,000 test samples scaled to [0,1].
inline std::pair<Dataset, Dataset> load_cifar10(const std::string& dir) {
    Dataset train, test;
    train.split = "train";
    test.split = "test";
    train.num_classes = test.num_classes = 10;
    const std::filesystem::path root(dir);
    for (int i = 1; i <= 5; ++i)
        detail::read_cifar_file(root / ("data_batch_" + std::to_string(i) + ".bin"), 1, 0, 10000,
                                train);
    detail::read_cifar_file(root / "test_batch.bin", 1, 0, 10000, test);
    return {std::move(train), std::move(test)};
}

/// CIFAR-100 binary layout (coarse + fine label byte per record; the fine
/// label is used).
inline std::pair<Dataset, Dataset> load_cifar100(const std::string& dir) {
    Dataset train, test;
    train.split = "train";
    test.split = "test";
    train.num_classes = test.num_classes = 100;
    const std::filesystem::path root(dir);
    detail::read_cifar_file(root / "train.bin", 2, 1, 50000, train);
    detail::read_cifar_file(root / "test.bin", 2, 1, 10000, test);
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// MNIST IDX format: big-endian headers, magic 2051 for images and 2049 for
// labels. Images are zero-padded from 28x28 to 32x32 and replicated to three
// channels so they feed the same 3x32x32 input pipeline.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw io_error("mnist: truncated header in " + what);
    return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

inline void read_idx_pair(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path, Dataset& out) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw io_error("mnist: cannot open " + images_path.string());
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw io_error("mnist: cannot open " + labels_path.string());

    const std::uint32_t img_magic = read_u32_be(imgs, images_path.string());
    if (img_magic != 2051)
        throw io_error("mnist: bad image magic " + std::to_string(img_magic) + " in " +
                       images_path.string() + " (expected 2051)");
    const std::uint32_t n = read_u32_be(imgs, images_path.string());
    const std::uint32_t rows = read_u32_be(imgs, images_path.string());
    const std::uint32_t cols = read_u32_be(imgs, images_path.string());
    if (rows != 28 || cols != 28)
        throw io_error("mnist: expected 28x28 images, got " + std::to_string(rows) + "x" +
                       std::to_string(cols));

    const std::uint32_t lab_magic = read_u32_be(labs, labels_path.string());
    if (lab_magic != 2049)
        throw io_error("mnist: bad label magic " + std::to_string(lab_magic) + " in " +
                       labels_path.string() + " (expected 2049)");
    const std::uint32_t n_labels = read_u32_be(labs, labels_path.string());
    if (n_labels != n)
        throw io_error("mnist: image/label count mismatch (" + std::to_string(n) + " vs " +
                       std::to_string(n_labels) + ")");

    std::vector<unsigned char> pixels(static_cast<std::size_t>(n) * 28 * 28);
    imgs.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (static_cast<std::size_t>(imgs.gcount()) != pixels.size())
        throw io_error("mnist: truncated image data in " + images_path.string());
    std::vector<unsigned char> labels(n);
    labs.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
    if (static_cast<std::size_t>(labs.gcount()) != labels.size())
        throw io_error("mnist: truncated label data in " + labels_path.string());

    out.num_classes = 10;
    out.images.reserve(out.images.size() + static_cast<std::size_t>(n) * 3 * 32 * 32);
    for (std::uint32_t s = 0; s < n; ++s) {
        std::array<float, 32 * 32> plane{};
        const unsigned char* src = pixels.data() + static_cast<std::size_t>(s) * 28 * 28;
        for (int r = 0; r < 28; ++r)
            for (int c = 0; c < 28; ++c)
                plane[static_cast<std::size_t>(r + 2) * 32 + (c + 2)] =
                    static_cast<float>(src[r * 28 + c]) / 255.0f;
        for (int ch = 0; ch < 3; ++ch)
            out.images.insert(out.images.end(), plane.begin(), plane.end());
        out.labels.push_back(static_cast<int>(labels[s]));
    }
}

}  // namespace detail

inline std::pair<Dataset, Dataset> load_mnist(const std::string& dir) {
    Dataset train, test;
    train.split = "train";
    test.split = "test";
    const std::filesystem::path root(dir);
    auto pick = [&](const char* a, const char* b) {
        return std::filesystem::exists(root / a) ? root / a : root / b;
    };
    detail::read_idx_pair(pick("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
                          pick("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"), train);
    detail::read_idx_pair(pick("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
                          pick("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"), test);
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

struct ChannelStats {
    std::array<float, 3> mean{}, stddev{};
};

/// Per-channel mean and standard deviation over a whole split, computed once
/// and reused by the normalize toggle.
inline ChannelStats compute_channel_stats(const Dataset& data) {
    ChannelStats st;
    const std::size_t plane = static_cast<std::size_t>(data.height) * data.width;
    for (int c = 0; c < data.channels; ++c) {
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t s = 0; s < data.size(); ++s) {
            const float* p = data.images.data() + s * data.sample_size() + c * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum += p[i];
                sum_sq += static_cast<double>(p[i]) * p[i];
            }
        }
        const double n = static_cast<double>(data.size()) * static_cast<double>(plane);
        const double mean = sum / n;
        const double var = std::max(0.0, sum_sq / n - mean * mean);
        st.mean[c] = static_cast<float>(mean);
        st.stddev[c] = static_cast<float>(std::sqrt(var));
    }
    return st;
}

struct AugmentPolicy {
    bool crop = false;  // zero-pad crop_pad px, then a random HxW window
    int crop_pad = 4;
    bool hflip = false;  // horizontal flip with p = 0.5
    bool normalize = false;
    ChannelStats stats;

    bool any() const { return crop || hflip || normalize; }
};

/// In-place batch augmentation. With every toggle off this is the identity.
/// Output shape always equals input shape.
inline void augment_batch(Tensor& batch, Rng& rng, const AugmentPolicy& policy) {
    if (!policy.any()) return;
    const int B = batch.shape[0], C = batch.shape[1], H = batch.shape[2], W = batch.shape[3];
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t sample = static_cast<std::size_t>(C) * plane;
    std::vector<float> padded;
    for (int b = 0; b < B; ++b) {
        float* img = batch.ptr() + sample * static_cast<std::size_t>(b);
        if (policy.crop) {
            const int P = policy.crop_pad;
            const int PH = H + 2 * P, PW = W + 2 * P;
            padded.assign(static_cast<std::size_t>(C) * PH * PW, 0.0f);
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < H; ++i)
                    std::copy(img + c * plane + static_cast<std::size_t>(i) * W,
                              img + c * plane + static_cast<std::size_t>(i) * W + W,
                              padded.data() + (static_cast<std::size_t>(c) * PH + i + P) * PW + P);
            const int oi = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * P + 1)));
            const int oj = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * P + 1)));
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < H; ++i)
                    std::copy(padded.data() + (static_cast<std::size_t>(c) * PH + i + oi) * PW + oj,
                              padded.data() + (static_cast<std::size_t>(c) * PH + i + oi) * PW + oj + W,
                              img + c * plane + static_cast<std::size_t>(i) * W);
        }
        if (policy.hflip && rng.bernoulli(0.5)) {
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < H; ++i) {
                    float* row = img + c * plane + static_cast<std::size_t>(i) * W;
                    std::reverse(row, row + W);
                }
        }
        if (policy.normalize) {
            for (int c = 0; c < C; ++c) {
                const float m = policy.stats.mean[c];
                const float sd = policy.stats.stddev[c] > 0 ? policy.stats.stddev[c] : 1.0f;
                float* p = img + c * plane;
                for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - m) / sd;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Subsets
// ---------------------------------------------------------------------------

inline Dataset dataset_from_indices(const Dataset& data, std::span<const std::size_t> idx) {
    Dataset out;
    out.channels = data.channels;
    out.height = data.height;
    out.width = data.width;
    out.num_classes = data.num_classes;
    out.split = data.split;
    out.images.reserve(idx.size() * data.sample_size());
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) {
        const auto img = data.image(i);
        out.images.insert(out.images.end(), img.begin(), img.end());
        out.labels.push_back(data.labels[i]);
    }
    return out;
}

/// Uniform sample of floor(fraction*N) training samples, deterministic per
/// seed. Default draws distinct indices (a true subset); with_replacement
/// switches to classical bootstrap resampling.
inline Dataset bootstrap_subset(const Dataset& data, double fraction, std::uint64_t seed,
                                bool with_replacement = false) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("bootstrap_subset: fraction must be in (0,1]");
    const std::size_t n = static_cast<std::size_t>(fraction * static_cast<double>(data.size()));
    Rng rng(seed);
    std::vector<std::size_t> idx;
    if (with_replacement) {
        idx.reserve(n);
        for (std::size_t i = 0; i < n; ++i) idx.push_back(rng.below(data.size()));
    } else {
        idx = index_range(data.size());
        rng.shuffle(idx);
        idx.resize(n);
    }
    return dataset_from_indices(data, idx);
}

/// First-n random subset used for landscape evaluation sets and sample caps.
inline Dataset random_subset(const Dataset& data, std::size_t n, std::uint64_t seed) {
    n = std::min(n, data.size());
    Rng rng(seed);
    std::vector<std::size_t> idx = index_range(data.size());
    rng.shuffle(idx);
    idx.resize(n);
    return dataset_from_indices(data, idx);
}

// ---------------------------------------------------------------------------
// Synthetic benchmark set. Class identity is carried by a smooth random
// pattern; samples add cyclic shifts, pixel noise and a little label noise so
// single models plateau well below 100% and leave measurable ensembling
// headroom. Fully determined by the seed.
// ---------------------------------------------------------------------------

struct SynthConfig {
    int num_classes = 10;
    int train_n = 4000;
    int test_n = 2000;
    std::uint64_t seed = 7;
    double noise = 0.55;        // pixel noise std
    int max_shift = 4;          // cyclic shift radius
    double label_noise = 0.04;  // fraction of labels resampled uniformly
};

namespace detail {

inline std::vector<float> synth_prototype(Rng& rng) {
    // Low-frequency cosine mixture per channel, squashed into [0,1].
    std::vector<float> img(3 * 32 * 32, 0.0f);
    for (int c = 0; c < 3; ++c) {
        std::array<double, 16> amp{}, phase_x{}, phase_y{};
        for (int f = 0; f < 16; ++f) {
            amp[f] = rng.gaussian();
            phase_x[f] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            phase_y[f] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        }
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j) {
                double v = 0.0;
                for (int fx = 0; fx < 4; ++fx)
                    for (int fy = 0; fy < 4; ++fy) {
                        const int f = fx * 4 + fy;
                        v += amp[f] * std::cos(2.0 * 3.14159265358979323846 *
                                                   (fx * i + fy * j) / 32.0 +
                                               phase_x[f] + phase_y[f]);
                    }
                img[static_cast<std::size_t>(c) * 1024 + i * 32 + j] =
                    static_cast<float>(0.5 + 0.5 * std::tanh(v / 3.0));
            }
    }
    return img;
}

inline void synth_fill(Dataset& out, int n, const std::vector<std::vector<float>>& protos,
                       const SynthConfig& cfg, Rng& rng) {
    out.images.reserve(static_cast<std::size_t>(n) * 3 * 32 * 32);
    out.labels.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.num_classes)));
        const auto& proto = protos[static_cast<std::size_t>(cls)];
        const int di = static_cast<int>(rng.below(2 * cfg.max_shift + 1)) - cfg.max_shift;
        const int dj = static_cast<int>(rng.below(2 * cfg.max_shift + 1)) - cfg.max_shift;
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 32; ++i)
                for (int j = 0; j < 32; ++j) {
                    const int si = ((i + di) % 32 + 32) % 32;
                    const int sj = ((j + dj) % 32 + 32) % 32;
                    double v = proto[static_cast<std::size_t>(c) * 1024 + si * 32 + sj] +
                               cfg.noise * rng.gaussian();
                    out.images.push_back(static_cast<float>(std::clamp(v, 0.0, 1.0)));
                }
        int label = cls;
        if (cfg.label_noise > 0 && rng.bernoulli(cfg.label_noise))
            label = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.num_classes)));
        out.labels.push_back(label);
    }
}

}  // namespace detail

inline std::pair<Dataset, Dataset> make_synthetic(const SynthConfig& cfg = {}) {
    if (cfg.num_classes < 2) throw std::invalid_argument("make_synthetic: need >= 2 classes");
    std::vector<std::vector<float>> protos;
    Rng proto_rng(mix_seed(cfg.seed, 0));
    for (int c = 0; c < cfg.num_classes; ++c) protos.push_back(detail::synth_prototype(proto_rng));

    Dataset train, test;
    train.split = "train";
    test.split = "test";
    train.num_classes = test.num_classes = cfg.num_classes;
    Rng train_rng(mix_seed(cfg.seed, 1));
    Rng test_rng(mix_seed(cfg.seed, 2));
    detail::synth_fill(train, cfg.train_n, protos, cfg, train_rng);
    detail::synth_fill(test, cfg.test_n, protos, cfg, test_rng);
    return {std::move(train), std::move(test)};
}

}  // namespace pate
