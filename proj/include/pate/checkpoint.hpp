#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pate/bitset.hpp"
#include "pate/errors.hpp"
#include "pate/masks.hpp"
#include "pate/network.hpp"

namespace pate {

// Checkpoint format v1
//   magic   "PATECKPT" (8 bytes)
//   u32 LE  format version
//   u32 LE  flags (bit 0: mask present)
//   u32 LE  architecture descriptor length, then that many JSON bytes
//   u64 LE  rng seed record
//   u64 LE  parameter count, then count * f32 LE payload
//   mask (when flagged): u8 scope, u8 granularity, u8 include_output_weights,
//   u8 include_biases, then bit length + packed LE 64-bit words
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[9] = "PATECKPT";

struct Checkpoint {
    NetworkGraph net;
    std::uint64_t seed = 0;
    std::optional<PruneMask> mask;
    PrunableOptions prunable_options;
};

namespace detail {

inline nlohmann::json layer_to_json(const LayerSpec& l) {
    nlohmann::json j;
    j["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
        case LayerKind::conv2d:
            j["in_channels"] = l.in_channels;
            j["out_channels"] = l.out_channels;
            j["kernel"] = l.kernel;
            break;
        case LayerKind::maxpool2d:
            j["window"] = l.window;
            j["stride"] = l.stride;
            break;
        case LayerKind::linear:
            j["in_features"] = l.in_features;
            j["out_features"] = l.out_features;
            break;
        default:
            break;
    }
    return j;
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "conv2d")
        return LayerSpec::conv2d(j.at("in_channels").get<int>(), j.at("out_channels").get<int>(),
                                 j.at("kernel").get<int>());
    if (kind == "maxpool2d") return LayerSpec::maxpool2d();
    if (kind == "relu") return LayerSpec::relu();
    if (kind == "flatten") return LayerSpec::flatten();
    if (kind == "linear")
        return LayerSpec::linear(j.at("in_features").get<int>(), j.at("out_features").get<int>());
    throw io_error("checkpoint: unknown layer kind '" + kind + "'");
}

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

inline std::uint32_t read_u32_le(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw io_error("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const NetworkGraph& net, std::uint64_t seed,
                            const PruneMask* mask = nullptr,
                            PrunableOptions prunable_options = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("checkpoint: cannot open " + path + " for writing");

    out.write(kCheckpointMagic, 8);
    detail::write_u32_le(out, kCheckpointVersion);
    detail::write_u32_le(out, mask != nullptr ? 1u : 0u);

    nlohmann::json arch;
    arch["input_shape"] = net.input_shape;
    arch["layers"] = nlohmann::json::array();
    for (const auto& l : net.layers) arch["layers"].push_back(detail::layer_to_json(l));
    const std::string arch_str = arch.dump();
    detail::write_u32_le(out, static_cast<std::uint32_t>(arch_str.size()));
    out.write(arch_str.data(), static_cast<std::streamsize>(arch_str.size()));

    Bitset::write_u64(out, seed);
    Bitset::write_u64(out, net.params.size());
    for (float p : net.params) {
        std::uint32_t bits;
        std::memcpy(&bits, &p, 4);
        detail::write_u32_le(out, bits);
    }

    if (mask != nullptr) {
        out.put(static_cast<char>(mask->scope == MaskScope::global ? 0 : 1));
        out.put(static_cast<char>(mask->granularity == MaskGranularity::connection ? 0 : 1));
        out.put(static_cast<char>(prunable_options.include_output_weights ? 1 : 0));
        out.put(static_cast<char>(prunable_options.include_biases ? 1 : 0));
        mask->bits.write(out);
    }
    if (!out) throw io_error("checkpoint: write to " + path + " failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("checkpoint: cannot open " + path);

    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw io_error("checkpoint: " + path + " is not a checkpoint file (bad magic)");
    const std::uint32_t version = detail::read_u32_le(in);
    if (version != kCheckpointVersion)
        throw io_error("checkpoint: " + path + " has format version " + std::to_string(version) +
                       ", this build reads version " + std::to_string(kCheckpointVersion));
    const std::uint32_t flags = detail::read_u32_le(in);

    const std::uint32_t arch_len = detail::read_u32_le(in);
    std::string arch_str(arch_len, '\0');
    in.read(arch_str.data(), arch_len);
    if (!in) throw io_error("checkpoint: truncated architecture descriptor in " + path);

    nlohmann::json arch;
    try {
        arch = nlohmann::json::parse(arch_str);
    } catch (const nlohmann::json::exception& e) {
        throw io_error("checkpoint: bad architecture descriptor in " + path + ": " + e.what());
    }

    Checkpoint ckpt;
    std::vector<LayerSpec> layers;
    for (const auto& j : arch.at("layers")) layers.push_back(detail::layer_from_json(j));
    ckpt.net = make_network<float>(arch.at("input_shape").get<std::vector<int>>(), std::move(layers));

    ckpt.seed = Bitset::read_u64(in);
    const std::uint64_t count = Bitset::read_u64(in);
    if (count != ckpt.net.params.size())
        throw io_error("checkpoint: parameter payload (" + std::to_string(count) +
                       ") does not match architecture (" + std::to_string(ckpt.net.params.size()) +
                       ")");
    for (auto& p : ckpt.net.params) {
        const std::uint32_t bits = detail::read_u32_le(in);
        std::memcpy(&p, &bits, 4);
    }

    if (flags & 1u) {
        const int scope = in.get();
        const int gran = in.get();
        const int inc_out = in.get();
        const int inc_bias = in.get();
        if (!in) throw io_error("checkpoint: truncated mask header in " + path);
        PruneMask mask;
        mask.scope = scope == 0 ? MaskScope::global : MaskScope::layerwise;
        mask.granularity = gran == 0 ? MaskGranularity::connection : MaskGranularity::neuron;
        ckpt.prunable_options.granularity = mask.granularity;
        ckpt.prunable_options.include_output_weights = inc_out != 0;
        ckpt.prunable_options.include_biases = inc_bias != 0;
        mask.bits = Bitset::read(in);
        const PrunableSet set = make_prunable_set(ckpt.net, ckpt.prunable_options);
        if (mask.bits.size() != set.size())
            throw io_error("checkpoint: mask length " + std::to_string(mask.bits.size()) +
                           " does not match the architecture's prunable set (" +
                           std::to_string(set.size()) + ")");
        ckpt.mask = std::move(mask);
    }
    return ckpt;
}

}  // namespace pate
