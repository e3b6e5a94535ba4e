#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pate/bitset.hpp"
#include "pate/network.hpp"
#include "pate/rng.hpp"

namespace pate {

enum class MaskScope { global, layerwise };
enum class MaskGranularity { connection, neuron };

inline const char* mask_scope_name(MaskScope s) {
    return s == MaskScope::global ? "global" : "layerwise";
}
inline const char* mask_granularity_name(MaskGranularity g) {
    return g == MaskGranularity::connection ? "connection" : "neuron";
}

/// Which parameters pruning may touch. Defaults follow the hidden-layer rule:
/// every conv/linear weight except the final output layer's, biases excluded.
/// Neuron granularity pulls the hidden biases in, because removing a unit
/// removes its bias along with its incoming weights.
struct PrunableOptions {
    MaskGranularity granularity = MaskGranularity::connection;
    bool include_output_weights = false;
    bool include_biases = false;  // widen connection pruning to hidden biases

    bool operator==(const PrunableOptions&) const = default;
};

/// Ordered set of flat parameter indices eligible for pruning, with enough
/// grouping structure for layer-wise quotas and whole-unit removal. Bit k of
/// a PruneMask refers to indices[k].
struct PrunableSet {
    std::vector<std::size_t> indices;

    /// Contiguous run of bit positions belonging to one weight entry.
    struct LayerSegment {
        int entry;               // index into NetworkT::entries (the weight entry)
        std::size_t begin, end;  // positions in `indices`
    };
    std::vector<LayerSegment> segments;

    /// One prunable unit (conv filter or linear row): the bit positions of
    /// its incoming weights plus, under neuron granularity, its bias.
    struct UnitGroup {
        int segment;  // index into `segments`
        int unit;
        std::vector<std::size_t> positions;
    };
    std::vector<UnitGroup> units;

    PrunableOptions options;

    std::size_t size() const { return indices.size(); }
};

template <typename T>
PrunableSet make_prunable_set(const NetworkT<T>& net, PrunableOptions opts = {}) {
    PrunableSet set;
    set.options = opts;

    int last_linear = -1;
    for (int li = 0; li < static_cast<int>(net.layers.size()); ++li)
        if (net.layers[li].kind == LayerKind::linear) last_linear = li;

    const bool neuron = opts.granularity == MaskGranularity::neuron;
    for (int ei = 0; ei < static_cast<int>(net.entries.size()); ++ei) {
        const ParamEntry& e = net.entries[ei];
        if (e.role != ParamRole::weight) continue;
        if (e.layer == last_linear && !opts.include_output_weights) continue;

        const LayerSpec& spec = net.layers[e.layer];
        const int out_units = spec.kind == LayerKind::conv2d ? spec.out_channels : spec.out_features;
        const std::size_t fan_in = e.size / static_cast<std::size_t>(out_units);

        const std::size_t seg_begin = set.indices.size();
        for (std::size_t i = 0; i < e.size; ++i) set.indices.push_back(e.offset + i);
        set.segments.push_back({ei, seg_begin, set.indices.size()});
        const int seg_id = static_cast<int>(set.segments.size()) - 1;

        // Locate this layer's bias entry; pulled into the set when unit
        // removal or the widened-connection flag asks for it.
        const ParamEntry* bias = nullptr;
        for (const auto& be : net.entries)
            if (be.layer == e.layer && be.role == ParamRole::bias) bias = &be;
        const bool take_bias = bias != nullptr && (neuron || opts.include_biases);
        std::size_t bias_begin = 0;
        if (take_bias) {
            bias_begin = set.indices.size();
            for (std::size_t i = 0; i < bias->size; ++i) set.indices.push_back(bias->offset + i);
        }

        if (neuron) {
            for (int u = 0; u < out_units; ++u) {
                PrunableSet::UnitGroup g{seg_id, u, {}};
                g.positions.reserve(fan_in + 1);
                for (std::size_t i = 0; i < fan_in; ++i)
                    g.positions.push_back(seg_begin + static_cast<std::size_t>(u) * fan_in + i);
                if (take_bias) g.positions.push_back(bias_begin + static_cast<std::size_t>(u));
                set.units.push_back(std::move(g));
            }
        }
    }
    return set;
}

/// Binary pruning mask over a PrunableSet: bit 1 = parameter retained,
/// bit 0 = pruned (forced to zero and frozen during tuning).
struct PruneMask {
    Bitset bits;
    MaskScope scope = MaskScope::global;
    MaskGranularity granularity = MaskGranularity::connection;

    std::size_t size() const { return bits.size(); }
    std::size_t zeros() const { return bits.size() - bits.count(); }

    /// Exact fraction of pruned bits.
    double sparsity() const {
        return bits.size() == 0 ? 0.0 : static_cast<double>(zeros()) / static_cast<double>(bits.size());
    }
};

namespace detail {

inline void prune_positions(Bitset& bits, std::vector<std::size_t>& positions, std::size_t quota,
                            Rng& rng) {
    rng.shuffle(positions);
    for (std::size_t i = 0; i < quota; ++i) bits.reset(positions[i]);
}

}  // namespace detail

/// Uniform random mask without replacement, deterministic per seed.
/// Connection granularity zeroes floor(sparsity * P) bits globally, or
/// floor(sparsity * layer size) per layer under layerwise scope. Neuron
/// granularity removes floor(sparsity * units) whole units per hidden layer
/// (unit quotas are inherently per layer, whatever the scope).
inline PruneMask random_mask(std::uint64_t seed, const PrunableSet& prunable, double sparsity,
                             MaskScope scope = MaskScope::global,
                             MaskGranularity granularity = MaskGranularity::connection) {
    if (!(sparsity >= 0.0 && sparsity < 1.0))
        throw std::invalid_argument("random_mask: sparsity must be in [0,1)");
    if (granularity != prunable.options.granularity)
        throw std::invalid_argument("random_mask: prunable set was built for " +
                                    std::string(mask_granularity_name(prunable.options.granularity)) +
                                    " granularity");

    PruneMask mask{Bitset(prunable.size(), true), scope, granularity};
    Rng rng(seed);

    if (granularity == MaskGranularity::neuron) {
        // Group units per segment layer and apply the per-layer unit quota.
        for (std::size_t si = 0; si < prunable.segments.size(); ++si) {
            std::vector<std::size_t> unit_ids;
            for (std::size_t ui = 0; ui < prunable.units.size(); ++ui)
                if (prunable.units[ui].segment == static_cast<int>(si)) unit_ids.push_back(ui);
            const std::size_t quota =
                static_cast<std::size_t>(sparsity * static_cast<double>(unit_ids.size()));
            if (quota >= unit_ids.size() && !unit_ids.empty())
                throw std::invalid_argument("random_mask: sparsity would remove every unit of a layer");
            rng.shuffle(unit_ids);
            for (std::size_t i = 0; i < quota; ++i)
                for (std::size_t pos : prunable.units[unit_ids[i]].positions) mask.bits.reset(pos);
        }
        return mask;
    }

    if (scope == MaskScope::global) {
        std::vector<std::size_t> positions = index_range(prunable.size());
        const std::size_t quota =
            static_cast<std::size_t>(sparsity * static_cast<double>(prunable.size()));
        detail::prune_positions(mask.bits, positions, quota, rng);
    } else {
        for (const auto& seg : prunable.segments) {
            std::vector<std::size_t> positions;
            positions.reserve(seg.end - seg.begin);
            for (std::size_t p = seg.begin; p < seg.end; ++p) positions.push_back(p);
            const std::size_t quota =
                static_cast<std::size_t>(sparsity * static_cast<double>(positions.size()));
            detail::prune_positions(mask.bits, positions, quota, rng);
        }
    }
    return mask;
}

/// The maximally distant counterpart: every bit flipped.
inline PruneMask complement(const PruneMask& mask) {
    return {mask.bits.flipped(), mask.scope, mask.granularity};
}

/// Splits the prunable set into n pairwise-disjoint covering masks whose
/// kept counts differ by at most one; each child keeps ~1/n of the set.
inline std::vector<PruneMask> partition(std::uint64_t seed, const PrunableSet& prunable, int n) {
    if (n < 2) throw std::invalid_argument("partition: n must be >= 2");
    if (static_cast<std::size_t>(n) > prunable.size())
        throw std::invalid_argument("partition: n exceeds prunable parameter count (" +
                                    std::to_string(prunable.size()) + ")");
    Rng rng(seed);
    std::vector<std::size_t> positions = index_range(prunable.size());
    rng.shuffle(positions);

    std::vector<PruneMask> masks;
    masks.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto [begin, end] = chunk_bounds(prunable.size(), n, i);
        PruneMask m{Bitset(prunable.size(), false), MaskScope::global, MaskGranularity::connection};
        for (std::size_t p = begin; p < end; ++p) m.bits.set(positions[p]);
        masks.push_back(std::move(m));
    }
    return masks;
}

/// sqrt(Hamming distance) between two equal-length binary vectors.
inline double cartesian_distance(const PruneMask& a, const PruneMask& b) {
    return std::sqrt(static_cast<double>(a.bits.hamming_distance(b.bits)));
}

/// Sum of CD over all ordered pairs (diagonal contributes zero).
inline double total_distance(std::span<const PruneMask> masks) {
    if (masks.empty()) throw std::invalid_argument("total_distance: need at least one mask");
    double total = 0.0;
    for (std::size_t i = 0; i < masks.size(); ++i)
        for (std::size_t j = 0; j < masks.size(); ++j)
            if (i != j) total += cartesian_distance(masks[i], masks[j]);
    return total;
}

inline void check_mask_matches(const PrunableSet& prunable, const PruneMask& mask) {
    if (mask.size() != prunable.size())
        throw std::invalid_argument("mask length " + std::to_string(mask.size()) +
                                    " does not match prunable set size " +
                                    std::to_string(prunable.size()));
}

/// Writes zeros into the masked positions of a flat parameter-sized vector.
template <typename T>
void zero_masked(std::vector<T>& flat, const PrunableSet& prunable, const PruneMask& mask) {
    check_mask_matches(prunable, mask);
    for (std::size_t k = 0; k < prunable.size(); ++k)
        if (!mask.bits.test(k)) flat[prunable.indices[k]] = T(0);
}

/// Child = parent with pruned parameters set to exactly zero; everything
/// else is copied verbatim. The caller keeps the mask with the child so
/// optimizer steps hold masked entries at zero.
template <typename T>
NetworkT<T> apply_mask(const NetworkT<T>& net, const PrunableSet& prunable, const PruneMask& mask) {
    NetworkT<T> child = net;
    zero_masked(child.params, prunable, mask);
    return child;
}

}  // namespace pate
