#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "pate/network.hpp"

namespace pate {

/// The three LeNet-5 width configurations. S/M/L double the units per hidden
/// layer: conv widths (16,32) / (32,64) / (64,128), dense widths (256,128) /
/// (512,256) / (1024,512).
enum class LeNetVariant { S, M, L };

struct LeNetWidths {
    int conv1, conv2, fc1, fc2;
};

inline LeNetWidths lenet_widths(LeNetVariant v) {
    switch (v) {
        case LeNetVariant::S: return {16, 32, 256, 128};
        case LeNetVariant::M: return {32, 64, 512, 256};
        case LeNetVariant::L: return {64, 128, 1024, 512};
    }
    throw std::invalid_argument("unknown LeNet variant");
}

inline LeNetVariant parse_lenet_variant(const std::string& name) {
    if (name == "lenet-s" || name == "s" || name == "S") return LeNetVariant::S;
    if (name == "lenet-m" || name == "m" || name == "M") return LeNetVariant::M;
    if (name == "lenet-l" || name == "l" || name == "L") return LeNetVariant::L;
    throw std::invalid_argument("unknown model '" + name +
                                "' (expected lenet-s, lenet-m or lenet-l)");
}

inline const char* lenet_variant_name(LeNetVariant v) {
    switch (v) {
        case LeNetVariant::S: return "lenet-s";
        case LeNetVariant::M: return "lenet-m";
        case LeNetVariant::L: return "lenet-l";
    }
    return "?";
}

/// conv(3->c1,5x5) relu pool conv(c1->c2,5x5) relu pool flatten
/// fc(25*c2->f1) relu fc(f1->f2) relu fc(f2->num_classes).
/// On 32x32x3 input the spatial trace is 28x28 -> 14x14 -> 10x10 -> 5x5.
template <typename T = float>
NetworkT<T> build_lenet(LeNetVariant variant, int num_classes = 10) {
    if (num_classes < 2) throw std::invalid_argument("build_lenet: num_classes must be >= 2");
    const LeNetWidths w = lenet_widths(variant);
    return make_network<T>({3, 32, 32},
                           {LayerSpec::conv2d(3, w.conv1), LayerSpec::relu(), LayerSpec::maxpool2d(),
                            LayerSpec::conv2d(w.conv1, w.conv2), LayerSpec::relu(),
                            LayerSpec::maxpool2d(), LayerSpec::flatten(),
                            LayerSpec::linear(25 * w.conv2, w.fc1), LayerSpec::relu(),
                            LayerSpec::linear(w.fc1, w.fc2), LayerSpec::relu(),
                            LayerSpec::linear(w.fc2, num_classes)});
}

template <typename T>
std::size_t param_count(const NetworkT<T>& net) {
    return net.param_count();
}

}  // namespace pate
