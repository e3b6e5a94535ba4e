#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pate/data.hpp"
#include "pate/errors.hpp"
#include "pate/masks.hpp"
#include "pate/metrics.hpp"
#include "pate/models.hpp"
#include "pate/optim.hpp"

namespace pate {

enum class RunMode { pat, independent, bagged };
enum class PruneMode { random, anti_random_pairs, anti_random_partition };
enum class OptimizerKind { adam, sgd };

inline const char* run_mode_name(RunMode m) {
    switch (m) {
        case RunMode::pat: return "pat";
        case RunMode::independent: return "independent";
        case RunMode::bagged: return "bagged";
    }
    return "?";
}

inline const char* prune_mode_name(PruneMode m) {
    switch (m) {
        case PruneMode::random: return "random";
        case PruneMode::anti_random_pairs: return "anti-random-pairs";
        case PruneMode::anti_random_partition: return "anti-random-partition";
    }
    return "?";
}

/// Declarative experiment description. Every tunable of the pipeline has a
/// key here; defaults mirror the small-budget protocol (parent 8 epochs,
/// 8 children x 1 epoch, ADAM at 1e-3, random 50% connection pruning).
struct RunConfig {
    // model / data
    std::string model = "lenet-s";
    int num_classes = 10;
    std::string dataset = "synthetic";  // synthetic | mnist | cifar10 | cifar100
    std::string data_dir = "data";
    int train_limit = 0;  // 0 = use everything; else a seeded subset
    int test_limit = 0;
    int synth_train = 4000;
    int synth_test = 2000;
    double synth_noise = 0.55;
    int synth_shift = 4;
    double synth_label_noise = 0.04;

    // run
    RunMode mode = RunMode::pat;
    std::uint64_t seed = 1;
    int workers = 1;
    int batch_size = 128;
    bool eval_each_epoch = false;

    // budget (total epochs = parent_epochs + num_children * child_epochs)
    int parent_epochs = 8;
    int child_epochs = 1;
    int num_children = 8;

    // pruning
    PruneMode prune_mode = PruneMode::random;
    double sparsity = 0.5;
    MaskGranularity granularity = MaskGranularity::connection;
    MaskScope scope = MaskScope::global;
    bool include_output_weights = false;
    bool include_biases = false;

    // optimizer
    OptimizerKind optimizer = OptimizerKind::adam;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::string parent_schedule = "constant";  // constant | step-linear
    double parent_lr = 0.001;
    double parent_lr_start = 0.1;
    double parent_lr_end = 0.001;

    // tuning
    std::string tuning = "constant";  // constant | one-cycle
    double tune_lr = 0.001;
    double lr_min = 0.001;
    double lr_max = 0.1;
    double lr_final = 1e-7;
    double warmup_frac = 0.1;

    // bagging
    double bagging = 0.0;  // 0 = off, else per-child training fraction
    bool bagging_replace = false;

    // augmentation: comma list of crop, flip, normalize
    std::string augment;

    // output
    std::string report = "";
    std::string checkpoint_dir = "";

    int total_epochs() const { return parent_epochs + num_children * child_epochs; }
    LeNetVariant variant() const { return parse_lenet_variant(model); }

    PrunableOptions prunable_options() const {
        return {granularity, include_output_weights, include_biases};
    }

    Schedule parent_schedule_obj() const {
        if (parent_schedule == "constant") return Schedule::constant(parent_lr);
        if (parent_schedule == "step-linear")
            return Schedule::step_linear(parent_lr_start, parent_lr_end);
        throw config_error("parent_schedule must be constant or step-linear, got '" +
                           parent_schedule + "'");
    }

    Schedule tuning_schedule_obj() const {
        if (tuning == "constant") return Schedule::constant(tune_lr);
        if (tuning == "one-cycle") return Schedule::one_cycle(lr_min, lr_max, lr_final, warmup_frac);
        throw config_error("tuning must be constant or one-cycle, got '" + tuning + "'");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    std::istringstream is(v);
    T out;
    is >> out;
    if (is.fail() || !is.eof())
        throw config_error("config: key '" + key + "' expects a number, got '" + v + "'");
    return out;
}

}  // namespace detail

/// Applies one key=value assignment. Unknown keys are rejected.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_number;
    if (key == "model") cfg.model = value;
    else if (key == "num_classes") cfg.num_classes = parse_number<int>(key, value);
    else if (key == "dataset") cfg.dataset = value;
    else if (key == "data_dir") cfg.data_dir = value;
    else if (key == "train_limit") cfg.train_limit = parse_number<int>(key, value);
    else if (key == "test_limit") cfg.test_limit = parse_number<int>(key, value);
    else if (key == "synth_train") cfg.synth_train = parse_number<int>(key, value);
    else if (key == "synth_test") cfg.synth_test = parse_number<int>(key, value);
    else if (key == "synth_noise") cfg.synth_noise = parse_number<double>(key, value);
    else if (key == "synth_shift") cfg.synth_shift = parse_number<int>(key, value);
    else if (key == "synth_label_noise") cfg.synth_label_noise = parse_number<double>(key, value);
    else if (key == "mode") {
        if (value == "pat") cfg.mode = RunMode::pat;
        else if (value == "independent") cfg.mode = RunMode::independent;
        else if (value == "bagged") cfg.mode = RunMode::bagged;
        else throw config_error("config: mode must be pat, independent or bagged, got '" + value + "'");
    } else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "workers") cfg.workers = parse_number<int>(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_number<int>(key, value);
    else if (key == "eval_each_epoch") cfg.eval_each_epoch = parse_bool(key, value);
    else if (key == "parent_epochs") cfg.parent_epochs = parse_number<int>(key, value);
    else if (key == "child_epochs") cfg.child_epochs = parse_number<int>(key, value);
    else if (key == "num_children") cfg.num_children = parse_number<int>(key, value);
    else if (key == "prune_mode") {
        if (value == "random") cfg.prune_mode = PruneMode::random;
        else if (value == "anti-random-pairs") cfg.prune_mode = PruneMode::anti_random_pairs;
        else if (value == "anti-random-partition") cfg.prune_mode = PruneMode::anti_random_partition;
        else throw config_error("config: prune_mode must be random, anti-random-pairs or "
                                "anti-random-partition, got '" + value + "'");
    } else if (key == "sparsity") cfg.sparsity = parse_number<double>(key, value);
    else if (key == "granularity") {
        if (value == "connection") cfg.granularity = MaskGranularity::connection;
        else if (value == "neuron") cfg.granularity = MaskGranularity::neuron;
        else throw config_error("config: granularity must be connection or neuron, got '" + value + "'");
    } else if (key == "scope") {
        if (value == "global") cfg.scope = MaskScope::global;
        else if (value == "layerwise") cfg.scope = MaskScope::layerwise;
        else throw config_error("config: scope must be global or layerwise, got '" + value + "'");
    } else if (key == "include_output_weights") cfg.include_output_weights = parse_bool(key, value);
    else if (key == "include_biases") cfg.include_biases = parse_bool(key, value);
    else if (key == "optimizer") {
        if (value == "adam") cfg.optimizer = OptimizerKind::adam;
        else if (value == "sgd") cfg.optimizer = OptimizerKind::sgd;
        else throw config_error("config: optimizer must be adam or sgd, got '" + value + "'");
    } else if (key == "momentum") cfg.momentum = parse_number<double>(key, value);
    else if (key == "weight_decay") cfg.weight_decay = parse_number<double>(key, value);
    else if (key == "parent_schedule") cfg.parent_schedule = value;
    else if (key == "parent_lr") cfg.parent_lr = parse_number<double>(key, value);
    else if (key == "parent_lr_start") cfg.parent_lr_start = parse_number<double>(key, value);
    else if (key == "parent_lr_end") cfg.parent_lr_end = parse_number<double>(key, value);
    else if (key == "tuning") cfg.tuning = value;
    else if (key == "tune_lr") cfg.tune_lr = parse_number<double>(key, value);
    else if (key == "lr_min") cfg.lr_min = parse_number<double>(key, value);
    else if (key == "lr_max") cfg.lr_max = parse_number<double>(key, value);
    else if (key == "lr_final") cfg.lr_final = parse_number<double>(key, value);
    else if (key == "warmup_frac") cfg.warmup_frac = parse_number<double>(key, value);
    else if (key == "bagging") cfg.bagging = parse_number<double>(key, value);
    else if (key == "bagging_replace") cfg.bagging_replace = parse_bool(key, value);
    else if (key == "augment") cfg.augment = value;
    else if (key == "report") cfg.report = value;
    else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
    else throw config_error("config: unknown key '" + key + "'");
}

/// Cross-field validation; throws config_error with the offending key.
inline void validate_config(const RunConfig& cfg) {
    (void)cfg.variant();
    if (cfg.num_classes < 2) throw config_error("config: num_classes must be >= 2");
    if (cfg.dataset != "synthetic" && cfg.dataset != "mnist" && cfg.dataset != "cifar10" &&
        cfg.dataset != "cifar100")
        throw config_error("config: dataset must be synthetic, mnist, cifar10 or cifar100");
    if (cfg.batch_size < 1) throw config_error("config: batch_size must be >= 1");
    if (cfg.workers < 1) throw config_error("config: workers must be >= 1");
    if (cfg.parent_epochs < 1) throw config_error("config: parent_epochs must be >= 1");
    if (cfg.child_epochs < 0) throw config_error("config: child_epochs must be >= 0");
    if (cfg.num_children < 1) throw config_error("config: num_children must be >= 1");
    if (!(cfg.sparsity >= 0.0 && cfg.sparsity < 1.0))
        throw config_error("config: sparsity must be in [0,1)");
    if (cfg.prune_mode == PruneMode::anti_random_pairs) {
        if (cfg.num_children % 2 != 0)
            throw config_error("config: anti-random-pairs needs an even num_children");
        if (cfg.sparsity != 0.5)
            throw config_error("config: anti-random-pairs requires sparsity = 0.5");
    }
    if (cfg.bagging < 0.0 || cfg.bagging > 1.0)
        throw config_error("config: bagging must be in [0,1]");
    if (!(cfg.warmup_frac > 0.0 && cfg.warmup_frac < 1.0))
        throw config_error("config: warmup_frac must be in (0,1)");
    (void)cfg.parent_schedule_obj();
    (void)cfg.tuning_schedule_obj();
    std::istringstream toks(cfg.augment);
    std::string tok;
    while (std::getline(toks, tok, ',')) {
        tok = detail::trim(tok);
        if (!tok.empty() && tok != "crop" && tok != "flip" && tok != "normalize")
            throw config_error("config: unknown augment toggle '" + tok + "'");
    }
}

/// Parses a flat key=value file ('#' starts a comment). Keys are validated
/// eagerly; the full config is cross-validated at the end.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("config: cannot open " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config: " + path + ":" + std::to_string(lineno) +
                               ": expected key=value, got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        apply_config_entry(cfg, key, value);
    }
    validate_config(cfg);
    return cfg;
}

/// Applies extra "key=value" strings (e.g. CLI overrides) on top of a config.
inline void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw config_error("override '" + kv + "' is not of the form key=value");
        apply_config_entry(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
}

inline AugmentPolicy augment_policy_from_config(const RunConfig& cfg, const Dataset& train) {
    AugmentPolicy policy;
    std::istringstream toks(cfg.augment);
    std::string tok;
    bool wants_normalize = false;
    while (std::getline(toks, tok, ',')) {
        tok = detail::trim(tok);
        if (tok == "crop") policy.crop = true;
        else if (tok == "flip") policy.hflip = true;
        else if (tok == "normalize") wants_normalize = true;
    }
    if (wants_normalize) {
        policy.normalize = true;
        policy.stats = compute_channel_stats(train);
    }
    return policy;
}

/// Loads (or synthesizes) the configured dataset pair.
inline std::pair<Dataset, Dataset> load_dataset(const RunConfig& cfg) {
    std::pair<Dataset, Dataset> pair;
    if (cfg.dataset == "synthetic") {
        SynthConfig sc;
        sc.num_classes = cfg.num_classes;
        sc.train_n = cfg.synth_train;
        sc.test_n = cfg.synth_test;
        sc.seed = mix_seed(cfg.seed, 0x5EED);
        sc.noise = cfg.synth_noise;
        sc.max_shift = cfg.synth_shift;
        sc.label_noise = cfg.synth_label_noise;
        pair = make_synthetic(sc);
    } else if (cfg.dataset == "mnist") {
        pair = load_mnist(cfg.data_dir);
    } else if (cfg.dataset == "cifar10") {
        pair = load_cifar10(cfg.data_dir);
    } else if (cfg.dataset == "cifar100") {
        pair = load_cifar100(cfg.data_dir);
    } else {
        throw config_error("config: unknown dataset '" + cfg.dataset + "'");
    }
    if (cfg.train_limit > 0 && static_cast<std::size_t>(cfg.train_limit) < pair.first.size())
        pair.first = random_subset(pair.first, static_cast<std::size_t>(cfg.train_limit),
                                   mix_seed(cfg.seed, 0x11F));
    if (cfg.test_limit > 0 && static_cast<std::size_t>(cfg.test_limit) < pair.second.size())
        pair.second = random_subset(pair.second, static_cast<std::size_t>(cfg.test_limit),
                                    mix_seed(cfg.seed, 0x22F));
    return pair;
}

}  // namespace pate
