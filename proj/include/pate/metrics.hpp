#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pate {

/// Floor applied to probabilities before any logarithm, making NLL and KL
/// total functions.
constexpr double kProbFloor = 1e-12;

/// Per-sample probability rows plus true labels.
struct PredictionSet {
    int num_classes = 0;
    std::vector<float> probs;  // N x K, rows sum to 1
    std::vector<int> labels;   // N

    std::size_t size() const { return labels.size(); }
    std::span<const float> row(std::size_t i) const {
        return {probs.data() + i * static_cast<std::size_t>(num_classes),
                static_cast<std::size_t>(num_classes)};
    }
};

/// Argmax with ties broken toward the lowest class index (the ensemble
/// prediction rule; disagreement counts depend on it).
inline int argmax_row(std::span<const float> row) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(row.size()); ++k)
        if (row[k] > row[best]) best = k;
    return best;
}

namespace detail {

inline void check_nonempty(const PredictionSet& p, const char* op) {
    if (p.size() == 0) throw std::invalid_argument(std::string(op) + ": empty prediction set");
    if (p.probs.size() != p.size() * static_cast<std::size_t>(p.num_classes))
        throw std::invalid_argument(std::string(op) + ": malformed prediction set");
}

inline void check_same_shape(const PredictionSet& a, const PredictionSet& b, const char* op) {
    check_nonempty(a, op);
    if (a.size() != b.size() || a.num_classes != b.num_classes)
        throw std::invalid_argument(std::string(op) + ": prediction sets differ in shape");
}

}  // namespace detail

inline double accuracy(const PredictionSet& p) {
    detail::check_nonempty(p, "accuracy");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (argmax_row(p.row(i)) == p.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(p.size());
}

/// Mean negative log probability of the true class.
inline double nll(const PredictionSet& p) {
    detail::check_nonempty(p, "nll");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::max(static_cast<double>(p.row(i)[p.labels[i]]), kProbFloor);
        total -= std::log(q);
    }
    return total / static_cast<double>(p.size());
}

/// Expected calibration error with equal-width confidence bins on [0,1].
/// Confidence is the max of each row; empty bins contribute nothing.
inline double ece(const PredictionSet& p, int bins = 15) {
    detail::check_nonempty(p, "ece");
    if (bins < 1) throw std::invalid_argument("ece: bins must be >= 1");
    std::vector<std::size_t> count(bins, 0), correct(bins, 0);
    std::vector<double> conf_sum(bins, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto row = p.row(i);
        const int pred = argmax_row(row);
        const double conf = row[pred];
        int b = static_cast<int>(conf * bins);
        b = std::clamp(b, 0, bins - 1);  // conf == 1.0 lands in the last bin
        count[b] += 1;
        conf_sum[b] += conf;
        if (pred == p.labels[i]) correct[b] += 1;
    }
    double e = 0.0;
    for (int b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double acc_b = static_cast<double>(correct[b]) / static_cast<double>(count[b]);
        const double conf_b = conf_sum[b] / static_cast<double>(count[b]);
        e += (static_cast<double>(count[b]) / static_cast<double>(p.size())) *
             std::abs(acc_b - conf_b);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Pairwise diversity measures. Each compares two members' outputs on the
// same samples and averages over the set.
// ---------------------------------------------------------------------------

/// Mean over samples of the Pearson correlation between the two K-dim output
/// rows. A zero-variance row makes the quotient undefined; the sample's term
/// is taken as 1 when the rows are identical and 0 otherwise.
inline double d_corr(const PredictionSet& f1, const PredictionSet& f2) {
    detail::check_same_shape(f1, f2, "d_corr");
    if (f1.num_classes < 2) throw std::invalid_argument("d_corr: needs K >= 2");
    const int K = f1.num_classes;
    double total = 0.0;
    for (std::size_t i = 0; i < f1.size(); ++i) {
        const auto a = f1.row(i);
        const auto b = f2.row(i);
        double mean_a = 0.0, mean_b = 0.0;
        for (int k = 0; k < K; ++k) {
            mean_a += a[k];
            mean_b += b[k];
        }
        mean_a /= K;
        mean_b /= K;
        double cov = 0.0, var_a = 0.0, var_b = 0.0;
        for (int k = 0; k < K; ++k) {
            const double da = a[k] - mean_a;
            const double db = b[k] - mean_b;
            cov += da * db;
            var_a += da * da;
            var_b += db * db;
        }
        if (var_a == 0.0 || var_b == 0.0) {
            total += std::equal(a.begin(), a.end(), b.begin()) ? 1.0 : 0.0;
        } else {
            total += cov / (std::sqrt(var_a) * std::sqrt(var_b));
        }
    }
    return total / static_cast<double>(f1.size());
}

/// Fraction of samples whose argmax predictions differ.
inline double d_dis(const PredictionSet& f1, const PredictionSet& f2) {
    detail::check_same_shape(f1, f2, "d_dis");
    std::size_t disagree = 0;
    for (std::size_t i = 0; i < f1.size(); ++i)
        if (argmax_row(f1.row(i)) != argmax_row(f2.row(i))) ++disagree;
    return static_cast<double>(disagree) / static_cast<double>(f1.size());
}

/// Mean over samples of the row-wise KL divergence sum_k f1 ln(f1/f2), with
/// both distributions floored at kProbFloor.
inline double d_kl(const PredictionSet& f1, const PredictionSet& f2) {
    detail::check_same_shape(f1, f2, "d_kl");
    const int K = f1.num_classes;
    double total = 0.0;
    for (std::size_t i = 0; i < f1.size(); ++i) {
        const auto a = f1.row(i);
        const auto b = f2.row(i);
        double kl = 0.0;
        for (int k = 0; k < K; ++k) {
            const double pa = std::max(static_cast<double>(a[k]), kProbFloor);
            const double pb = std::max(static_cast<double>(b[k]), kProbFloor);
            kl += pa * std::log(pa / pb);
        }
        total += kl;
    }
    return total / static_cast<double>(f1.size());
}

enum class DiversityMeasure { corr, dis, kl };

inline const char* diversity_measure_name(DiversityMeasure m) {
    switch (m) {
        case DiversityMeasure::corr: return "corr";
        case DiversityMeasure::dis: return "dis";
        case DiversityMeasure::kl: return "kl";
    }
    return "?";
}

inline DiversityMeasure parse_diversity_measure(const std::string& name) {
    if (name == "corr") return DiversityMeasure::corr;
    if (name == "dis") return DiversityMeasure::dis;
    if (name == "kl") return DiversityMeasure::kl;
    throw std::invalid_argument("unknown diversity measure '" + name +
                                "' (expected corr, dis or kl)");
}

struct PairwiseResult {
    std::vector<double> matrix;  // S x S, row-major
    double mean = 0.0;           // over distinct pairs (all ordered pairs for kl)
};

/// S x S matrix of a pairwise measure plus its mean over distinct pairs.
/// corr and dis are symmetric so the mean runs over unordered pairs; kl may
/// be asymmetric and averages every ordered distinct pair.
inline PairwiseResult pairwise_matrix(std::span<const PredictionSet> members,
                                      DiversityMeasure measure) {
    const std::size_t S = members.size();
    if (S < 2) throw std::invalid_argument("pairwise_matrix: need at least two members");
    PairwiseResult out;
    out.matrix.assign(S * S, 0.0);
    auto eval = [&](std::size_t i, std::size_t j) {
        switch (measure) {
            case DiversityMeasure::corr: return d_corr(members[i], members[j]);
            case DiversityMeasure::dis: return d_dis(members[i], members[j]);
            case DiversityMeasure::kl: return d_kl(members[i], members[j]);
        }
        return 0.0;
    };
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < S; ++i) {
        out.matrix[i * S + i] = measure == DiversityMeasure::corr ? 1.0 : 0.0;
        for (std::size_t j = i + 1; j < S; ++j) {
            const double vij = eval(i, j);
            out.matrix[i * S + j] = vij;
            if (measure == DiversityMeasure::kl) {
                const double vji = eval(j, i);
                out.matrix[j * S + i] = vji;
                total += vij + vji;
                pairs += 2;
            } else {
                out.matrix[j * S + i] = vij;
                total += vij;
                pairs += 1;
            }
        }
    }
    out.mean = total / static_cast<double>(pairs);
    return out;
}

}  // namespace pate
