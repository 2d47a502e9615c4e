// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <vector>

#include "hpnet/tensor.hpp"

namespace hpnet {

// Per-dimension Fisher discriminant ratio: between-class scatter over
// within-class scatter. Dimensions with zero within-class scatter but
// positive between-class scatter are reported with a sentinel maximum and
// excluded from the mean; fully degenerate dimensions (0/0) score 0 and are
// flagged.
struct FisherResult {
    Tensor scores;                  // [d]
    double mean_finite = 0.0;       // mean over non-sentinel dimensions
    std::vector<bool> infinite;     // per dim: sentinel (zero within, nonzero between)
    std::vector<bool> degenerate;   // per dim: 0/0 handled as 0

    static constexpr float kSentinel = std::numeric_limits<float>::max();
};

inline FisherResult fisher_score(const Tensor& features, const std::vector<int>& labels) {
    if (features.ndim() != 2) throw validation_error("fisher_score: features must be [M,d]");
    const std::size_t m = features.shape[0], d = features.shape[1];
    if (labels.size() != m) throw validation_error("fisher_score: label count mismatch");

    std::map<int, std::size_t> class_count;
    for (int l : labels) ++class_count[l];
    if (class_count.size() < 2) throw validation_error("fisher_score: needs >= 2 classes");
    for (const auto& [label, count] : class_count)
        if (count < 2)
            throw validation_error("fisher_score: class " + std::to_string(label) +
                                   " has fewer than 2 samples");

    FisherResult out;
    out.scores = Tensor({d});
    out.infinite.assign(d, false);
    out.degenerate.assign(d, false);

    // statistics in double; inputs are f32 but scatter ratios need headroom
    std::vector<double> grand_mean(d, 0.0);
    std::map<int, std::vector<double>> class_mean;
    for (const auto& [label, count] : class_count) class_mean[label].assign(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        auto& cm = class_mean[labels[i]];
        for (std::size_t k = 0; k < d; ++k) {
            const double v = features.at(i, k);
            grand_mean[k] += v;
            cm[k] += v;
        }
    }
    for (std::size_t k = 0; k < d; ++k) grand_mean[k] /= static_cast<double>(m);
    for (auto& [label, cm] : class_mean) {
        const double inv = 1.0 / static_cast<double>(class_count[label]);
        for (auto& v : cm) v *= inv;
    }

    std::vector<double> between(d, 0.0), within(d, 0.0);
    for (const auto& [label, cm] : class_mean) {
        const double nc = static_cast<double>(class_count[label]);
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = cm[k] - grand_mean[k];
            between[k] += nc * diff * diff;
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        const auto& cm = class_mean[labels[i]];
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = static_cast<double>(features.at(i, k)) - cm[k];
            within[k] += diff * diff;
        }
    }

    double sum_finite = 0.0;
    std::size_t n_finite = 0;
    for (std::size_t k = 0; k < d; ++k) {
        if (within[k] > 0.0) {
            out.scores[k] = static_cast<float>(between[k] / within[k]);
            sum_finite += between[k] / within[k];
            ++n_finite;
        } else if (between[k] > 0.0) {
            out.scores[k] = FisherResult::kSentinel;
            out.infinite[k] = true;
        } else {
            out.scores[k] = 0.0f;
            out.degenerate[k] = true;
            ++n_finite; // a 0/0 dimension contributes 0 to the mean
        }
    }
    out.mean_finite = n_finite ? sum_finite / static_cast<double>(n_finite) : 0.0;
    return out;
}

} // namespace hpnet
