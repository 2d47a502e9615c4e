// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hpnet/gradcheck.hpp"
#include "hpnet/model.hpp"
#include "hpnet/rng.hpp"
#include "hpnet/skeleton.hpp"

namespace hpnet {

struct VerifyReport {
    double max_rel_err = 0.0;
    std::string worst_path;
    int instances = 0;
};

// Full-loss gradient verification: random small model instances, analytic
// backward vs central finite differences over every trainable parameter
// (stream stacks and heads, TRMM projections and bridge, fusion alignment
// and temperature). Runs in double so the difference quotient itself is
// trustworthy at the checked tolerance.
inline VerifyReport run_model_gradcheck(int instances, std::uint64_t seed, double eps = 1e-5) {
    VerifyReport report;
    report.instances = instances;
    for (int inst = 0; inst < instances; ++inst) {
        Rng rng(derive_seed(seed, "gradcheck:" + std::to_string(inst)));
        const std::size_t n = 3 + rng.below(3);
        SkeletonGraph g = (rng.below(2) == 0) ? SkeletonGraph::chain(n) : [&] {
            std::vector<std::pair<int, int>> edges;
            for (std::size_t j = 1; j < n; ++j) edges.emplace_back(0, static_cast<int>(j));
            return SkeletonGraph::from_edges(n, edges);
        }();
        TensorT<double> a_hat = normalized_adjacency<double>(g);

        ModelConfig cfg;
        cfg.gcn_channels = {3 + rng.below(3), 3 + rng.below(3), 3 + rng.below(3)};
        cfg.num_classes = 2 + rng.below(3);
        cfg.text_dim = 4 + rng.below(4);
        cfg.video_dim = 3 + rng.below(3);
        cfg.tau = 0.1;
        HpNetT<double> model(cfg);
        model.init_random(rng);
        auto refs = model.collect_params();
        for (auto& r : refs)
            for (auto& v : r.tensor->data) v += 0.15 * rng.normal();

        const std::size_t t_len = 2 + rng.below(2);
        TensorT<double> pooled({t_len, n, cfg.gcn_channels[0]});
        for (auto& v : pooled.data) v = rng.normal();
        TensorT<double> video({cfg.video_dim});
        for (auto& v : video.data) v = rng.normal();
        TensorT<double> f_text({cfg.num_classes, cfg.text_dim});
        for (auto& v : f_text.data) v = rng.normal();
        const std::size_t label = rng.below(cfg.num_classes);
        LossWeights lw{0.25 * static_cast<double>(rng.below(8)) + 0.25,
                       0.25 * static_cast<double>(rng.below(8)) + 0.25,
                       0.25 * static_cast<double>(rng.below(8)) + 0.25};

        auto loss = [&] {
            return hpnet_forward<double>(model, a_hat, g, f_text, pooled, video, label, lw,
                                         nullptr)
                .total;
        };
        auto numeric = finite_diff_grad<double>(refs, loss, eps);

        HpNetT<double> grads(cfg);
        auto grad_refs = grads.collect_params();
        zero_all(grad_refs);
        FullCacheT<double> cache;
        hpnet_forward<double>(model, a_hat, g, f_text, pooled, video, label, lw, &cache);
        hpnet_backward<double>(model, a_hat, g, f_text, cache, label, lw, 1.0, grads);
        std::vector<TensorT<double>> analytic;
        for (auto& r : grad_refs) analytic.push_back(*r.tensor);

        GradCheckReport rep = compare_grads(refs, analytic, numeric);
        if (rep.max_rel_err > report.max_rel_err) {
            report.max_rel_err = rep.max_rel_err;
            report.worst_path = rep.worst_path + " (instance " + std::to_string(inst) + ")";
        }
    }
    return report;
}

} // namespace hpnet
