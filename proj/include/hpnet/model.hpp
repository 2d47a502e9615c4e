// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "hpnet/fusion.hpp"
#include "hpnet/gcn.hpp"
#include "hpnet/losses.hpp"
#include "hpnet/params.hpp"
#include "hpnet/smclm.hpp"
#include "hpnet/trmm.hpp"

namespace hpnet {

struct LossWeights {
    double lambda_p = 1.0;
    double lambda_s = 1.0;
    double lambda_m = 1.0;

    void validate() const {
        if (lambda_p < 0 || lambda_s < 0 || lambda_m < 0)
            throw validation_error("loss weights must be non-negative");
    }
};

struct ModelConfig {
    std::vector<std::size_t> gcn_channels = {96, 96, 128, 128}; // input + per-layer widths
    std::size_t num_classes = 5;
    std::size_t text_dim = 64;  // C
    std::size_t video_dim = 64; // C_u
    std::array<bool, 3> streams = {true, true, true}; // (p, s, m)
    double tau = 0.1;

    void validate() const {
        if (gcn_channels.empty()) throw validation_error("model.gcn_channels must be non-empty");
        if (num_classes < 2) throw validation_error("model.num_classes must be >= 2");
        if (text_dim == 0 || video_dim == 0)
            throw validation_error("model dims must be positive");
        if (!streams[0] && !streams[1] && !streams[2])
            throw validation_error("model.streams must enable at least one stream");
        if (!(tau > 0)) throw validation_error("fusion.tau must be positive");
    }

    std::size_t fc_len() const {
        std::size_t len = 0;
        for (bool on : streams)
            if (on) len += gcn_channels.back();
        return len;
    }
};

// The full network: three stream stacks, the text refinement module and the
// score fusion head. Label embeddings are inputs, not parameters (the text
// encoder stays fixed).
template <class S>
struct HpNetT {
    ModelConfig cfg;
    std::array<GcnStackT<S>, 3> stream; // p, s, m
    TrmmParamsT<S> trmm;
    FusionParamsT<S> fusion;

    HpNetT() = default;
    explicit HpNetT(const ModelConfig& config) : cfg(config) {
        cfg.validate();
        for (int s = 0; s < 3; ++s)
            if (cfg.streams[s]) stream[s] = GcnStackT<S>(cfg.gcn_channels, cfg.num_classes);
        trmm = TrmmParamsT<S>(cfg.text_dim, cfg.fc_len());
        fusion = FusionParamsT<S>(cfg.text_dim, cfg.video_dim, cfg.tau);
    }

    void init_random(Rng& rng) {
        // He-style scale for the propagation stacks, small-random for the
        // refinement/fusion parts so the module starts near the residual
        // identity
        for (int s = 0; s < 3; ++s) {
            if (!cfg.streams[s]) continue;
            for (auto& w : stream[s].layer_w) {
                const double std_dev = std::sqrt(2.0 / static_cast<double>(w.shape[0]));
                for (auto& v : w.data) v = static_cast<S>(rng.normal() * std_dev);
            }
            stream[s].head.init_random(rng, 0.02);
        }
        trmm.init_random(rng, 0.02);
        fusion.align.init_random(rng, 0.02);
    }

    std::vector<ParamRef<S>> collect_params() {
        std::vector<ParamRef<S>> refs;
        const char* names[3] = {"stream_p", "stream_s", "stream_m"};
        for (int s = 0; s < 3; ++s) {
            if (!cfg.streams[s]) continue;
            for (std::size_t l = 0; l < stream[s].layer_w.size(); ++l)
                refs.push_back({std::string(names[s]) + ".layer" + std::to_string(l) + ".w",
                                &stream[s].layer_w[l], true});
            collect(refs, std::string(names[s]) + ".head", stream[s].head);
        }
        collect(refs, "trmm", trmm);
        collect(refs, "fusion", fusion);
        return refs;
    }
};

using HpNet = HpNetT<float>;

// Composite objective: classification loss on the fused scores plus the
// lambda-weighted cross-entropies of the three stream heads.
template <class S>
S total_loss(const TensorT<S>& fused_scores, const TensorT<S>& logits_p,
             const TensorT<S>& logits_s, const TensorT<S>& logits_m, const TensorT<S>& onehot,
             const LossWeights& lw) {
    lw.validate();
    S total = cross_entropy(fused_scores, onehot);
    total += static_cast<S>(lw.lambda_p) * cross_entropy(logits_p, onehot);
    total += static_cast<S>(lw.lambda_s) * cross_entropy(logits_s, onehot);
    total += static_cast<S>(lw.lambda_m) * cross_entropy(logits_m, onehot);
    ensure_finite(total, "total_loss");
    return total;
}

template <class S>
struct FullCacheT {
    CoLearnCacheT<S> streams;
    StreamBundleT<S> bundle;
    TrmmCacheT<S> trmm;
    FusionCacheT<S> fusion;
    TensorT<S> f_text_refined;
    TensorT<S> fused_scores;
};

template <class S>
struct LossParts {
    S total = S(0);
    S cls = S(0);
    S p = S(0), s = S(0), m = S(0);
};

// Full forward pass for one sample: streams -> F_c -> TRMM -> fusion ->
// composite loss (classification plus weighted per-stream auxiliaries).
template <class S>
LossParts<S> hpnet_forward(HpNetT<S>& model, const TensorT<S>& a_hat, const SkeletonGraph& g,
                           const TensorT<S>& f_text, const TensorT<S>& pooled,
                           const TensorT<S>& video, std::size_t label, const LossWeights& lw,
                           FullCacheT<S>* cache) {
    lw.validate();
    FullCacheT<S> local;
    FullCacheT<S>& cc = cache ? *cache : local;
    cc.bundle = co_learn<S>(pooled, g, a_hat, model.stream[0], model.stream[1], model.stream[2],
                            model.cfg.streams, &cc.streams);
    cc.f_text_refined = trmm_forward(cc.bundle.concatenated, f_text, model.trmm, &cc.trmm);
    cc.fused_scores = fuse_scores(cc.f_text_refined, video, model.fusion, &cc.fusion);

    const TensorT<S> onehot = make_onehot<S>(model.cfg.num_classes, label);
    LossParts<S> parts;
    parts.cls = cross_entropy(cc.fused_scores, onehot);
    parts.total = parts.cls;
    const double lambdas[3] = {lw.lambda_p, lw.lambda_s, lw.lambda_m};
    S* aux[3] = {&parts.p, &parts.s, &parts.m};
    for (int s = 0; s < 3; ++s) {
        if (!model.cfg.streams[s]) continue;
        *aux[s] = cross_entropy(cc.bundle.logits[s], onehot);
        parts.total += static_cast<S>(lambdas[s]) * (*aux[s]);
    }
    ensure_finite(parts.total, "hpnet_forward.loss");
    return parts;
}

// Backward for one sample; `loss_scale` multiplies the whole loss (1/B for
// batch means). Accumulates into `grads`, a zero-initialized model mirror.
template <class S>
void hpnet_backward(HpNetT<S>& model, const TensorT<S>& a_hat, const SkeletonGraph& g,
                    const TensorT<S>& f_text, FullCacheT<S>& cache, std::size_t label,
                    const LossWeights& lw, S loss_scale, HpNetT<S>& grads) {
    const TensorT<S> onehot = make_onehot<S>(model.cfg.num_classes, label);

    TensorT<S> dscores = cross_entropy_grad(cache.fused_scores, onehot);
    for (auto& v : dscores.data) v *= loss_scale;
    TensorT<S> dtext = fuse_scores_backward(model.fusion, cache.fusion, dscores, grads.fusion);
    TensorT<S> dfc = trmm_backward(model.trmm, cache.trmm, f_text, dtext, grads.trmm);

    const double lambdas[3] = {lw.lambda_p, lw.lambda_s, lw.lambda_m};
    std::size_t off = 0;
    std::array<TensorT<S>, 3> dinput;
    for (int s = 0; s < 3; ++s) {
        if (!model.cfg.streams[s]) continue;
        const std::size_t feat_dim = model.stream[s].feature_dim();
        TensorT<S> dfeat({feat_dim});
        for (std::size_t k = 0; k < feat_dim; ++k) dfeat[k] = dfc[off + k];
        off += feat_dim;
        TensorT<S> dlogits = cross_entropy_grad(cache.bundle.logits[s], onehot);
        for (auto& v : dlogits.data) v *= loss_scale * static_cast<S>(lambdas[s]);
        dinput[s] = gcn_backward(model.stream[s], a_hat, cache.streams.gcn[s], dlogits, &dfeat,
                                 grads.stream[s]);
    }
    // input gradients are not consumed further (pooled features are data, not
    // parameters), but the stream transforms are linear so wiring them back
    // would be spatial/motion_transform_backward on dinput[1], dinput[2]
    (void)dinput;
    (void)g;
}

} // namespace hpnet
