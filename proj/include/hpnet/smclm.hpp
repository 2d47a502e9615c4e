// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "hpnet/gcn.hpp"
#include "hpnet/skeleton.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

// Bone modality: child minus parent along the skeleton tree. The root row is
// zero (its parent is itself).
template <class S>
TensorT<S> spatial_transform(const TensorT<S>& fp, const SkeletonGraph& g) {
    if (fp.ndim() != 3) throw validation_error("spatial_transform: expects [T,n,c]");
    if (fp.shape[1] != g.n) throw validation_error("spatial_transform: joint count mismatch");
    const std::size_t t_len = fp.shape[0], n = fp.shape[1], c = fp.shape[2];
    TensorT<S> fs(fp.shape);
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t p = static_cast<std::size_t>(g.parent[j]);
            for (std::size_t k = 0; k < c; ++k) fs.at(t, j, k) = fp.at(t, j, k) - fp.at(t, p, k);
        }
    return fs;
}

// accumulate d(spatial_transform)/d(fp) given upstream dL/dfs
template <class S>
void spatial_transform_backward(const TensorT<S>& dfs, const SkeletonGraph& g, TensorT<S>& dfp) {
    const std::size_t t_len = dfs.shape[0], n = dfs.shape[1], c = dfs.shape[2];
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t p = static_cast<std::size_t>(g.parent[j]);
            for (std::size_t k = 0; k < c; ++k) {
                dfp.at(t, j, k) += dfs.at(t, j, k);
                dfp.at(t, p, k) -= dfs.at(t, j, k);
            }
        }
}

// Motion modality: next frame minus current, zero-padded at the final frame
// so the sequence length is preserved.
template <class S>
TensorT<S> motion_transform(const TensorT<S>& fp) {
    if (fp.ndim() != 3) throw validation_error("motion_transform: expects [T,n,c]");
    const std::size_t t_len = fp.shape[0], n = fp.shape[1], c = fp.shape[2];
    TensorT<S> fm(fp.shape);
    for (std::size_t t = 0; t + 1 < t_len; ++t)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < c; ++k)
                fm.at(t, j, k) = fp.at(t + 1, j, k) - fp.at(t, j, k);
    return fm;
}

template <class S>
void motion_transform_backward(const TensorT<S>& dfm, TensorT<S>& dfp) {
    const std::size_t t_len = dfm.shape[0], n = dfm.shape[1], c = dfm.shape[2];
    for (std::size_t t = 0; t + 1 < t_len; ++t)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < c; ++k) {
                dfp.at(t + 1, j, k) += dfm.at(t, j, k);
                dfp.at(t, j, k) -= dfm.at(t, j, k);
            }
}

enum class StreamId { Pooled = 0, Spatial = 1, Motion = 2 };

inline const char* stream_name(StreamId s) {
    switch (s) {
        case StreamId::Pooled: return "p";
        case StreamId::Spatial: return "s";
        case StreamId::Motion: return "m";
    }
    return "?";
}

template <class S>
struct StreamBundleT {
    std::array<TensorT<S>, 3> inputs;    // F_p, F_s, F_m
    std::array<TensorT<S>, 3> features;  // pre-head features, per selected stream
    std::array<TensorT<S>, 3> logits;    // per-stream auxiliary logits
    TensorT<S> concatenated;             // F_c over the selected streams, order (p, s, m)
};

template <class S>
struct CoLearnCacheT {
    std::array<GcnCacheT<S>, 3> gcn;
};

// Run the three stream models over already-transformed inputs and
// concatenate their pre-head features in the fixed order (p, s, m). A
// disabled stream contributes nothing to the concatenation.
template <class S>
StreamBundleT<S> run_streams(const std::array<TensorT<S>, 3>& inputs, const TensorT<S>& a_hat,
                             const std::array<const GcnStackT<S>*, 3>& models,
                             const std::array<bool, 3>& enabled,
                             CoLearnCacheT<S>* cache = nullptr) {
    StreamBundleT<S> bundle;
    bundle.inputs = inputs;
    std::size_t fc_len = 0;
    for (int s = 0; s < 3; ++s)
        if (enabled[s]) fc_len += models[s]->feature_dim();
    if (fc_len == 0) throw validation_error("run_streams: no stream enabled");
    bundle.concatenated = TensorT<S>({fc_len});
    std::size_t off = 0;
    for (int s = 0; s < 3; ++s) {
        if (!enabled[s]) continue;
        GcnCacheT<S> local;
        GcnCacheT<S>* gc = cache ? &cache->gcn[s] : &local;
        bundle.logits[s] = gcn_forward(inputs[s], a_hat, *models[s], gc);
        bundle.features[s] = gc->feature;
        for (std::size_t k = 0; k < gc->feature.numel(); ++k)
            bundle.concatenated[off + k] = gc->feature[k];
        off += gc->feature.numel();
    }
    return bundle;
}

// Spatial-motion co-learning: derive F_s and F_m from F_p, model each stream
// with its own independent stack, and concatenate.
template <class S>
StreamBundleT<S> co_learn(const TensorT<S>& fp, const SkeletonGraph& g, const TensorT<S>& a_hat,
                          const GcnStackT<S>& model_p, const GcnStackT<S>& model_s,
                          const GcnStackT<S>& model_m, const std::array<bool, 3>& enabled,
                          CoLearnCacheT<S>* cache = nullptr) {
    std::array<TensorT<S>, 3> inputs = {fp, spatial_transform(fp, g), motion_transform(fp)};
    return run_streams<S>(inputs, a_hat, {&model_p, &model_s, &model_m}, enabled, cache);
}

} // namespace hpnet
