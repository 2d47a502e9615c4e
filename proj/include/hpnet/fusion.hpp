// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>

#include "hpnet/mlp.hpp"
#include "hpnet/ops.hpp"
#include "hpnet/params.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

// Text-video score fusion: the video feature is aligned to the text width,
// both sides are L2-normalized, and each class score is the inner product
// scaled by 1/tau. tau is held as log(tau) so it stays positive under
// training.
template <class S>
struct FusionParamsT {
    LinearT<S> align;   // [C x C_u]
    TensorT<S> tau_log; // scalar, tau = exp(tau_log)

    FusionParamsT() = default;
    FusionParamsT(std::size_t text_dim, std::size_t video_dim, double tau_init)
        : align(text_dim, video_dim), tau_log({1}) {
        if (!(tau_init > 0)) throw validation_error("fusion: tau must be positive");
        tau_log[0] = static_cast<S>(std::log(tau_init));
    }

    S tau() const { return std::exp(tau_log[0]); }
};

template <class S>
void collect(std::vector<ParamRef<S>>& out, const std::string& path, FusionParamsT<S>& f) {
    collect(out, path + ".align", f.align);
    out.push_back({path + ".tau_log", &f.tau_log, false});
}

template <class S>
struct FusionCacheT {
    TensorT<S> f_u;                 // raw video feature
    TensorT<S> v_raw, v;            // aligned video feature, before/after normalize
    S v_norm = S(0);
    TensorT<S> t_norms;             // per-row norms of F'_text
    TensorT<S> t_unit;              // [N x C] normalized rows
    TensorT<S> scores;
};

template <class S>
TensorT<S> normalize_checked(const TensorT<S>& x, S& norm_out, const char* what) {
    norm_out = l2_norm(x);
    if (!(norm_out > S(0))) throw numeric_error(std::string(what) + ": zero-norm vector");
    TensorT<S> y = x;
    for (auto& v : y.data) v /= norm_out;
    return y;
}

// S_i = normalize(align(F_u)) . normalize(F'_text[i,:]) / tau
template <class S>
TensorT<S> fuse_scores(const TensorT<S>& f_text_refined, const TensorT<S>& f_u,
                       const FusionParamsT<S>& params, FusionCacheT<S>* cache = nullptr) {
    if (f_text_refined.ndim() != 2) throw validation_error("fuse_scores: F'_text must be [N,C]");
    const std::size_t n = f_text_refined.shape[0], c = f_text_refined.shape[1];
    if (c != params.align.out_dim())
        throw validation_error("fuse_scores: text width does not match alignment map");
    FusionCacheT<S> local;
    FusionCacheT<S>& cc = cache ? *cache : local;
    cc.f_u = f_u;
    cc.v_raw = params.align.forward(f_u);
    cc.v = normalize_checked(cc.v_raw, cc.v_norm, "fuse_scores.video");
    cc.t_norms = TensorT<S>({n});
    cc.t_unit = TensorT<S>({n, c});
    TensorT<S> scores({n});
    const S inv_tau = S(1) / params.tau();
    for (std::size_t i = 0; i < n; ++i) {
        S norm_sq = S(0);
        for (std::size_t k = 0; k < c; ++k) {
            const S v = f_text_refined.at(i, k);
            norm_sq += v * v;
        }
        const S norm = std::sqrt(norm_sq);
        if (!(norm > S(0))) throw numeric_error("fuse_scores.text: zero-norm vector");
        cc.t_norms[i] = norm;
        S d = S(0);
        for (std::size_t k = 0; k < c; ++k) {
            const S tv = f_text_refined.at(i, k) / norm;
            cc.t_unit.at(i, k) = tv;
            d += cc.v[k] * tv;
        }
        scores[i] = d * inv_tau;
    }
    ensure_finite(scores, "fuse_scores");
    cc.scores = scores;
    return scores;
}

// d(normalize)/dx pullback: dL/dx = (dL/dy - (y . dL/dy) y) / ||x||
template <class S>
TensorT<S> normalize_backward(const TensorT<S>& y, S norm, const TensorT<S>& dy) {
    const S proj = dot(y, dy);
    TensorT<S> dx = dy;
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] = (dy[i] - proj * y[i]) / norm;
    return dx;
}

// Backward from dL/dscores. Accumulates into `grads`; returns dL/dF'_text.
template <class S>
TensorT<S> fuse_scores_backward(const FusionParamsT<S>& params, const FusionCacheT<S>& cache,
                                const TensorT<S>& dscores, FusionParamsT<S>& grads) {
    const std::size_t n = cache.t_unit.shape[0], c = cache.t_unit.shape[1];
    const S inv_tau = S(1) / params.tau();
    TensorT<S> dv({c});
    TensorT<S> dtext({n, c});
    S dtau_log = S(0);
    for (std::size_t i = 0; i < n; ++i) {
        const S g = dscores[i];
        dtau_log -= g * cache.scores[i]; // d(d_i * e^{-rho})/drho = -S_i
        TensorT<S> dt({c});
        for (std::size_t k = 0; k < c; ++k) {
            dv[k] += g * inv_tau * cache.t_unit.at(i, k);
            dt[k] = g * inv_tau * cache.v[k];
        }
        TensorT<S> trow({c});
        for (std::size_t k = 0; k < c; ++k) trow[k] = cache.t_unit.at(i, k);
        TensorT<S> draw = normalize_backward(trow, cache.t_norms[i], dt);
        for (std::size_t k = 0; k < c; ++k) dtext.at(i, k) = draw[k];
    }
    grads.tau_log[0] += dtau_log;
    TensorT<S> dv_raw = normalize_backward(cache.v, cache.v_norm, dv);
    params.align.backward(cache.f_u, dv_raw, grads.align); // dF_u not needed
    return dtext;
}

} // namespace hpnet
