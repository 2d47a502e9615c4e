// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hpnet/mlp.hpp"
#include "hpnet/ops.hpp"
#include "hpnet/params.hpp"
#include "hpnet/skeleton.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

// D^{-1/2} A D^{-1/2} for a symmetric adjacency with self-loops. D is the
// diagonal degree matrix of A.
template <class S>
TensorT<S> normalize_adjacency(const TensorT<S>& a) {
    if (a.ndim() != 2 || a.shape[0] != a.shape[1])
        throw validation_error("normalize_adjacency: expects square matrix");
    const std::size_t n = a.shape[0];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (a.at(i, j) != a.at(j, i))
                throw validation_error("normalize_adjacency: adjacency must be symmetric");
    std::vector<S> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        S deg = S(0);
        for (std::size_t j = 0; j < n; ++j) deg += a.at(i, j);
        if (deg <= S(0)) throw validation_error("normalize_adjacency: zero-degree node");
        inv_sqrt_deg[i] = S(1) / std::sqrt(deg);
    }
    // fill the upper triangle and mirror so the result is symmetric bitwise
    TensorT<S> out({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const S v = inv_sqrt_deg[i] * a.at(i, j) * inv_sqrt_deg[j];
            out.at(i, j) = v;
            out.at(j, i) = v;
        }
    return out;
}

template <class S>
TensorT<S> normalized_adjacency(const SkeletonGraph& g) {
    return normalize_adjacency(adjacency_with_self_loops<S>(g));
}

// one propagation step: relu(A_hat F W), F is [n x c_in], W is [c_in x c_out]
template <class S>
TensorT<S> graph_conv(const TensorT<S>& f, const TensorT<S>& a_hat, const TensorT<S>& w) {
    if (f.ndim() != 2 || a_hat.ndim() != 2 || w.ndim() != 2)
        throw validation_error("graph_conv: expects rank-2 tensors");
    if (a_hat.shape[1] != f.shape[0] || f.shape[1] != w.shape[0])
        throw validation_error("graph_conv: shapes do not chain");
    return relu(matmul(matmul(a_hat, f), w));
}

// Per-frame graph-conv stack with a mean pool over (frames, joints) and a
// linear classification head. Layer weights carry no bias (the propagation
// rule has none); the head does.
template <class S>
struct GcnStackT {
    std::vector<TensorT<S>> layer_w; // each [c_l x c_{l+1}]
    LinearT<S> head;                 // [num_classes x c_last]

    GcnStackT() = default;
    GcnStackT(const std::vector<std::size_t>& channels, std::size_t num_classes) {
        if (channels.empty()) throw validation_error("gcn: empty channel chain");
        for (std::size_t l = 0; l + 1 < channels.size(); ++l)
            layer_w.emplace_back(std::vector<std::size_t>{channels[l], channels[l + 1]});
        head = LinearT<S>(num_classes, channels.back());
    }

    std::size_t in_channels() const {
        return layer_w.empty() ? head.in_dim() : layer_w.front().shape[0];
    }
    std::size_t feature_dim() const { return head.in_dim(); }
    std::size_t num_layers() const { return layer_w.size(); }

    void init_random(Rng& rng, double std_dev) {
        for (auto& w : layer_w)
            for (auto& v : w.data) v = static_cast<S>(rng.normal() * std_dev);
        head.init_random(rng, std_dev);
    }
};

template <class S>
struct GcnCacheT {
    // activations[l] is the input to layer l, [T x n x c_l]; activations.back()
    // is the final stack output
    std::vector<TensorT<S>> activations;
    TensorT<S> feature; // mean-pooled pre-head feature [c_last]
};

namespace detail {

template <class S>
TensorT<S> frame_of(const TensorT<S>& seq, std::size_t t) {
    const std::size_t n = seq.shape[1], c = seq.shape[2];
    TensorT<S> f({n, c});
    std::copy(seq.data.begin() + static_cast<std::ptrdiff_t>(t * n * c),
              seq.data.begin() + static_cast<std::ptrdiff_t>((t + 1) * n * c), f.data.begin());
    return f;
}

template <class S>
void set_frame(TensorT<S>& seq, std::size_t t, const TensorT<S>& f) {
    const std::size_t n = seq.shape[1], c = seq.shape[2];
    std::copy(f.data.begin(), f.data.end(),
              seq.data.begin() + static_cast<std::ptrdiff_t>(t * n * c));
}

} // namespace detail

// Forward over a [T x n x c] sequence: per-frame graph convs, mean over
// (T, n), then the head. Returns logits; fills `cache` when given.
template <class S>
TensorT<S> gcn_forward(const TensorT<S>& seq, const TensorT<S>& a_hat, const GcnStackT<S>& stack,
                       GcnCacheT<S>* cache = nullptr) {
    if (seq.ndim() != 3) throw validation_error("gcn_forward: expects [T,n,c] input");
    if (seq.shape[2] != stack.in_channels())
        throw validation_error("gcn_forward: input channels " + std::to_string(seq.shape[2]) +
                               " != stack input " + std::to_string(stack.in_channels()));
    if (seq.shape[1] != a_hat.shape[0])
        throw validation_error("gcn_forward: joint count mismatch with adjacency");
    const std::size_t t_len = seq.shape[0], n = seq.shape[1];

    TensorT<S> cur = seq;
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(cur);
    }
    for (const auto& w : stack.layer_w) {
        TensorT<S> next({t_len, n, w.shape[1]});
        for (std::size_t t = 0; t < t_len; ++t)
            detail::set_frame(next, t, graph_conv(detail::frame_of(cur, t), a_hat, w));
        cur = std::move(next);
        if (cache) cache->activations.push_back(cur);
    }

    const std::size_t c_last = cur.shape[2];
    TensorT<S> feature({c_last});
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < c_last; ++k) feature[k] += cur.at(t, j, k);
    const S inv = S(1) / static_cast<S>(t_len * n);
    for (auto& v : feature.data) v *= inv;
    if (cache) cache->feature = feature;
    return stack.head.forward(feature);
}

// Backward through the stack. `dlogits` is the gradient at the head output;
// `dfeature_extra` (optional) is additional gradient flowing directly into
// the pooled pre-head feature. Accumulates into `grads`; returns dL/dinput.
template <class S>
TensorT<S> gcn_backward(const GcnStackT<S>& stack, const TensorT<S>& a_hat,
                        const GcnCacheT<S>& cache, const TensorT<S>& dlogits,
                        const TensorT<S>* dfeature_extra, GcnStackT<S>& grads) {
    if (cache.activations.size() != stack.layer_w.size() + 1)
        throw validation_error("gcn_backward: missing forward cache");
    TensorT<S> dfeature = stack.head.backward(cache.feature, dlogits, grads.head);
    if (dfeature_extra) add_inplace(dfeature, *dfeature_extra);

    const TensorT<S>& last = cache.activations.back();
    const std::size_t t_len = last.shape[0], n = last.shape[1];
    const S inv = S(1) / static_cast<S>(t_len * n);
    TensorT<S> dcur(last.shape);
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < last.shape[2]; ++k)
                dcur.at(t, j, k) = dfeature[k] * inv;

    const TensorT<S> a_hat_t = transpose(a_hat);
    for (std::size_t l = stack.layer_w.size(); l-- > 0;) {
        const TensorT<S>& x_seq = cache.activations[l];     // layer input
        const TensorT<S>& y_seq = cache.activations[l + 1]; // relu output
        const TensorT<S>& w = stack.layer_w[l];
        TensorT<S> dprev(x_seq.shape);
        TensorT<S> w_t = transpose(w);
        for (std::size_t t = 0; t < t_len; ++t) {
            TensorT<S> dz = detail::frame_of(dcur, t);
            const TensorT<S> y = detail::frame_of(y_seq, t);
            for (std::size_t i = 0; i < dz.numel(); ++i)
                if (y[i] <= S(0)) dz[i] = S(0);
            const TensorT<S> x = detail::frame_of(x_seq, t);
            const TensorT<S> ax = matmul(a_hat, x);
            add_inplace(grads.layer_w[l], matmul(transpose(ax), dz));
            detail::set_frame(dprev, t, matmul(a_hat_t, matmul(dz, w_t)));
        }
        dcur = std::move(dprev);
    }
    return dcur;
}

template <class S>
TensorT<S> gcn_backward(const GcnStackT<S>& stack, const TensorT<S>& a_hat,
                        const GcnCacheT<S>& cache, const TensorT<S>& dlogits,
                        std::nullptr_t, GcnStackT<S>& grads) {
    return gcn_backward(stack, a_hat, cache, dlogits,
                        static_cast<const TensorT<S>*>(nullptr), grads);
}

} // namespace hpnet
