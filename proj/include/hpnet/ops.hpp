// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "hpnet/tensor.hpp"

// Dense linear algebra and activations. All reductions accumulate in
// ascending flat-index order, which pins results bit-exactly across runs.

namespace hpnet {

template <class S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.ndim() != 2 || b.ndim() != 2)
        throw validation_error("matmul: expects rank-2 tensors, got " + a.shape_str() + " x " +
                               b.shape_str());
    if (a.shape[1] != b.shape[0])
        throw validation_error("matmul: inner dimensions disagree, " + a.shape_str() + " x " +
                               b.shape_str());
    const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
    TensorT<S> out({m, n});
    // i-k-j order: contributions to out[i][j] still arrive in ascending k,
    // identical to the naive j-inner loop, but row-contiguous on b.
    for (std::size_t i = 0; i < m; ++i) {
        const S* arow = &a.data[i * k];
        S* orow = &out.data[i * n];
        for (std::size_t kk = 0; kk < k; ++kk) {
            const S aik = arow[kk];
            const S* brow = &b.data[kk * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

template <class S>
TensorT<S> transpose(const TensorT<S>& a) {
    if (a.ndim() != 2) throw validation_error("transpose: expects rank-2 tensor");
    TensorT<S> out({a.shape[1], a.shape[0]});
    for (std::size_t i = 0; i < a.shape[0]; ++i)
        for (std::size_t j = 0; j < a.shape[1]; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    if (!a.same_shape(b)) throw validation_error("add: shape mismatch");
    TensorT<S> out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b[i];
    return out;
}

template <class S>
void add_inplace(TensorT<S>& a, const TensorT<S>& b) {
    if (!a.same_shape(b)) throw validation_error("add_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.numel(); ++i) a[i] += b[i];
}

template <class S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
    if (!a.same_shape(b)) throw validation_error("sub: shape mismatch");
    TensorT<S> out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b[i];
    return out;
}

template <class S>
TensorT<S> scale(const TensorT<S>& a, S c) {
    TensorT<S> out = a;
    for (auto& v : out.data) v *= c;
    return out;
}

template <class S>
S dot(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.numel() != b.numel()) throw validation_error("dot: size mismatch");
    S acc = S(0);
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a[i] * b[i];
    return acc;
}

template <class S>
S l2_norm(const TensorT<S>& a) {
    S acc = S(0);
    for (S v : a.data) acc += v * v;
    return std::sqrt(acc);
}

template <class S>
TensorT<S> relu(const TensorT<S>& a) {
    TensorT<S> out = a;
    for (auto& v : out.data) v = v > S(0) ? v : S(0);
    return out;
}

// index of the largest element; ties go to the smallest flat index
template <class S>
std::size_t argmax_flat(const TensorT<S>& a) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < a.numel(); ++i)
        if (a[i] > a[best]) best = i;
    return best;
}

// max-stabilized softmax; output sums to 1 and every entry lies in (0,1]
template <class S>
TensorT<S> softmax(const TensorT<S>& logits) {
    if (logits.numel() == 0) throw validation_error("softmax: empty input");
    const S m = *std::max_element(logits.data.begin(), logits.data.end());
    TensorT<S> out = logits;
    S sum = S(0);
    for (auto& v : out.data) {
        v = std::exp(v - m);
        sum += v;
    }
    for (auto& v : out.data) v /= sum;
    return out;
}

} // namespace hpnet
