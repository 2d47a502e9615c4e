// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>

#include "hpnet/ops.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

template <class S>
void validate_onehot(const TensorT<S>& onehot) {
    if (onehot.numel() == 0) throw validation_error("onehot: empty");
    std::size_t ones = 0;
    for (S v : onehot.data) {
        if (v == S(1))
            ++ones;
        else if (v != S(0))
            throw validation_error("onehot: entries must be exactly 0 or 1");
    }
    if (ones != 1) throw validation_error("onehot: must contain exactly one 1");
}

template <class S>
TensorT<S> make_onehot(std::size_t n, std::size_t index) {
    if (index >= n) throw validation_error("onehot: index out of range");
    TensorT<S> y({n});
    y[index] = S(1);
    return y;
}

// Cross entropy over pre-softmax logits: -sum_i y_i * log(softmax(s)_i).
// Softmax is applied internally with max subtraction so the result is finite
// for any finite logits.
template <class S>
S cross_entropy(const TensorT<S>& scores, const TensorT<S>& onehot) {
    if (scores.numel() == 0) throw validation_error("cross_entropy: empty scores");
    if (scores.numel() != onehot.numel())
        throw validation_error("cross_entropy: scores/onehot size mismatch");
    validate_onehot(onehot);
    const S m = *std::max_element(scores.data.begin(), scores.data.end());
    S logsum = S(0);
    for (S v : scores.data) logsum += std::exp(v - m);
    logsum = std::log(logsum);
    S loss = S(0);
    for (std::size_t i = 0; i < scores.numel(); ++i)
        if (onehot[i] == S(1)) loss += logsum - (scores[i] - m);
    ensure_finite(loss, "cross_entropy");
    return loss;
}

// d(cross_entropy)/d(scores) = softmax(scores) - onehot
template <class S>
TensorT<S> cross_entropy_grad(const TensorT<S>& scores, const TensorT<S>& onehot) {
    validate_onehot(onehot);
    TensorT<S> g = softmax(scores);
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] -= onehot[i];
    return g;
}

} // namespace hpnet
