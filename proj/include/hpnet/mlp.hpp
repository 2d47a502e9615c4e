// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "hpnet/ops.hpp"
#include "hpnet/rng.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

template <class S>
struct LinearT {
    TensorT<S> w; // [out x in]
    TensorT<S> b; // [out]

    LinearT() = default;
    LinearT(std::size_t out, std::size_t in) : w({out, in}), b({out}) {}

    std::size_t in_dim() const { return w.shape[1]; }
    std::size_t out_dim() const { return w.shape[0]; }

    TensorT<S> forward(const TensorT<S>& x) const {
        if (x.numel() != in_dim())
            throw validation_error("linear: input size " + x.shape_str() + " != " +
                                   std::to_string(in_dim()));
        TensorT<S> y({out_dim()});
        for (std::size_t o = 0; o < out_dim(); ++o) {
            S acc = b[o];
            const S* wr = &w.data[o * in_dim()];
            for (std::size_t i = 0; i < in_dim(); ++i) acc += wr[i] * x[i];
            y[o] = acc;
        }
        return y;
    }

    // accumulates parameter grads; returns dL/dx
    TensorT<S> backward(const TensorT<S>& x, const TensorT<S>& dy, LinearT<S>& grads) const {
        TensorT<S> dx({in_dim()});
        for (std::size_t o = 0; o < out_dim(); ++o) {
            const S g = dy[o];
            grads.b[o] += g;
            S* gw = &grads.w.data[o * in_dim()];
            const S* wr = &w.data[o * in_dim()];
            for (std::size_t i = 0; i < in_dim(); ++i) {
                gw[i] += g * x[i];
                dx[i] += g * wr[i];
            }
        }
        return dx;
    }

    void init_random(Rng& rng, double std_dev) {
        for (auto& v : w.data) v = static_cast<S>(rng.normal() * std_dev);
        b.fill(S(0));
    }
};

// Two linear layers with a ReLU in between: y = W2*relu(W1*x + b1) + b2.
template <class S>
struct MlpT {
    LinearT<S> l1, l2;

    MlpT() = default;
    MlpT(std::size_t out, std::size_t hidden, std::size_t in) : l1(hidden, in), l2(out, hidden) {
        if (hidden == 0) throw validation_error("mlp: empty hidden layer");
    }

    std::size_t in_dim() const { return l1.in_dim(); }
    std::size_t out_dim() const { return l2.out_dim(); }

    struct Cache {
        TensorT<S> x;      // input
        TensorT<S> h_pre;  // pre-activation of the hidden layer
    };

    TensorT<S> forward(const TensorT<S>& x, Cache* cache = nullptr) const {
        if (l2.in_dim() != l1.out_dim()) throw validation_error("mlp: layer dims do not chain");
        TensorT<S> h = l1.forward(x);
        if (cache) {
            cache->x = x;
            cache->h_pre = h;
        }
        return l2.forward(relu(h));
    }

    TensorT<S> backward(const Cache& cache, const TensorT<S>& dy, MlpT<S>& grads) const {
        TensorT<S> h = relu(cache.h_pre);
        TensorT<S> dh = l2.backward(h, dy, grads.l2);
        for (std::size_t i = 0; i < dh.numel(); ++i)
            if (cache.h_pre[i] <= S(0)) dh[i] = S(0);
        return l1.backward(cache.x, dh, grads.l1);
    }

    void init_random(Rng& rng, double std_dev) {
        l1.init_random(rng, std_dev);
        l2.init_random(rng, std_dev);
    }
};

} // namespace hpnet
