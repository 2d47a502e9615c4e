// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hpnet/mlp.hpp"
#include "hpnet/ops.hpp"
#include "hpnet/params.hpp"
#include "hpnet/rng.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

// One row of unit-normalized text features per action class.
struct LabelEmbeddings {
    Tensor features; // [N x C]
    std::vector<std::string> labels;

    std::size_t num_classes() const { return labels.size(); }
    std::size_t dim() const { return features.shape[1]; }
};

// Stand-in text encoder: each label row is a seeded unit vector, a pure
// function of (label string, seed). Distinct labels must produce distinct
// rows; a collision is an error.
inline LabelEmbeddings encode_labels(const std::vector<std::string>& labels, std::size_t dim,
                                     std::uint64_t seed) {
    if (labels.empty()) throw validation_error("encode_labels: no labels");
    if (dim == 0) throw validation_error("encode_labels: dim must be positive");
    LabelEmbeddings out;
    out.labels = labels;
    out.features = Tensor({labels.size(), dim});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].empty()) throw validation_error("encode_labels: empty label");
        for (std::size_t j = 0; j < i; ++j)
            if (labels[j] == labels[i])
                throw validation_error("encode_labels: duplicate label '" + labels[i] + "'");
        Rng rng(derive_seed(seed, "label:" + labels[i]));
        float norm_sq = 0.0f;
        for (std::size_t k = 0; k < dim; ++k) {
            const float v = static_cast<float>(rng.normal());
            out.features.at(i, k) = v;
            norm_sq += v * v;
        }
        const float norm = std::sqrt(norm_sq);
        if (!(norm > 0.0f)) throw numeric_error("encode_labels: degenerate embedding");
        for (std::size_t k = 0; k < dim; ++k) out.features.at(i, k) /= norm;
    }
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            bool same = true;
            for (std::size_t k = 0; k < dim && same; ++k)
                same = out.features.at(i, k) == out.features.at(j, k);
            if (same) throw numeric_error("encode_labels: embedding collision");
        }
    return out;
}

// Four independent two-layer projections (no parameter sharing) plus the
// linear bridge mapping the concatenated stream feature down to the text
// width. p4 is allocated for parity with the four-projection contract but the
// refinement gate uses a single projection; see refine().
template <class S>
struct TrmmParamsT {
    MlpT<S> p1, p2, p3, p4; // each maps C -> C
    LinearT<S> bridge;      // [C x fc_len]

    TrmmParamsT() = default;
    TrmmParamsT(std::size_t text_dim, std::size_t fc_len)
        : p1(text_dim, text_dim, text_dim),
          p2(text_dim, text_dim, text_dim),
          p3(text_dim, text_dim, text_dim),
          p4(text_dim, text_dim, text_dim),
          bridge(text_dim, fc_len) {}

    std::size_t text_dim() const { return bridge.out_dim(); }

    // Small-random weights, zero biases: the module starts near the residual
    // identity (modulation and refinement both vanish at zero parameters).
    void init_random(Rng& rng, double std_dev = 0.02) {
        p1.init_random(rng, std_dev);
        p2.init_random(rng, std_dev);
        p3.init_random(rng, std_dev);
        p4.init_random(rng, std_dev);
        bridge.init_random(rng, std_dev);
    }
};

template <class S>
void collect(std::vector<ParamRef<S>>& out, const std::string& path, TrmmParamsT<S>& t) {
    collect(out, path + ".p1", t.p1);
    collect(out, path + ".p2", t.p2);
    collect(out, path + ".p3", t.p3);
    collect(out, path + ".p4", t.p4);
    collect(out, path + ".bridge", t.bridge);
}

// scale/shift modulation: psi[i,:] = gamma ⊙ F_text[i,:] + beta, with
// gamma = P1(F_c), beta = P2(F_c); F_c already bridged to the text width
template <class S>
TensorT<S> modulate_rows(const TensorT<S>& gamma, const TensorT<S>& beta,
                         const TensorT<S>& f_text) {
    if (f_text.ndim() != 2) throw validation_error("modulate: F_text must be [N,C]");
    const std::size_t n = f_text.shape[0], c = f_text.shape[1];
    if (gamma.numel() != c || beta.numel() != c)
        throw validation_error("modulate: factor width mismatch");
    TensorT<S> psi({n, c});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k) psi.at(i, k) = gamma[k] * f_text.at(i, k) + beta[k];
    return psi;
}

template <class S>
TensorT<S> modulate(const TensorT<S>& fc_bridged, const TensorT<S>& f_text,
                    const TrmmParamsT<S>& params) {
    return modulate_rows(params.p1.forward(fc_bridged), params.p2.forward(fc_bridged), f_text);
}

// pairwise gate G[k,j] = tanh(u_k - u_j), filled by mirroring the upper
// triangle so antisymmetry holds bitwise (zero diagonal)
template <class S>
TensorT<S> pairwise_tanh_gate(const TensorT<S>& u) {
    const std::size_t c = u.numel();
    TensorT<S> g({c, c});
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t j = k + 1; j < c; ++j) {
            const S t = std::tanh(u[k] - u[j]);
            g.at(k, j) = t;
            g.at(j, k) = -t;
        }
    return g;
}

// refinement vector: eta_k = (1/C) * sum_j tanh(u_k - u_j) * fc[j],
// u = P3(fc); the mean contraction keeps the result on the text width
template <class S>
TensorT<S> refine_with_gate(const TensorT<S>& u, const TensorT<S>& fc_bridged) {
    const std::size_t c = fc_bridged.numel();
    if (u.numel() != c) throw validation_error("refine: gate width mismatch");
    const TensorT<S> g = pairwise_tanh_gate(u);
    TensorT<S> eta({c});
    const S inv = S(1) / static_cast<S>(c);
    for (std::size_t k = 0; k < c; ++k) {
        S acc = S(0);
        for (std::size_t j = 0; j < c; ++j) acc += g.at(k, j) * fc_bridged[j];
        eta[k] = acc * inv;
    }
    return eta;
}

template <class S>
TensorT<S> refine(const TensorT<S>& fc_bridged, const TrmmParamsT<S>& params) {
    return refine_with_gate(params.p3.forward(fc_bridged), fc_bridged);
}

// F'_text = F_text + psi + eta, eta broadcast across class rows
template <class S>
TensorT<S> aggregate(const TensorT<S>& f_text, const TensorT<S>& psi, const TensorT<S>& eta) {
    if (!f_text.same_shape(psi)) throw validation_error("aggregate: psi shape mismatch");
    if (eta.numel() != f_text.shape[1]) throw validation_error("aggregate: eta width mismatch");
    TensorT<S> out(f_text.shape);
    for (std::size_t i = 0; i < f_text.shape[0]; ++i)
        for (std::size_t k = 0; k < f_text.shape[1]; ++k)
            out.at(i, k) = f_text.at(i, k) + psi.at(i, k) + eta[k];
    ensure_finite(out, "trmm.aggregate");
    return out;
}

template <class S>
struct TrmmCacheT {
    TensorT<S> fc;         // bridge input
    TensorT<S> fc_bridged; // bridge output
    TensorT<S> gamma, beta, u;
    typename MlpT<S>::Cache p1, p2, p3;
};

template <class S>
TensorT<S> trmm_forward(const TensorT<S>& fc, const TensorT<S>& f_text,
                        const TrmmParamsT<S>& params, TrmmCacheT<S>* cache = nullptr) {
    TrmmCacheT<S> local;
    TrmmCacheT<S>& c = cache ? *cache : local;
    c.fc = fc;
    c.fc_bridged = params.bridge.forward(fc);
    c.gamma = params.p1.forward(c.fc_bridged, &c.p1);
    c.beta = params.p2.forward(c.fc_bridged, &c.p2);
    c.u = params.p3.forward(c.fc_bridged, &c.p3);
    TensorT<S> psi = modulate_rows(c.gamma, c.beta, f_text);
    TensorT<S> eta = refine_with_gate(c.u, c.fc_bridged);
    return aggregate(f_text, psi, eta);
}

// Backward from dL/dF'_text. Accumulates parameter grads, returns dL/dF_c.
template <class S>
TensorT<S> trmm_backward(const TrmmParamsT<S>& params, const TrmmCacheT<S>& cache,
                         const TensorT<S>& f_text, const TensorT<S>& dout,
                         TrmmParamsT<S>& grads) {
    const std::size_t n = f_text.shape[0], c = f_text.shape[1];
    // psi path: dgamma_k = sum_i dout[i,k]*F_text[i,k]; dbeta_k = sum_i dout[i,k]
    TensorT<S> dgamma({c}), dbeta({c}), deta({c});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < c; ++k) {
            dgamma[k] += dout.at(i, k) * f_text.at(i, k);
            dbeta[k] += dout.at(i, k);
            deta[k] += dout.at(i, k);
        }
    // eta path: eta_k = (1/C) sum_j G[k,j] * fcb[j]
    const S inv = S(1) / static_cast<S>(c);
    const TensorT<S> gate = pairwise_tanh_gate(cache.u);
    TensorT<S> du({c});
    TensorT<S> dfcb({c});
    for (std::size_t k = 0; k < c; ++k) {
        const S dk = deta[k] * inv;
        for (std::size_t j = 0; j < c; ++j) {
            const S th = gate.at(k, j);
            const S sech2 = S(1) - th * th;
            du[k] += dk * sech2 * cache.fc_bridged[j];
            du[j] -= dk * sech2 * cache.fc_bridged[j];
            dfcb[j] += dk * th;
        }
    }
    add_inplace(dfcb, params.p1.backward(cache.p1, dgamma, grads.p1));
    add_inplace(dfcb, params.p2.backward(cache.p2, dbeta, grads.p2));
    add_inplace(dfcb, params.p3.backward(cache.p3, du, grads.p3));
    return params.bridge.backward(cache.fc, dfcb, grads.bridge);
}

} // namespace hpnet
