// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "hpnet/params.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

// relative error with a floor that only guards division by zero
template <class S>
S relative_error(S a, S b) {
    const S denom = std::max({std::abs(a), std::abs(b), S(1e-6)});
    return std::abs(a - b) / denom;
}

// Central finite differences of a scalar loss with respect to every scalar in
// `refs`, perturbing parameters in place: (f(p+eps*e_i) - f(p-eps*e_i)) / (2 eps).
template <class S, class F>
std::vector<TensorT<S>> finite_diff_grad(std::vector<ParamRef<S>>& refs, F&& loss_fn,
                                         S eps = S(1e-3)) {
    if (!(eps > S(0))) throw validation_error("finite_diff_grad: eps must be positive");
    std::vector<TensorT<S>> grads;
    grads.reserve(refs.size());
    for (auto& ref : refs) {
        TensorT<S> g(ref.tensor->shape);
        for (std::size_t i = 0; i < ref.tensor->numel(); ++i) {
            const S saved = (*ref.tensor)[i];
            (*ref.tensor)[i] = saved + eps;
            const S f_plus = loss_fn();
            (*ref.tensor)[i] = saved - eps;
            const S f_minus = loss_fn();
            (*ref.tensor)[i] = saved;
            ensure_finite(f_plus, "finite_diff_grad");
            ensure_finite(f_minus, "finite_diff_grad");
            g[i] = (f_plus - f_minus) / (S(2) * eps);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_path;
    std::size_t worst_index = 0;
};

// Compare analytic gradients against finite differences over the same refs.
template <class S>
GradCheckReport compare_grads(const std::vector<ParamRef<S>>& refs,
                              const std::vector<TensorT<S>>& analytic,
                              const std::vector<TensorT<S>>& numeric) {
    if (analytic.size() != refs.size() || numeric.size() != refs.size())
        throw validation_error("compare_grads: ref/grad count mismatch");
    GradCheckReport rep;
    for (std::size_t r = 0; r < refs.size(); ++r) {
        for (std::size_t i = 0; i < analytic[r].numel(); ++i) {
            const double e =
                relative_error(static_cast<double>(analytic[r][i]), static_cast<double>(numeric[r][i]));
            if (e > rep.max_rel_err) {
                rep.max_rel_err = e;
                rep.worst_path = refs[r].path;
                rep.worst_index = i;
            }
        }
    }
    return rep;
}

} // namespace hpnet
