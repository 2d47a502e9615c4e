// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hpnet/mlp.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

// One named, path-addressable trainable tensor. Models expose their full
// parameter set as an ordered list of these; the order is fixed, which gives
// every scalar a stable flat index for gradient checking and optimizer state.
template <class S>
struct ParamRef {
    std::string path;
    TensorT<S>* tensor = nullptr;
    bool decay = true; // weight matrices decay; biases and the temperature do not
};

template <class S>
void collect(std::vector<ParamRef<S>>& out, const std::string& path, LinearT<S>& lin) {
    out.push_back({path + ".w", &lin.w, true});
    out.push_back({path + ".b", &lin.b, false});
}

template <class S>
void collect(std::vector<ParamRef<S>>& out, const std::string& path, MlpT<S>& mlp) {
    collect(out, path + ".l1", mlp.l1);
    collect(out, path + ".l2", mlp.l2);
}

template <class S>
std::size_t total_scalar_count(const std::vector<ParamRef<S>>& refs) {
    std::size_t n = 0;
    for (const auto& r : refs) n += r.tensor->numel();
    return n;
}

template <class S>
void zero_all(std::vector<ParamRef<S>>& refs) {
    for (auto& r : refs) r.tensor->fill(S(0));
}

} // namespace hpnet
