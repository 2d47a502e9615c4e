// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "hpnet/errors.hpp"

namespace hpnet {

// Dense row-major array of scalars. The production pipeline instantiates
// float; the gradient-check harness instantiates the same code with double.
template <class S>
struct TensorT {
    std::vector<std::size_t> shape;
    std::vector<S> data;

    TensorT() = default;

    explicit TensorT(std::vector<std::size_t> dims, S fill = S(0))
        : shape(std::move(dims)), data(checked_numel(shape), fill) {}

    TensorT(std::vector<std::size_t> dims, std::vector<S> values)
        : shape(std::move(dims)), data(std::move(values)) {
        if (checked_numel(shape) != data.size())
            throw validation_error("tensor: shape/data size mismatch");
    }

    static TensorT zeros(std::vector<std::size_t> dims) { return TensorT(std::move(dims)); }

    std::size_t numel() const { return data.size(); }
    std::size_t ndim() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    S& operator[](std::size_t flat) { return data[flat]; }
    const S& operator[](std::size_t flat) const { return data[flat]; }

    S& at(std::size_t i) { return data[i]; }
    const S& at(std::size_t i) const { return data[i]; }
    S& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    const S& at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    S& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    const S& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    S& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    const S& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }

    bool same_shape(const TensorT& other) const { return shape == other.shape; }

    void fill(S v) { std::fill(data.begin(), data.end(), v); }

    std::string shape_str() const {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << ']';
        return os.str();
    }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& dims) {
        std::size_t n = 1;
        for (std::size_t d : dims) {
            if (d == 0) throw validation_error("tensor: zero dimension");
            n *= d;
        }
        return n;
    }
};

using Tensor = TensorT<float>;

template <class S>
bool all_finite(const TensorT<S>& t) {
    for (S v : t.data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

// Public operations surface NaN/Inf instead of propagating them.
template <class S>
void ensure_finite(const TensorT<S>& t, const char* what) {
    if (!all_finite(t)) throw numeric_error(std::string(what) + ": non-finite value");
}

template <class S>
void ensure_finite(S v, const char* what) {
    if (!std::isfinite(static_cast<double>(v)))
        throw numeric_error(std::string(what) + ": non-finite value");
}

} // namespace hpnet
