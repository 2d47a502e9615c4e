// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "hpnet/gradcheck.hpp"
#include "hpnet/ops.hpp"
#include "hpnet/rng.hpp"
#include "hpnet/trmm.hpp"

using namespace hpnet;

namespace {

template <class S>
TensorT<S> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
    TensorT<S> t({n});
    for (auto& v : t.data) v = static_cast<S>(rng.normal() * scale);
    return t;
}

// an MLP that ignores its input and outputs a constant (zero weights,
// constant output bias)
MlpT<float> constant_mlp(std::size_t dim, float value) {
    MlpT<float> m(dim, dim, dim);
    m.l2.b.fill(value);
    return m;
}

} // namespace

TEST_CASE("encode_labels determinism, shape and normalization") {
    const std::vector<std::string> labels = {"drink water", "eat meal", "jump", "wave", "sit"};
    LabelEmbeddings a = encode_labels(labels, 64, 7);
    LabelEmbeddings b = encode_labels(labels, 64, 7);
    CHECK(a.features.shape == std::vector<std::size_t>{5, 64});
    for (std::size_t i = 0; i < a.features.numel(); ++i) CHECK(a.features[i] == b.features[i]);

    for (std::size_t i = 0; i < 5; ++i) {
        float norm_sq = 0.0f;
        for (std::size_t k = 0; k < 64; ++k) norm_sq += a.features.at(i, k) * a.features.at(i, k);
        CHECK(std::abs(std::sqrt(norm_sq) - 1.0f) <= 1e-6f);
    }

    LabelEmbeddings c = encode_labels(labels, 64, 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.features.numel() && !any_diff; ++i)
        any_diff = a.features[i] != c.features[i];
    CHECK(any_diff);

    CHECK_THROWS_AS(encode_labels({"x", "x"}, 8, 1), validation_error);
    CHECK_THROWS_AS(encode_labels({"x", ""}, 8, 1), validation_error);
    CHECK_THROWS_AS(encode_labels({}, 8, 1), validation_error);
}

TEST_CASE("encode_labels keeps random labels well separated") {
    std::vector<std::string> labels;
    for (int i = 0; i < 60; ++i) labels.push_back("action_" + std::to_string(i * 31 + 7));
    LabelEmbeddings e = encode_labels(labels, 128, 12345);
    float max_cos = 0.0f;
    for (std::size_t i = 0; i < 60; ++i)
        for (std::size_t j = i + 1; j < 60; ++j) {
            float d = 0.0f;
            for (std::size_t k = 0; k < 128; ++k) d += e.features.at(i, k) * e.features.at(j, k);
            max_cos = std::max(max_cos, std::abs(d));
        }
    CHECK(max_cos < 0.5f);
}

TEST_CASE("modulate examples and scalar oracle") {
    Rng rng(3);
    const std::size_t dim = 6, classes = 4;
    Tensor f_text({classes, dim});
    for (auto& v : f_text.data) v = static_cast<float>(rng.normal());

    TrmmParamsT<float> params(dim, dim);
    // P1 outputs ones, P2 outputs zero: identity modulation
    params.p1 = constant_mlp(dim, 1.0f);
    params.p2 = constant_mlp(dim, 0.0f);
    Tensor fcb = random_vec<float>(dim, rng);
    Tensor psi = modulate(fcb, f_text, params);
    for (std::size_t i = 0; i < psi.numel(); ++i) CHECK(psi[i] == f_text[i]);

    // P1 zero, P2 constant: every row equals the shift
    params.p1 = constant_mlp(dim, 0.0f);
    params.p2 = constant_mlp(dim, 0.75f);
    Tensor shift = modulate(fcb, f_text, params);
    for (float v : shift.data) CHECK(v == 0.75f);

    // random factors vs the per-element oracle
    Rng rng2(4);
    Tensor gamma = random_vec<float>(dim, rng2);
    Tensor beta = random_vec<float>(dim, rng2);
    Tensor got = modulate_rows(gamma, beta, f_text);
    for (std::size_t i = 0; i < classes; ++i)
        for (std::size_t k = 0; k < dim; ++k)
            CHECK(std::abs(got.at(i, k) - (gamma[k] * f_text.at(i, k) + beta[k])) <= 1e-6f);

    CHECK_THROWS_AS(modulate_rows(random_vec<float>(3, rng2), beta, f_text), validation_error);
}

TEST_CASE("modulation rows are independent across classes") {
    Rng rng(9);
    Tensor f_text({3, 5});
    for (auto& v : f_text.data) v = static_cast<float>(rng.normal());
    Tensor gamma = random_vec<float>(5, rng);
    Tensor beta = random_vec<float>(5, rng);
    Tensor before = modulate_rows(gamma, beta, f_text);
    f_text.at(2, 3) += 10.0f; // perturb row 2 only
    Tensor after = modulate_rows(gamma, beta, f_text);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(before.at(0, k) == after.at(0, k));
        CHECK(before.at(1, k) == after.at(1, k));
    }
    CHECK(before.at(2, 3) != after.at(2, 3));
}

TEST_CASE("refine gate antisymmetry and vanishing cases") {
    Rng rng(11);
    Tensor u = random_vec<float>(7, rng, 2.0);
    Tensor gate = pairwise_tanh_gate(u);
    for (std::size_t k = 0; k < 7; ++k) {
        CHECK(gate.at(k, k) == 0.0f);
        for (std::size_t j = 0; j < 7; ++j) CHECK(gate.at(k, j) == -gate.at(j, k));
    }

    // constant projection output kills the gate
    Tensor uc({7}, std::vector<float>(7, 0.4f));
    Tensor fcb = random_vec<float>(7, rng);
    Tensor eta = refine_with_gate(uc, fcb);
    for (float v : eta.data) CHECK(v == 0.0f);

    // zero features kill eta regardless of the gate
    Tensor zero({7});
    Tensor eta2 = refine_with_gate(u, zero);
    for (float v : eta2.data) CHECK(v == 0.0f);
}

TEST_CASE("refine matches the double-loop oracle") {
    Tensor u({3}, {0.5f, -1.0f, 2.0f});
    Tensor fcb({3}, {1.0f, 2.0f, -3.0f});
    Tensor eta = refine_with_gate(u, fcb);
    for (std::size_t k = 0; k < 3; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
            acc += std::tanh(static_cast<double>(u[k]) - u[j]) * fcb[j];
        CHECK(std::abs(eta[k] - acc / 3.0) <= 1e-6);
    }
}

TEST_CASE("aggregate examples") {
    Rng rng(13);
    Tensor f_text({4, 6});
    for (auto& v : f_text.data) v = static_cast<float>(rng.normal());
    Tensor zero_psi({4, 6});
    Tensor zero_eta({6});

    Tensor same = aggregate(f_text, zero_psi, zero_eta);
    for (std::size_t i = 0; i < f_text.numel(); ++i) CHECK(same[i] == f_text[i]);

    Tensor twice = aggregate(f_text, f_text, zero_eta);
    for (std::size_t i = 0; i < f_text.numel(); ++i) CHECK(twice[i] == 2.0f * f_text[i]);

    CHECK_THROWS_AS(aggregate(f_text, Tensor({3, 6}), zero_eta), validation_error);
    CHECK_THROWS_AS(aggregate(f_text, zero_psi, Tensor({5})), validation_error);
}

TEST_CASE("all-zero parameters reproduce the text features bitwise") {
    Rng rng(17);
    const std::size_t dim = 8, fc_len = 12, classes = 5;
    Tensor f_text({classes, dim});
    for (auto& v : f_text.data) v = static_cast<float>(rng.normal());
    TrmmParamsT<float> params(dim, fc_len); // zero-initialized
    Tensor fc = random_vec<float>(fc_len, rng);
    Tensor refined = trmm_forward(fc, f_text, params);
    for (std::size_t i = 0; i < f_text.numel(); ++i) CHECK(refined[i] == f_text[i]);
}

TEST_CASE("distinct conditioning features give distinct refined text") {
    Rng rng(19);
    const std::size_t dim = 8, fc_len = 12, classes = 4;
    Tensor f_text({classes, dim});
    for (auto& v : f_text.data) v = static_cast<float>(rng.normal());
    TrmmParamsT<float> params(dim, fc_len);
    Rng init(77);
    params.init_random(init, 0.5);
    int distinct = 0;
    for (int trial = 0; trial < 10; ++trial) {
        Tensor fc1 = random_vec<float>(fc_len, rng);
        Tensor fc2 = random_vec<float>(fc_len, rng);
        Tensor r1 = trmm_forward(fc1, f_text, params);
        Tensor r2 = trmm_forward(fc2, f_text, params);
        bool differ = false;
        for (std::size_t i = 0; i < r1.numel() && !differ; ++i) differ = r1[i] != r2[i];
        if (differ) ++distinct;
    }
    CHECK(distinct == 10);
}

TEST_CASE("trmm gradients pass finite differences") {
    Rng rng(23);
    const std::size_t dim = 5, fc_len = 7, classes = 3;
    TensorT<double> f_text({classes, dim});
    for (auto& v : f_text.data) v = rng.normal();
    TrmmParamsT<double> params(dim, fc_len);
    params.init_random(rng, 0.4);
    TensorT<double> fc = random_vec<double>(fc_len, rng);
    TensorT<double> probe({classes, dim});
    for (auto& v : probe.data) v = rng.normal();

    std::vector<ParamRef<double>> refs;
    collect(refs, "trmm", params);
    auto loss = [&] { return dot(trmm_forward(fc, f_text, params), probe); };
    auto numeric = finite_diff_grad<double>(refs, loss, 1e-5);

    TrmmParamsT<double> grads(dim, fc_len);
    TrmmCacheT<double> cache;
    trmm_forward(fc, f_text, params, &cache);
    trmm_backward(params, cache, f_text, probe, grads);
    std::vector<ParamRef<double>> grad_refs;
    collect(grad_refs, "trmm", grads);
    std::vector<TensorT<double>> analytic;
    for (auto& r : grad_refs) analytic.push_back(*r.tensor);

    auto rep = compare_grads(refs, analytic, numeric);
    CHECK(rep.max_rel_err <= 1e-3);

    // the unused fourth projection stays at zero gradient on both routes
    bool p4_zero = true;
    for (std::size_t r = 0; r < refs.size(); ++r)
        if (refs[r].path.find(".p4.") != std::string::npos)
            for (std::size_t i = 0; i < analytic[r].numel(); ++i)
                p4_zero = p4_zero && analytic[r][i] == 0.0 && numeric[r][i] == 0.0;
    CHECK(p4_zero);
}
