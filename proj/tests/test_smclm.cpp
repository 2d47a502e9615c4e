// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "hpnet/gradcheck.hpp"
#include "hpnet/losses.hpp"
#include "hpnet/rng.hpp"
#include "hpnet/smclm.hpp"

using namespace hpnet;

namespace {

template <class S>
TensorT<S> random_seq(std::vector<std::size_t> shape, Rng& rng) {
    TensorT<S> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<S>(rng.normal());
    return t;
}

Tensor integer_seq(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(static_cast<int>(rng.below(17)) - 8);
    return t;
}

} // namespace

TEST_CASE("spatial_transform examples") {
    SkeletonGraph chain = SkeletonGraph::from_edges(2, {{0, 1}});

    // constant across joints vanishes
    Tensor fp({3, 2, 4}, std::vector<float>(24, 1.25f));
    Tensor fs = spatial_transform(fp, chain);
    for (float v : fs.data) CHECK(v == 0.0f);

    // hand example: F_p = [[1,1],[3,5]]
    Tensor f1({1, 2, 2}, {1, 1, 3, 5});
    Tensor s1 = spatial_transform(f1, chain);
    CHECK(s1.at(0, 0, 0) == 0.0f);
    CHECK(s1.at(0, 0, 1) == 0.0f);
    CHECK(s1.at(0, 1, 0) == 2.0f);
    CHECK(s1.at(0, 1, 1) == 4.0f);

    // random input vs the per-element oracle
    Rng rng(5);
    SkeletonGraph g = SkeletonGraph::coco17();
    Tensor fr = random_seq<float>({2, 17, 3}, rng);
    Tensor sr = spatial_transform(fr, g);
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t j = 0; j < 17; ++j)
            for (std::size_t k = 0; k < 3; ++k)
                CHECK(sr.at(t, j, k) ==
                      fr.at(t, j, k) - fr.at(t, static_cast<std::size_t>(g.parent[j]), k));

    CHECK_THROWS_AS(spatial_transform(Tensor({1, 3, 2}), g), validation_error);
}

TEST_CASE("spatial_transform linearity and translation invariance are exact") {
    Rng rng(6);
    SkeletonGraph g = SkeletonGraph::coco17();
    // integer-valued tensors with power-of-two scalars keep float ops exact
    Tensor x = integer_seq({2, 17, 3}, rng);
    Tensor y = integer_seq({2, 17, 3}, rng);
    const float a = 2.0f, b = -4.0f;
    Tensor combo(x.shape);
    for (std::size_t i = 0; i < combo.numel(); ++i) combo[i] = a * x[i] + b * y[i];
    Tensor lhs = spatial_transform(combo, g);
    Tensor sx = spatial_transform(x, g);
    Tensor sy = spatial_transform(y, g);
    for (std::size_t i = 0; i < lhs.numel(); ++i) CHECK(lhs[i] == a * sx[i] + b * sy[i]);

    // adding one constant vector to every joint leaves the bone stream unchanged
    Tensor shifted = x;
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t j = 0; j < 17; ++j)
            for (std::size_t k = 0; k < 3; ++k) shifted.at(t, j, k) += 7.0f;
    Tensor ss = spatial_transform(shifted, g);
    for (std::size_t i = 0; i < ss.numel(); ++i) CHECK(ss[i] == sx[i]);
}

TEST_CASE("motion_transform examples and telescoping") {
    // static sequence vanishes
    Tensor fp({4, 3, 2}, std::vector<float>(24, 0.5f));
    Tensor fm = motion_transform(fp);
    for (float v : fm.data) CHECK(v == 0.0f);

    // T=2: [A, B] -> [B-A, 0]
    Tensor f2({2, 1, 2}, {1.0f, 2.0f, 4.0f, 6.5f});
    Tensor m2 = motion_transform(f2);
    CHECK(m2.at(0, 0, 0) == 3.0f);
    CHECK(m2.at(0, 0, 1) == 4.5f);
    CHECK(m2.at(1, 0, 0) == 0.0f);
    CHECK(m2.at(1, 0, 1) == 0.0f);

    // random T=6 vs the shifted-difference oracle
    Rng rng(8);
    Tensor fr = random_seq<float>({6, 4, 3}, rng);
    Tensor mr = motion_transform(fr);
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 3; ++k)
                CHECK(mr.at(t, j, k) == fr.at(t + 1, j, k) - fr.at(t, j, k));

    // telescoping: sum_t F_m[t] == F_p[T-1] - F_p[0]
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 3; ++k) {
            float acc = 0.0f;
            for (std::size_t t = 0; t < 5; ++t) acc += mr.at(t, j, k);
            CHECK(std::abs(acc - (fr.at(5, j, k) - fr.at(0, j, k))) <= 1e-5f);
        }
}

TEST_CASE("run_streams with identical inputs and parameters") {
    Rng rng(12);
    SkeletonGraph g = SkeletonGraph::from_edges(3, {{0, 1}, {1, 2}});
    Tensor a_hat = normalized_adjacency<float>(g);
    GcnStackT<float> model({4, 5}, 3);
    model.init_random(rng, 0.5);
    Tensor input = random_seq<float>({2, 3, 4}, rng);

    std::array<Tensor, 3> inputs = {input, input, input};
    StreamBundleT<float> bundle = run_streams<float>(inputs, a_hat, {&model, &model, &model},
                                                     {true, true, true});
    CHECK(bundle.concatenated.numel() == 15);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(bundle.concatenated[k] == bundle.concatenated[5 + k]);
        CHECK(bundle.concatenated[k] == bundle.concatenated[10 + k]);
        CHECK(bundle.concatenated[k] == bundle.features[0][k]);
    }
}

TEST_CASE("co_learn zero input with zero biases gives zero features") {
    SkeletonGraph g = SkeletonGraph::from_edges(3, {{0, 1}, {1, 2}});
    Tensor a_hat = normalized_adjacency<float>(g);
    GcnStackT<float> m1({4, 5}, 3), m2({4, 5}, 3), m3({4, 5}, 3);
    Tensor zero({2, 3, 4});
    StreamBundleT<float> bundle = co_learn(zero, g, a_hat, m1, m2, m3, {true, true, true});
    for (float v : bundle.concatenated.data) CHECK(v == 0.0f);
}

TEST_CASE("stream parameter independence is bit-exact") {
    Rng rng(19);
    SkeletonGraph g = SkeletonGraph::from_edges(3, {{0, 1}, {1, 2}});
    Tensor a_hat = normalized_adjacency<float>(g);
    GcnStackT<float> m1({4, 5}, 3), m2({4, 5}, 3), m3({4, 5}, 3);
    m1.init_random(rng, 0.5);
    m2.init_random(rng, 0.5);
    m3.init_random(rng, 0.5);
    Tensor input = random_seq<float>({2, 3, 4}, rng);

    StreamBundleT<float> before = co_learn(input, g, a_hat, m1, m2, m3, {true, true, true});
    // perturb the second stream's parameters
    for (auto& v : m2.layer_w[0].data) v += 0.37f;
    StreamBundleT<float> after = co_learn(input, g, a_hat, m1, m2, m3, {true, true, true});

    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(before.concatenated[k] == after.concatenated[k]);           // stream p segment
        CHECK(before.concatenated[10 + k] == after.concatenated[10 + k]); // stream m segment
    }
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(before.logits[0][k] == after.logits[0][k]);
        CHECK(before.logits[2][k] == after.logits[2][k]);
    }
}

TEST_CASE("stream subset selection") {
    Rng rng(23);
    SkeletonGraph g = SkeletonGraph::from_edges(3, {{0, 1}, {1, 2}});
    Tensor a_hat = normalized_adjacency<float>(g);
    GcnStackT<float> m1({4, 5}, 3), m2({4, 6}, 3), m3({4, 7}, 3);
    m1.init_random(rng, 0.5);
    m2.init_random(rng, 0.5);
    m3.init_random(rng, 0.5);
    Tensor input = random_seq<float>({2, 3, 4}, rng);
    StreamBundleT<float> ps = co_learn(input, g, a_hat, m1, m2, m3, {true, false, true});
    CHECK(ps.concatenated.numel() == 12); // 5 + 7
    CHECK_THROWS_AS(co_learn(input, g, a_hat, m1, m2, m3,
                             std::array<bool, 3>{false, false, false}),
                    validation_error);
}

TEST_CASE("co_learn gradients pass finite differences") {
    Rng rng(29);
    SkeletonGraph g = SkeletonGraph::from_edges(4, {{0, 1}, {1, 2}, {1, 3}});
    TensorT<double> a_hat = normalized_adjacency<double>(g);
    std::array<GcnStackT<double>, 3> models = {GcnStackT<double>({3, 4}, 3),
                                               GcnStackT<double>({3, 4}, 3),
                                               GcnStackT<double>({3, 4}, 3)};
    for (auto& m : models) m.init_random(rng, 0.6);
    TensorT<double> fp = random_seq<double>({3, 4, 3}, rng);
    TensorT<double> probe = random_seq<double>({12}, rng);
    const TensorT<double> onehot = make_onehot<double>(3, 1);

    std::vector<ParamRef<double>> refs;
    for (int s = 0; s < 3; ++s) {
        const std::string prefix = "m" + std::to_string(s);
        for (std::size_t l = 0; l < models[s].layer_w.size(); ++l)
            refs.push_back({prefix + ".layer" + std::to_string(l), &models[s].layer_w[l], true});
        collect(refs, prefix + ".head", models[s].head);
    }

    // probe on F_c plus the three auxiliary cross-entropies
    auto loss = [&] {
        StreamBundleT<double> b = co_learn(fp, g, a_hat, models[0], models[1], models[2],
                                           {true, true, true});
        double total = dot(b.concatenated, probe);
        for (int s = 0; s < 3; ++s) total += cross_entropy(b.logits[s], onehot);
        return total;
    };
    auto numeric = finite_diff_grad<double>(refs, loss, 1e-5);

    // analytic: run forward with caches, then back through each stream
    CoLearnCacheT<double> cache;
    StreamBundleT<double> bundle = co_learn(fp, g, a_hat, models[0], models[1], models[2],
                                            {true, true, true}, &cache);
    std::array<GcnStackT<double>, 3> grads = {GcnStackT<double>({3, 4}, 3),
                                              GcnStackT<double>({3, 4}, 3),
                                              GcnStackT<double>({3, 4}, 3)};
    std::size_t off = 0;
    for (int s = 0; s < 3; ++s) {
        TensorT<double> dfeat({4});
        for (std::size_t k = 0; k < 4; ++k) dfeat[k] = probe[off + k];
        off += 4;
        TensorT<double> dlogits = cross_entropy_grad(bundle.logits[s], onehot);
        gcn_backward(models[s], a_hat, cache.gcn[s], dlogits, &dfeat, grads[s]);
    }
    std::vector<ParamRef<double>> grad_refs;
    for (int s = 0; s < 3; ++s) {
        const std::string prefix = "m" + std::to_string(s);
        for (std::size_t l = 0; l < grads[s].layer_w.size(); ++l)
            grad_refs.push_back({prefix + ".layer" + std::to_string(l), &grads[s].layer_w[l], true});
        collect(grad_refs, prefix + ".head", grads[s].head);
    }
    std::vector<TensorT<double>> analytic;
    for (auto& r : grad_refs) analytic.push_back(*r.tensor);

    auto rep = compare_grads(refs, analytic, numeric);
    CHECK(rep.max_rel_err <= 1e-3);
}
