// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hpnet/gradcheck.hpp"
#include "hpnet/losses.hpp"
#include "hpnet/mlp.hpp"
#include "hpnet/ops.hpp"
#include "hpnet/rng.hpp"
#include "hpnet/tensor.hpp"
#include "hpnet/tensor_io.hpp"

using namespace hpnet;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(rng.normal() * scale);
    return t;
}

// independent naive triple-loop matmul oracle
Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    Tensor out({a.shape[0], b.shape[1]});
    for (std::size_t i = 0; i < a.shape[0]; ++i)
        for (std::size_t j = 0; j < b.shape[1]; ++j) {
            float acc = 0.0f;
            for (std::size_t k = 0; k < a.shape[1]; ++k) acc += a.at(i, k) * b.at(k, j);
            out.at(i, j) = acc;
        }
    return out;
}

} // namespace

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor({2, 0}), validation_error);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>{1.0f}), validation_error);
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    t.at(1, 2) = 5.0f;
    CHECK(t.data[5] == 5.0f);

    Tensor bad({2});
    bad[0] = std::nanf("");
    CHECK_THROWS_AS(ensure_finite(bad, "test"), numeric_error);
}

TEST_CASE("rng determinism") {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    CHECK(Rng(derive_seed(7, "x")).next_u64() != Rng(derive_seed(7, "y")).next_u64());
    Rng u(99);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
    (void)c;
}

TEST_CASE("matmul identity and hand examples") {
    Rng rng(1);
    Tensor eye({2, 2}, {1, 0, 0, 1});
    Tensor b = random_tensor({2, 2}, rng);
    Tensor ib = matmul(eye, b);
    Tensor bi = matmul(b, eye);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(ib[i] == b[i]); // exact
        CHECK(bi[i] == b[i]);
    }

    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor col({2, 1}, {0, 1});
    Tensor r = matmul(a, col);
    CHECK(r.at(0, 0) == 2.0f);
    CHECK(r.at(1, 0) == 4.0f);

    CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), validation_error);
}

TEST_CASE("matmul matches naive oracle") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor a = random_tensor({5, 7}, rng);
        Tensor b = random_tensor({7, 3}, rng);
        Tensor got = matmul(a, b);
        Tensor want = matmul_oracle(a, b);
        for (std::size_t i = 0; i < got.numel(); ++i)
            CHECK(std::abs(got[i] - want[i]) <= 1e-6f);
    }
}

TEST_CASE("softmax properties") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor logits = random_tensor({static_cast<std::size_t>(2 + trial % 7)}, rng, 3.0);
        Tensor p = softmax(logits);
        float sum = 0.0f;
        for (float v : p.data) {
            CHECK(v > 0.0f);
            CHECK(v < 1.0f);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0f) <= 1e-6f);
    }
    // stabilized against large logits
    Tensor big({3}, {1000.0f, 0.0f, -1000.0f});
    Tensor p = softmax(big);
    CHECK(std::abs(p[0] - 1.0f) <= 1e-6f);
}

TEST_CASE("cross entropy examples") {
    // uniform logits over N=5 -> ln 5
    Tensor uniform({5}, std::vector<float>(5, 0.7f));
    CHECK(std::abs(cross_entropy(uniform, make_onehot<float>(5, 2)) - std::log(5.0f)) <= 1e-6f);

    // confident correct -> ~0
    Tensor confident({4}, {0.0f, 1000.0f, 0.0f, 0.0f});
    CHECK(cross_entropy(confident, make_onehot<float>(4, 1)) <= 1e-6f);

    // direct softmax-then-log oracle
    Tensor logits({3}, {0.3f, -0.7f, 1.1f});
    const double denom = std::exp(0.3) + std::exp(-0.7) + std::exp(1.1);
    const double want = -std::log(std::exp(1.1) / denom);
    CHECK(std::abs(cross_entropy(logits, make_onehot<float>(3, 2)) - want) <= 1e-6);

    // strictly positive away from a point mass
    Rng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        Tensor l = random_tensor({6}, rng, 2.0);
        CHECK(cross_entropy(l, make_onehot<float>(6, trial % 6)) > 0.0f);
    }
}

TEST_CASE("cross entropy errors") {
    CHECK_THROWS_AS(cross_entropy(Tensor({3}), Tensor({2})), validation_error);
    Tensor two_ones({3}, {1, 1, 0});
    CHECK_THROWS_AS(cross_entropy(Tensor({3}), two_ones), validation_error);
    Tensor frac({3}, {0.5f, 0.5f, 0.0f});
    CHECK_THROWS_AS(cross_entropy(Tensor({3}), frac), validation_error);
    Tensor none({3});
    CHECK_THROWS_AS(cross_entropy(Tensor({3}), none), validation_error);
}

TEST_CASE("cross entropy gradient is softmax minus onehot") {
    Tensor logits({3}, {0.3f, -0.7f, 1.1f});
    Tensor y = make_onehot<float>(3, 0);
    Tensor g = cross_entropy_grad(logits, y);
    Tensor p = softmax(logits);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(g[i] - (p[i] - y[i])) <= 1e-7f);
}

TEST_CASE("finite differences on scalar functions") {
    TensorT<double> w({1});
    w[0] = 3.0;
    std::vector<ParamRef<double>> refs = {{"w", &w, true}};

    auto square = [&] { return w[0] * w[0]; };
    auto g = finite_diff_grad<double>(refs, square, 1e-3);
    CHECK(std::abs(g[0][0] - 6.0) <= 1e-6);

    auto constant = [&] { return 4.2; };
    auto gc = finite_diff_grad<double>(refs, constant, 1e-3);
    CHECK(gc[0][0] == 0.0);

    CHECK_THROWS_AS(finite_diff_grad<double>(refs, square, 0.0), validation_error);
}

TEST_CASE("mlp forward examples") {
    // all-zero parameters -> zero output
    MlpT<float> zero(3, 4, 2);
    Tensor x({2}, {1.5f, -2.0f});
    Tensor y = zero.forward(x);
    for (float v : y.data) CHECK(v == 0.0f);

    // identity layers pass relu through
    MlpT<float> ident(2, 2, 2);
    ident.l1.w = Tensor({2, 2}, {1, 0, 0, 1});
    ident.l2.w = Tensor({2, 2}, {1, 0, 0, 1});
    Tensor xr({2}, {-1.0f, 2.0f});
    Tensor yr = ident.forward(xr);
    CHECK(yr[0] == 0.0f);
    CHECK(yr[1] == 2.0f);

    CHECK_THROWS_AS(ident.forward(Tensor({3})), validation_error);
}

TEST_CASE("mlp forward matches scalar oracle") {
    Rng rng(17);
    MlpT<float> mlp(3, 5, 4);
    mlp.init_random(rng, 0.5);
    for (auto& v : mlp.l1.b.data) v = static_cast<float>(rng.normal());
    for (auto& v : mlp.l2.b.data) v = static_cast<float>(rng.normal());
    Tensor x = random_tensor({4}, rng);
    Tensor y = mlp.forward(x);

    // scalar re-implementation
    for (std::size_t o = 0; o < 3; ++o) {
        double acc = mlp.l2.b[o];
        for (std::size_t hh = 0; hh < 5; ++hh) {
            double hidden = mlp.l1.b[hh];
            for (std::size_t i = 0; i < 4; ++i) hidden += mlp.l1.w.at(hh, i) * x[i];
            if (hidden < 0) hidden = 0;
            acc += mlp.l2.w.at(o, hh) * hidden;
        }
        CHECK(std::abs(y[o] - acc) <= 1e-6);
    }
}

TEST_CASE("mlp backward matches finite differences") {
    Rng rng(23);
    MlpT<double> mlp(3, 4, 5);
    for (auto& v : mlp.l1.w.data) v = rng.normal() * 0.7;
    for (auto& v : mlp.l1.b.data) v = rng.normal() * 0.2;
    for (auto& v : mlp.l2.w.data) v = rng.normal() * 0.7;
    for (auto& v : mlp.l2.b.data) v = rng.normal() * 0.2;
    TensorT<double> x({5});
    for (auto& v : x.data) v = rng.normal();
    TensorT<double> probe({3});
    for (auto& v : probe.data) v = rng.normal();

    std::vector<ParamRef<double>> refs;
    collect(refs, "mlp", mlp);
    auto loss = [&] {
        TensorT<double> y = mlp.forward(x);
        return dot(y, probe);
    };
    auto numeric = finite_diff_grad<double>(refs, loss, 1e-5);

    MlpT<double> grads(3, 4, 5);
    typename MlpT<double>::Cache cache;
    mlp.forward(x, &cache);
    mlp.backward(cache, probe, grads);
    std::vector<ParamRef<double>> grad_refs;
    collect(grad_refs, "mlp", grads);

    std::vector<TensorT<double>> analytic;
    for (auto& r : grad_refs) analytic.push_back(*r.tensor);
    auto rep = compare_grads(refs, analytic, numeric);
    CHECK(rep.max_rel_err <= 1e-3);
}

TEST_CASE("hpt encoding is bit-exact") {
    Tensor t({2, 3}, {1.0f, -2.5f, 0.0f, 3.25f, -0.125f, 7.0f});
    const std::string bytes = encode_hpt(t);
    // header: magic, dtype f32, ndim, reserved
    REQUIRE(bytes.size() == 8 + 8 + 24);
    CHECK(bytes[0] == 0x48);
    CHECK(bytes[1] == 0x50);
    CHECK(bytes[2] == 0x54);
    CHECK(bytes[3] == 0x31);
    CHECK(bytes[4] == 0x00);
    CHECK(bytes[5] == 0x02);
    CHECK(bytes[6] == 0x00);
    CHECK(bytes[7] == 0x00);
    // dims little-endian
    CHECK(static_cast<unsigned char>(bytes[8]) == 2);
    CHECK(static_cast<unsigned char>(bytes[12]) == 3);

    Tensor back = decode_hpt(bytes);
    CHECK(back.shape == t.shape);
    for (std::size_t i = 0; i < t.numel(); ++i) CHECK(back[i] == t[i]);
    CHECK(encode_hpt(back) == bytes);
}

TEST_CASE("hpt reader rejects malformed input") {
    Tensor t({2, 2}, {1, 2, 3, 4});
    std::string good = encode_hpt(t);

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_hpt(bad_magic), io_error);

    std::string bad_dtype = good;
    bad_dtype[4] = '\x01';
    CHECK_THROWS_AS(decode_hpt(bad_dtype), io_error);

    CHECK_THROWS_AS(decode_hpt(good.substr(0, good.size() - 1)), io_error);
    CHECK_THROWS_AS(decode_hpt(good + "x"), io_error);
    CHECK_THROWS_AS(decode_hpt(std::string("HP")), io_error);
}

TEST_CASE("hpt file round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hpnet_test_io";
    fs::create_directories(dir);
    Rng rng(31);
    Tensor t = random_tensor({3, 4, 5}, rng);
    save_hpt(dir / "t.hpt", t);
    Tensor back = load_hpt(dir / "t.hpt");
    CHECK(back.shape == t.shape);
    for (std::size_t i = 0; i < t.numel(); ++i) CHECK(back[i] == t[i]);
    CHECK_THROWS_AS(load_hpt(dir / "missing.hpt"), io_error);
    fs::remove_all(dir);
}
