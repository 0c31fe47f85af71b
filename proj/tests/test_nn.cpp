#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "ditchkit/binary_io.hpp"
#include "ditchkit/error.hpp"
#include "ditchkit/nn/checkpoint.hpp"
#include "ditchkit/nn/init.hpp"
#include "ditchkit/nn/layers.hpp"
#include "ditchkit/nn/optim.hpp"

using namespace ditchkit;
using namespace ditchkit::nn;

namespace {

Tensor<double> random_tensor(Shape s, Rng& rng, double scale = 1.0) {
    Tensor<double> t(std::move(s));
    for (auto& v : t.data) v = scale * rng.normal();
    return t;
}

void check_grad(Layer<double>& layer, ParamStore<double>& store, Shape in, std::uint64_t seed) {
    Rng rng(seed);
    layer.initialize(rng);
    for (auto& [name, p] : store)
        for (auto& v : p.value.data) v += 0.1 * rng.normal();  // move off symmetric initial values
    const auto x = random_tensor(std::move(in), rng);
    const auto r = grad_check(layer, store, x, rng);
    INFO(layer.name(), " worst ", r.worst);
    CHECK(r.max_rel_error < 1e-6);
}

}  // namespace

TEST_CASE("gradient checks") {
    SUBCASE("dense") {
        ParamStore<double> s;
        Dense<double> l(s, "d", 5, 3);
        check_grad(l, s, {4, 5}, 1);
    }
    SUBCASE("conv stride 1 and 2") {
        ParamStore<double> s;
        Conv2D<double> a(s, "a", 2, 3, 3, 1);
        check_grad(a, s, {2, 5, 4, 2}, 2);
        Conv2D<double> b(s, "b", 2, 3, 3, 2);
        check_grad(b, s, {2, 5, 6, 2}, 3);
    }
    SUBCASE("transposed conv") {
        ParamStore<double> s;
        Conv2DTranspose<double> l(s, "t", 3, 2, 3, 2);
        check_grad(l, s, {2, 3, 2, 3}, 4);
    }
    SUBCASE("activations") {
        for (auto a : {Activation::leaky_relu, Activation::tanh, Activation::sigmoid}) {
            ParamStore<double> s;
            Pointwise<double> l(a);
            check_grad(l, s, {3, 7}, 5);
        }
    }
    SUBCASE("lstm") {
        for (bool seq : {true, false}) {
            ParamStore<double> s;
            LSTM<double> l(s, "lstm", 3, 4, seq);
            check_grad(l, s, {2, 3, 3}, 6);
        }
    }
    SUBCASE("non-local block") {
        ParamStore<double> s;
        NonLocal<double> l(s, "nl", 4);
        check_grad(l, s, {2, 3, 2, 4}, 7);
    }
    SUBCASE("sequential with reshape") {
        ParamStore<double> s;
        Sequential<double> net;
        net.add(std::make_unique<Conv2D<double>>(s, "c", 1, 2, 3, 2));
        net.add(std::make_unique<Pointwise<double>>(Activation::leaky_relu));
        net.add(std::make_unique<Reshape<double>>(Shape{0, 8}));
        net.add(std::make_unique<Dense<double>>(s, "d", 8, 3));
        check_grad(net, s, {2, 4, 4, 1}, 8);
    }
}

TEST_CASE("conv SAME stride 2 fixture") {
    ParamStore<double> s;
    Conv2D<double> conv(s, "c", 1, 1, 3, 2, false);
    for (int i = 0; i < 9; ++i) conv.kernel().value[i] = i + 1;
    Tensor<double> x({1, 5, 5, 1});
    for (int i = 0; i < 25; ++i) x[i] = i;
    const auto y = conv.forward(x);
    REQUIRE(y.shape == Shape{1, 3, 3, 1});
    const double expect[9] = {100, 202, 160, 408, 636, 426, 304, 436, 268};
    for (int i = 0; i < 9; ++i) CHECK(y[i] == expect[i]);
}

TEST_CASE("transposed conv is the adjoint of the strided conv") {
    Rng rng(11);
    ParamStore<double> s;
    Conv2D<double> conv(s, "c", 2, 3, 3, 2, false);
    Conv2DTranspose<double> deconv(s, "t", 3, 2, 3, 2, false);
    conv.initialize(rng);
    deconv.kernel().value = conv.kernel().value;
    const auto x = random_tensor({2, 6, 4, 2}, rng);
    const auto y = random_tensor({2, 3, 2, 3}, rng);
    const auto cx = conv.forward(x);
    const auto ty = deconv.forward(y);
    REQUIRE(cx.shape == y.shape);
    REQUIRE(ty.shape == x.shape);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) a += cx[i] * y[i];
    for (std::size_t i = 0; i < x.size(); ++i) b += x[i] * ty[i];
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("LSTM fixture") {
    ParamStore<double> s;
    LSTM<double> l(s, "l", 2, 2, true);
    auto& K = s.at("l.kernel").value;
    auto& U = s.at("l.recurrent").value;
    auto& b = s.at("l.bias").value;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 8; ++c) {
            K[r * 8 + c] = (r * 8 + c) * 0.05 - 0.3;
            U[r * 8 + c] = ((1 - r) * 8 + c) * 0.03 - 0.2;
        }
    for (int c = 0; c < 8; ++c) b[c] = -0.1 + 0.3 * c / 7.0;
    const auto y = l.forward(Tensor<double>({1, 2, 2}, {0.5, -1.0, 1.5, 0.25}));
    CHECK(y[0] == doctest::Approx(-0.049144465568).epsilon(1e-10));
    CHECK(y[1] == doctest::Approx(-0.047107954722).epsilon(1e-10));
    CHECK(y[2] == doctest::Approx(-0.028985986313).epsilon(1e-10));
    CHECK(y[3] == doctest::Approx(-0.000903352999).epsilon(1e-8));
}

TEST_CASE("non-local fixture") {
    ParamStore<double> s;
    NonLocal<double> l(s, "nl", 2);
    s.at("nl.theta").value.data = {1.0, 0.5};
    s.at("nl.phi").value.data = {0.5, 1.0};
    s.at("nl.g").value.data = {1.0, -1.0};
    s.at("nl.w").value.data = {2.0, 1.0};
    const auto y = l.forward(Tensor<double>({1, 1, 2, 2}, {1.0, 0.0, 0.0, 2.0}));
    CHECK(y[0] == doctest::Approx(-1.90544686).epsilon(1e-8));
    CHECK(y[1] == doctest::Approx(-1.45272343).epsilon(1e-8));
    CHECK(y[2] == doctest::Approx(-2.90544686).epsilon(1e-8));
    CHECK(y[3] == doctest::Approx(0.54727657).epsilon(1e-8));
}

TEST_CASE("activations and softmax") {
    CHECK(leaky_relu(-2.0) == doctest::Approx(-0.02));
    CHECK(leaky_relu(3.0) == 3.0);
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(std::isfinite(sigmoid(-800.0)));
    std::vector<double> u{1, 1, 1, 1}, a{1, 2, 3, 1000}, b{101, 102, 103, 1100};
    softmax_rows(u.data(), 1, 4);
    for (double v : u) CHECK(v == doctest::Approx(0.25));
    softmax_rows(a.data(), 2, 2);
    softmax_rows(b.data(), 2, 2);
    for (int i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[i]));
    CHECK(a[0] + a[1] == doctest::Approx(1.0));
}

TEST_CASE("Adam matches the reference update") {
    ParamStore<double> s;
    auto& p = s.add("w", {3});
    p.value.data = {0.5, -1.0, 2.0};
    AdamConfig cfg;
    cfg.lr = 0.1;
    for (int t = 1; t <= 3; ++t) {
        p.grad.data = {1.0 * t, -2.0 * t, 0.5 * t};
        adam_step(s, cfg);
    }
    CHECK(s.step == 3);
    CHECK(p.value[0] == doctest::Approx(0.207681695545).epsilon(1e-11));
    CHECK(p.value[1] == doctest::Approx(-0.707681685276).epsilon(1e-11));
    CHECK(p.value[2] == doctest::Approx(1.707681716082).epsilon(1e-11));
}

TEST_CASE("initialisers") {
    Rng rng(5);
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{6, 4}, {4, 6}, {5, 5}}) {
        const auto Q = orthogonal(r, c, rng);
        const std::size_t n = std::min(r, c);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t k = 0; k < std::max(r, c); ++k)
                    dot += r >= c ? Q[k * c + i] * Q[k * c + j] : Q[i * c + k] * Q[j * c + k];
                CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
            }
    }
    const auto th = rotation_angles(10);
    REQUIRE(th.size() == 5);
    CHECK(th[0] == doctest::Approx(std::numbers::pi / 10));
    CHECK(th[4] == doctest::Approx(9 * std::numbers::pi / 10));
    const auto K = koopman_rotation_blocks(4, rotation_angles(4));
    CHECK(K[0] == doctest::Approx(std::cos(std::numbers::pi / 4)));
    CHECK(K[1] == doctest::Approx(-std::sin(std::numbers::pi / 4)));
    CHECK(K[2] == 0.0);
    CHECK(K[2 * 4 + 2] == doctest::Approx(std::cos(3 * std::numbers::pi / 4)));

    std::vector<float> g(1000);
    glorot_uniform<float>(g, 30, 20, rng);
    const float a = std::sqrt(6.0f / 50.0f);
    for (float v : g) CHECK(std::abs(v) <= a);
}

TEST_CASE("rng is reproducible") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng c(1);
    double mean = 0.0;
    for (int i = 0; i < 20000; ++i) mean += c.uniform();
    CHECK(mean / 20000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("crc32 check value") {
    const std::string s = "123456789";
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
    CHECK(io::crc32(bytes) == 0xCBF43926u);
}

TEST_CASE("checkpoint round trip") {
    ParamStore<float> s;
    Dense<float> d(s, "d", 3, 2);
    Rng rng(3);
    d.initialize(rng);
    const auto path = std::filesystem::temp_directory_path() / "ditchkit_test.dkpt";
    save_checkpoint(path, s, R"({"kind":"test"})");
    const auto ck = load_checkpoint(path);
    CHECK(ck.metadata == R"({"kind":"test"})");
    ParamStore<float> t;
    Dense<float> e(t, "d", 3, 2);
    restore(t, ck);
    CHECK(t.at("d.kernel").value.data == s.at("d.kernel").value.data);
    ParamStore<float> wrong;
    Dense<float> f(wrong, "d", 4, 2);
    CHECK_THROWS_AS(restore(wrong, ck), ShapeError);
    std::filesystem::remove(path);
}

TEST_CASE("tensor guards") {
    CHECK_THROWS_AS(Tensor<float>({2, 2}, std::vector<float>(3)), ShapeError);
    Tensor<float> t({2});
    t[1] = std::nanf("");
    CHECK_THROWS_AS(check_finite(t, "t"), SolverError);
}
