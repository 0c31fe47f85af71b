#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ditchkit/error.hpp"
#include "ditchkit/nn/init.hpp"
#include "ditchkit/nn/rng.hpp"
#include "ditchkit/pipeline.hpp"
#include "ditchkit/surrogates.hpp"
#include "ditchkit/training.hpp"

using namespace ditchkit;
using namespace ditchkit::surrogates;

namespace {

nn::Tensor<float> random_input(nn::Shape s, std::uint64_t seed) {
    nn::Rng rng(seed);
    nn::Tensor<float> t(std::move(s));
    for (auto& v : t.data) v = static_cast<float>(rng.uniform());
    return t;
}

}  // namespace

TEST_CASE("full-size parameter counts") {
    CHECK(count_params(ArchConfig::full(Variant::cjm)) == 1844938);
    CHECK(count_params(ArchConfig::full(Variant::cjmdd)) == 260541);
    CHECK(count_params(ArchConfig::full(Variant::cjmnlb)) == 1855178);
    CHECK(count_params(ArchConfig::full(Variant::kae)) == 216751);
    CHECK(count_params(ArchConfig::full(Variant::unfilter)) == 23873);
}

TEST_CASE("architecture validation and names") {
    CHECK(parse_variant("cjmnlb") == Variant::cjmnlb);
    CHECK(to_string(Variant::kae) == "kae");
    CHECK_THROWS_AS(parse_variant("transformer"), ConfigError);
    auto a = ArchConfig::desk(Variant::cjm, 30);
    CHECK_THROWS_AS(a.validate(), ConfigError);
    a = ArchConfig::desk(Variant::kae, 32);
    a.latent = 9;
    CHECK_THROWS_AS(a.validate(), ConfigError);
    const auto round = nlohmann::json(ArchConfig::desk(Variant::cjmdd, 32)).get<ArchConfig>();
    CHECK(round.variant == Variant::cjmdd);
    CHECK(round.patch == 32);
}

TEST_CASE("output shapes and determinism") {
    for (auto v : {Variant::cjm, Variant::cjmdd, Variant::cjmnlb, Variant::kae}) {
        CAPTURE(to_string(v));
        Model a(ArchConfig::desk(v, 32), 5), b(ArchConfig::desk(v, 32), 5), c(ArchConfig::desk(v, 32), 6);
        const auto x = random_input({2, 3, 32, 32}, 1);
        const auto ya = a.predict(x), yb = b.predict(x), yc = c.predict(x);
        CHECK(ya.shape == nn::Shape{2, 32, 32});
        CHECK(ya.data == yb.data);
        CHECK(ya.data != yc.data);
        for (float f : ya.data) CHECK(std::isfinite(f));
        const auto r = rollout(a, random_input({3, 32, 32}, 2), 4);
        CHECK(r.shape == nn::Shape{4, 32, 32});
    }
    Model u(ArchConfig::desk(Variant::unfilter, 32), 1);
    CHECK(u.predict(random_input({2, 32, 32}, 3)).shape == nn::Shape{2, 32, 32});
}

TEST_CASE("Koopman layer starts as rotation blocks") {
    Model m(ArchConfig::full(Variant::kae), 0);
    const auto K = m.koopman_matrix();
    const auto expect = nn::koopman_rotation_blocks(10, nn::rotation_angles(10));
    REQUIRE(K.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(K[i] == doctest::Approx(expect[i]).epsilon(1e-6));
    const auto z = m.encode(random_input({1, 3, 128, 128}, 4));
    CHECK(z.shape == nn::Shape{1, 10});
    const auto kz = m.advance(z);
    double n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        n0 += z[i] * z[i];
        n1 += kz[i] * kz[i];
    }
    CHECK(n1 == doctest::Approx(n0).epsilon(1e-5));
    const auto lat = kae_latent_rollout(m, random_input({3, 128, 128}, 5), 2);
    CHECK(lat.shape == nn::Shape{2, 128, 128});
}

TEST_CASE("checkpoint restores identical predictions") {
    Model a(ArchConfig::desk(Variant::cjmnlb, 32), 9);
    const auto path = std::filesystem::temp_directory_path() / "ditchkit_model.dkpt";
    pipeline::save_model(path, a);
    auto b = pipeline::load_model(path);
    CHECK(b->arch().variant == Variant::cjmnlb);
    const auto x = random_input({1, 3, 32, 32}, 7);
    CHECK(a.predict(x).data == b->predict(x).data);
    std::filesystem::remove(path);
}

TEST_CASE("a few training steps reduce the loss on a fixed batch") {
    for (auto v : {Variant::cjm, Variant::kae}) {
        CAPTURE(to_string(v));
        Model m(ArchConfig::desk(v, 16), 3);
        const auto seq = random_input({4, 4, 16, 16}, 8);
        nn::AdamConfig adam;
        adam.eps = 1e-12;
        m.params().zero_grad();
        const double first = m.accumulate_gradients(seq).total;
        double last = first;
        for (int i = 0; i < 30; ++i) {
            nn::adam_step(m.params(), adam);
            m.params().zero_grad();
            last = m.accumulate_gradients(seq).total;
        }
        CHECK(last < first);
    }
}
