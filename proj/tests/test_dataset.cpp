#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "ditchkit/dataset.hpp"
#include "ditchkit/error.hpp"
#include "ditchkit/nn/rng.hpp"

using namespace ditchkit;
using namespace ditchkit::dataset;

namespace {

// 4 x 3 grid whose patch peak follows `peaks`, recorded every solver step from impact at step 3.
dynamics::LoadHistory synthetic_history(const std::vector<float>& peaks) {
    dynamics::LoadHistory h;
    h.n_frames = 4;
    h.n_arc = 3;
    h.dt = 1e-3;
    h.impact_step = 3;
    for (std::size_t k = 0; k < peaks.size(); ++k) {
        dynamics::PressureFrame f;
        f.step = 3 + k;
        f.pressure.assign(12, 0.0f);
        f.pressure[1 * 3 + 1] = peaks[k];
        f.pressure[0] = 1e9f;  // outside the window
        h.frames.push_back(f);
    }
    return h;
}

std::filesystem::path tmp_file(const char* name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("blur of an impulse") {
    std::vector<float> in(25, 0.0f), out(25);
    in[12] = 16.0f;
    gaussian_blur3(in, 5, 5, out);
    const float expect[9] = {1, 2, 1, 2, 4, 2, 1, 2, 1};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(out[(i + 1) * 5 + j + 1] == doctest::Approx(expect[i * 3 + j]));
    CHECK(std::accumulate(out.begin(), out.end(), 0.0) == doctest::Approx(16.0));
}

TEST_CASE("blur of a corner impulse") {
    std::vector<float> in(16, 0.0f), out(16);
    in[0] = 9.0f;
    gaussian_blur3(in, 4, 4, out);
    CHECK(out[0] == doctest::Approx(4.0));
    CHECK(out[1] == doctest::Approx(2.0));
    CHECK(out[4] == doctest::Approx(2.0));
    CHECK(out[5] == doctest::Approx(1.0));
}

TEST_CASE("blur keeps the sum, bounds the maximum and keeps interior constants") {
    nn::Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t H = 1 + rng.index(12), W = 1 + rng.index(12);
        std::vector<float> in(H * W), out(H * W);
        for (auto& v : in) v = static_cast<float>(rng.uniform() * 1000.0);
        gaussian_blur3(in, H, W, out);
        const double s_in = std::accumulate(in.begin(), in.end(), 0.0);
        const double s_out = std::accumulate(out.begin(), out.end(), 0.0);
        CHECK(std::abs(s_out - s_in) <= 1e-6 * s_in);
        CHECK(*std::max_element(out.begin(), out.end()) <= *std::max_element(in.begin(), in.end()) * (1 + 1e-6));
    }
    std::vector<float> in(64, 3.0f), out(64);
    gaussian_blur3(in, 8, 8, out);
    for (std::size_t i = 2; i < 6; ++i)
        for (std::size_t j = 2; j < 6; ++j) CHECK(out[i * 8 + j] == doctest::Approx(3.0));
    CHECK_THROWS_AS(gaussian_blur3(in, 8, 7, out), ShapeError);
}

TEST_CASE("patch extraction trims at the stop threshold") {
    std::vector<float> peaks{1e3f, 7e3f, 2e4f, 9e3f, 6e3f, 4e3f, 8e3f, 1e4f};
    const auto h = synthetic_history(peaks);
    const Window w{1, 1, 2, 2};
    const auto rec = extract_patches(h, w, {1, 5e3});
    CHECK(rec.n_t == 5);
    CHECK(rec.H == 2);
    CHECK(rec.W == 2);
    CHECK(rec.origin_frame == 1);
    CHECK(rec.data.size() == 5 * 4);
    CHECK(rec.frame(2)[0] == doctest::Approx(2e4));
    CHECK(rec.max_value() == doctest::Approx(2e4));

    const auto every2 = extract_patches(h, w, {2, 5e3});
    CHECK(every2.n_t == 4);
    CHECK(every2.frame(1)[0] == doctest::Approx(2e4));
}

TEST_CASE("patch extraction corner cases") {
    const auto quiet = synthetic_history(std::vector<float>(12, 0.0f));
    const auto rec = extract_patches(quiet, {1, 1, 2, 2}, {1, 5e3});
    CHECK(rec.n_t == 0);
    CHECK(rec.data.empty());
    const auto h = synthetic_history({1e4f});
    CHECK_THROWS_AS(extract_patches(h, {3, 0, 2, 2}), ConfigError);
    CHECK_THROWS_AS(extract_patches(h, {0, 2, 2, 2}), ConfigError);
    dynamics::LoadHistory dry;
    dry.n_frames = 4;
    dry.n_arc = 3;
    CHECK(extract_patches(dry, {0, 0, 2, 2}).n_t == 0);
}

TEST_CASE("window selection maximises the summed load") {
    std::vector<double> field(6 * 5, 1.0);
    field[3 * 5 + 4] = 50.0;
    field[4 * 5 + 4] = 50.0;
    const auto w = select_window(field, 6, 5, 2, 2);
    CHECK(w.frame0 == 3);
    CHECK(w.arc0 == 3);
    std::vector<double> flat(6 * 5, 1.0);
    const auto t = select_window(flat, 6, 5, 2, 2);
    CHECK(t.frame0 == 0);
    CHECK(t.arc0 == 0);
    CHECK_THROWS_AS(select_window(flat, 6, 5, 7, 2), ConfigError);
}

TEST_CASE("normalisation round trip") {
    std::vector<float> x{-20.0f, 0.0f, 100.0f, 380.0f};
    const auto orig = x;
    normalize(x, -20.0, 380.0);
    CHECK(x[0] == doctest::Approx(0.0));
    CHECK(x[3] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(0.05));
    denormalize(x, -20.0, 380.0);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == doctest::Approx(orig[i]).epsilon(1e-6));
    CHECK_THROWS_AS(normalize(x, 1.0, 1.0), ConfigError);
}

TEST_CASE("sweep is deterministic and keeps val/test inside the training hull") {
    SweepConfig cfg;
    cfg.n_train = 40;
    cfg.n_val = 5;
    cfg.n_test = 7;
    cfg.seed = 3;
    const auto a = sweep(cfg), b = sweep(cfg);
    REQUIRE(a.train.size() == 40);
    CHECK(a.val.size() == 5);
    CHECK(a.test.size() == 7);
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].u0 == b.train[i].u0);
        CHECK(a.train[i].w0 == b.train[i].w0);
        CHECK(a.train[i].u0 >= cfg.u_min);
        CHECK(a.train[i].u0 <= cfg.u_max);
    }
    for (const auto* split : {&a.val, &a.test})
        for (const auto& v : *split) {
            CHECK(v.u0 > cfg.u_min);
            CHECK(v.u0 < cfg.u_max);
            CHECK(v.w0 > cfg.w_min);
            CHECK(v.w0 < cfg.w_max);
        }
    cfg.seed = 4;
    const auto c = sweep(cfg);
    CHECK(c.train.back().u0 != a.train.back().u0);

    SweepConfig one;
    one.n_train = 1;
    one.n_val = 1;
    one.n_test = 0;
    const auto m = sweep(one);
    CHECK(m.train[0].u0 == doctest::Approx(0.5 * (one.u_min + one.u_max)));
    CHECK(m.val[0].w0 == doctest::Approx(0.5 * (one.w_min + one.w_max)));
    CHECK(m.test.empty());
    one.n_train = 0;
    CHECK_THROWS_AS(sweep(one), ConfigError);
}

TEST_CASE("sequence index") {
    std::vector<CaseRecord> cases(2);
    cases[0].n_t = 5;
    cases[1].n_t = 3;
    const auto idx = sequence_index(cases, 3);
    CHECK(idx.size() == 2);
    CHECK(idx[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(idx[1] == std::pair<std::size_t, std::size_t>{0, 1});
}

TEST_CASE("DLF round trip and corruption") {
    Dataset d;
    d.x_min = -5.0;
    d.x_max = 7.5;
    for (std::size_t n : {5u, 7u}) {
        CaseRecord c;
        c.u0 = 70.0 + n;
        c.w0 = 1.0;
        c.pitch0 = 6.0;
        c.n_t = n;
        c.H = 3;
        c.W = 2;
        c.origin_frame = 11;
        c.origin_arc = 4;
        c.data.resize(n * 6);
        std::iota(c.data.begin(), c.data.end(), 0.5f);
        d.cases.push_back(c);
    }
    const auto path = tmp_file("ditchkit_test.dlf");
    write_dlf(d, path);
    const auto r = read_dlf(path);
    REQUIRE(r.cases.size() == 2);
    CHECK(r.x_min == -5.0);
    CHECK(r.x_max == 7.5);
    CHECK(r.cases[0].n_t == 5);
    CHECK(r.cases[1].n_t == 7);
    CHECK(r.cases[1].u0 == 77.0);
    CHECK(r.cases[1].origin_frame == 11);
    CHECK(r.cases[1].data == d.cases[1].data);

    auto bytes = [&] {
        std::ifstream in(path, std::ios::binary);
        return std::vector<char>(std::istreambuf_iterator<char>(in), {});
    }();
    auto write = [&](const std::vector<char>& b) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(b.data(), static_cast<std::streamsize>(b.size()));
    };
    auto errc = [&] {
        try {
            read_dlf(path);
        } catch (const FormatError& e) {
            return e.code();
        }
        FAIL("corrupt file was accepted");
        return FormatErrc::io;
    };

    auto bad = bytes;
    bad[0] = 'X';
    write(bad);
    CHECK(errc() == FormatErrc::bad_magic);
    bad = bytes;
    bad[4] = 9;
    write(bad);
    CHECK(errc() == FormatErrc::version_mismatch);
    bad = bytes;
    bad.resize(bad.size() / 2);
    write(bad);
    CHECK(errc() == FormatErrc::truncated);
    bad = bytes;
    bad[bad.size() - 22] ^= 0x5a;  // last payload value
    write(bad);
    CHECK(errc() == FormatErrc::checksum_mismatch);
    std::filesystem::remove(path);
    CHECK(errc() == FormatErrc::io);
}
