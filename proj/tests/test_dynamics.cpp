#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ditchkit/dynamics.hpp"
#include "ditchkit/error.hpp"

using namespace ditchkit;
using dynamics::Mat3;
using dynamics::Vec3;

namespace {

geometry::FuselageProfile cylinder(double L, double R) {
    geometry::FuselageProfile p;
    p.points = {{0.0, R, 0.0}, {L, R, 0.0}};
    return p;
}

}  // namespace

TEST_CASE("free fall follows the parabola") {
    const auto mesh = geometry::build_fuselage_mesh(cylinder(10.0, 1.0), 20, 16);
    auto s = geometry::d150_scenario(60.0, 1.0);
    s.h0 = 50.0;
    s.t_end = 1.0;
    s.dt = 1e-2;
    const auto hist = dynamics::simulate(s, mesh);
    const auto& s0 = hist.motion.front().state;
    CHECK_FALSE(hist.impact_step.has_value());
    for (const auto& m : hist.motion) {
        const double t = m.t;
        CHECK(std::abs(m.state.z - (s0.z - s.w0 * t - 0.5 * s.g * t * t)) < 1e-9);
        CHECK(std::abs(m.state.x - (s0.x + s.u0 * t)) < 1e-9);
        CHECK(m.state.theta == doctest::Approx(s0.theta));
        CHECK_FALSE(m.wetted);
    }
}

TEST_CASE("initial state sits h0 above the water") {
    const auto mesh = geometry::build_fuselage_mesh(cylinder(10.0, 1.0), 20, 16);
    auto s = geometry::d150_scenario(60.0, 1.5);
    s.pitch0_deg = 0.0;
    s.cog_from_nose = 5.0;
    s.cog_above_keel = 0.7;
    s.h0 = 0.2;
    const auto st = dynamics::initial_state(s, mesh);
    CHECK(st.z == doctest::Approx(0.9));
    CHECK(st.w == doctest::Approx(-1.5));
    CHECK(st.u == doctest::Approx(60.0));
}

TEST_CASE("uniform cylinder added mass") {
    const double L = 8.0, c = 0.75, rho = 1000.0;
    const auto mesh = geometry::build_fuselage_mesh(cylinder(L, 1.0), 41, 16);
    dynamics::WettedState wet(mesh.frames.size());
    for (auto& f : wet) {
        f.wetted = true;
        f.c = c;
    }
    const Mat3 MA = dynamics::added_mass_matrix(mesh, wet, L / 2, rho);
    CHECK(MA(1, 1) == doctest::Approx(rho * std::numbers::pi * c * c * L / 2).epsilon(1e-12));
    CHECK(std::abs(MA(1, 2)) < 1e-9 * MA(1, 1));
    CHECK(std::abs(MA(2, 1)) < 1e-9 * MA(1, 1));
    CHECK(MA(2, 2) == doctest::Approx(rho * std::numbers::pi * c * c / 2 * std::pow(L, 3) / 12).epsilon(2e-3));
    CHECK(MA(0, 0) == 0.0);
    CHECK(MA(0, 1) == 0.0);
    CHECK(MA.isApprox(MA.transpose()));
}

TEST_CASE("added-mass fixed point on a scripted load") {
    const Mat3 M = 2.0 * Mat3::Identity();
    const Vec3 f0(1.0, 2.0, 3.0);
    auto loads = [&](const Vec3& a) {
        return dynamics::TrialLoads{f0 - 0.3 * a, 0.5 * Mat3::Identity()};
    };
    const auto r = dynamics::solve_acceleration(M, loads, Vec3::Zero());
    CHECK((r.acc - f0 / 2.3).norm() < 1e-6);
    CHECK(r.iterations >= 2);

    auto plain = [&](const Vec3&) { return dynamics::TrialLoads{f0, Mat3::Zero()}; };
    const auto p = dynamics::solve_acceleration(M, plain, Vec3::Zero());
    CHECK((p.acc - f0 / 2.0).norm() < 1e-14);
}

TEST_CASE("non-converging iteration throws") {
    const Mat3 M = Mat3::Identity();
    auto loads = [](const Vec3& a) { return dynamics::TrialLoads{-3.0 * a + Vec3::Ones(), Mat3::Zero()}; };
    dynamics::StepOptions o;
    o.max_iterations = 10;
    CHECK_THROWS_AS(dynamics::solve_acceleration(M, loads, Vec3::Zero(), o), SolverError);
}

TEST_CASE("airborne step without aero is pure gravity") {
    const auto mesh = geometry::build_fuselage_mesh(cylinder(10.0, 1.0), 20, 16);
    auto s = geometry::d150_scenario(60.0, 1.0);
    s.h0 = 5.0;
    const auto ctx = dynamics::SolverContext::from(s, mesh);
    const auto st = dynamics::initial_state(s, mesh);
    const auto r = dynamics::step(st, mesh, {}, ctx);
    CHECK(r.acc(0) == doctest::Approx(0.0));
    CHECK(r.acc(1) == doctest::Approx(-s.g));
    CHECK(r.acc(2) == doctest::Approx(0.0));
    CHECK_FALSE(r.loads.any_wetted());
}

TEST_CASE("level flight with lift at trim stays dry") {
    const auto mesh = geometry::build_fuselage_mesh(cylinder(10.0, 1.0), 20, 16);
    auto s = geometry::d150_scenario(60.0, 0.0);
    s.h0 = 1.0;
    s.t_end = 1.0;
    s.aero.enabled = true;
    const auto hist = dynamics::simulate(s, mesh);
    CHECK_FALSE(hist.impact_step.has_value());
    CHECK(hist.motion.back().state.z == doctest::Approx(hist.motion.front().state.z).epsilon(1e-9));
}

TEST_CASE("D150 impact produces loads and a bounded trajectory") {
    const auto mesh = geometry::build_fuselage_mesh(geometry::d150_profile(), 64, 48);
    auto s = geometry::d150_scenario(75.0, 2.0);
    s.t_end = 1.0;
    const auto hist = dynamics::simulate(s, mesh, {10, true});
    REQUIRE(hist.impact_step.has_value());
    CHECK_FALSE(hist.aborted.has_value());
    CHECK(hist.frames.front().step == *hist.impact_step);
    float peak = 0.0f;
    for (const auto& f : hist.frames)
        for (float p : f.pressure) {
            CHECK(std::isfinite(p));
            peak = std::max(peak, p);
        }
    CHECK(peak > 1e4f);
    for (const auto& m : hist.motion) CHECK(std::isfinite(m.state.z));
}
