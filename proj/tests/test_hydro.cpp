#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "ditchkit/error.hpp"
#include "ditchkit/hydro.hpp"

using namespace ditchkit;

TEST_CASE("pile-up matches the exact-circle oracle") {
    const auto s = geometry::build_circular_section(1.0, 4001);
    struct Case {
        double T0, k, T;
    };
    // brentq on the exact circle, tests/oracles
    for (auto c : {Case{0.2, 1.0, 0.342509279452}, Case{0.05, 1.0, 0.083819187324}, Case{0.3, 0.5, 0.379300569373},
                   Case{0.1, 1.5, 0.261564639136}}) {
        const auto r = hydro::pileup_solve(s, c.T0, c.k);
        CHECK(r.T == doctest::Approx(c.T).epsilon(1e-4));
        CHECK(r.T >= c.T0);
    }
}

TEST_CASE("pile-up edge cases") {
    const auto s = geometry::build_circular_section(1.0, 201);
    CHECK(hydro::pileup_solve(s, 0.0, 1.0).T == 0.0);
    CHECK(hydro::pileup_solve(s, -0.3, 1.0).c == 0.0);
    CHECK(hydro::pileup_solve(s, 0.2, 0.0).T == doctest::Approx(0.2));
    CHECK_THROWS_AS(hydro::pileup_solve(s, std::nan(""), 1.0), SolverError);
    // fixed point is idempotent
    const auto r = hydro::pileup_solve(s, 0.25, 1.0);
    const auto p = s.props(r.T);
    CHECK(std::abs(0.25 + 0.6 * p.A / p.c - r.T) < 1e-10);
}

TEST_CASE("substantial derivative") {
    CHECK(hydro::substantial_derivative(2.0, 1.0, 0.5, 10.0, 0.5, 0.1) == doctest::Approx(10.0 + 10.0));
    CHECK(hydro::substantial_derivative(1.0, 1.0, 1.0, 50.0, 0.3, 1e-3) == 0.0);
}

TEST_CASE("immersion velocity") {
    hydro::FrameHistory h;
    h.now = {0.1, 0.1, 0.0, 0.0};
    CHECK_FALSE(hydro::immersion_velocity(h, 1.0, 1.0, 1.0).has_value());
    // steady wedge-like growth without pile-up change: V = (dA/dt) / c
    h.now = {0.2, 0.2, 0.5, 0.10};
    h.prev = {0.1, 0.1, 0.4, 0.06};
    h.upstream_prev = h.prev;
    CHECK(*hydro::immersion_velocity(h, 0.0, 1.0, 0.01) == doctest::Approx(0.04 / 0.01 / 0.5 - 0.0));
}

TEST_CASE("section force closed form") {
    hydro::SectionKinematics k{1.0, 2.0, -3.0, 0.0, 0.5};
    CHECK(hydro::section_force(k, 1000.0, 1.0, 9.81, 0.1) == doctest::Approx(589.796326794896).epsilon(1e-12));
    k.V = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(hydro::section_force(k, 1000.0, 1.0, 9.81, 0.1), SolverError);
}

TEST_CASE("panel pressure equals the panel mean of the point pressure") {
    const hydro::SectionKinematics k{1.0, 3.0, -2.0, 0.5, 1.0};
    // scipy quad of the pointwise law over each panel, tests/oracles
    const std::vector<double> edges{0.0, 0.1, 0.2, 0.5, 0.9, 1.2};
    const std::vector<double> zeta(5, 0.0);
    std::vector<double> p(5);
    hydro::panel_pressure(k, 1000.0, 1.0, 9.81, edges, zeta, p);
    CHECK(p[0] == doctest::Approx(-494.150331298821).epsilon(1e-10));
    CHECK(p[2] == doctest::Approx(-253.110316885270).epsilon(1e-10));
    CHECK(p[4] == doctest::Approx(2059.381036054011).epsilon(1e-10));

    hydro::PressureOptions floor;
    floor.floor_dynamic = true;
    hydro::panel_pressure(k, 1000.0, 1.0, 9.81, edges, zeta, p, floor);
    CHECK(p[0] == 0.0);
    CHECK(p[4] > 0.0);
    hydro::PressureOptions cap;
    cap.cap = 1000.0;
    hydro::panel_pressure(k, 1000.0, 1.0, 9.81, edges, zeta, p, cap);
    CHECK(p[4] == 1000.0);
}

TEST_CASE("panel pressures integrate to the dynamic section force") {
    const hydro::SectionKinematics k{0.8, 2.5, -4.0, 0.7, 2 * 0.8 * 0.7};
    std::vector<double> y;
    for (int j = 0; j <= 40; ++j) y.push_back(1.2 * j / 40.0);
    const auto edges = hydro::panel_edges(y);
    CHECK(edges.size() == y.size() + 1);
    std::vector<double> p(y.size()), zeta(y.size(), 0.0);
    hydro::panel_pressure(k, 1025.0, 1.0, 9.81, edges, zeta, p);
    double sum = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) sum += p[j] * (edges[j + 1] - edges[j]);
    const double fz_dyn = hydro::section_force(k, 1025.0, 1.0, 9.81, 0.0);
    CHECK(sum == doctest::Approx(-fz_dyn).epsilon(1e-10));
}

TEST_CASE("pointwise pressure") {
    const hydro::SectionKinematics k{1.0, 0.0, 1.0, 0.0, 0.0};
    const std::vector<double> y{0.0, 0.6, 1.0, 1.5}, zeta{1.0, 0.2, 0.0, -0.3};
    std::vector<double> p(4);
    hydro::pressure_distribution(k, 1000.0, 1.0, 10.0, y, zeta, p);
    CHECK(p[0] == doctest::Approx(1000.0 * 1.0 + 1000.0 * 10.0 * 1.0));
    CHECK(p[1] == doctest::Approx(1000.0 * 0.8 + 1000.0 * 10.0 * 0.2));
    CHECK(p[2] == 0.0);
    CHECK(p[3] == 0.0);
    std::vector<double> wrong(3);
    CHECK_THROWS_AS(hydro::pressure_distribution(k, 1000.0, 1.0, 10.0, y, zeta, wrong), ShapeError);
}
