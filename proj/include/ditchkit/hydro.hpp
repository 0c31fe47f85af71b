#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ditchkit/geometry.hpp"

namespace ditchkit::hydro {

/// Wetting state of one section including the waterline pile-up.
struct PileupResult {
    double T = 0.0;  ///< submergence including pile-up, m
    double c = 0.0;
    double A = 0.0;
    int iterations = 0;
    bool used_bisection = false;
};

inline constexpr double kPileupCoefficient = 0.6;

/// Solves T = T0 + 0.6 k A(T) / c(T) by fixed-point iteration, falling back to
/// bisection. Throws SolverError tagged with `frame` if both fail.
PileupResult pileup_solve(const geometry::CrossSection& section, double T0, double k, int frame = -1);

/// Substantial derivative D/Dt = d/dt + u d/dxi, xi pointing downstream (nose to tail).
///
/// Backward difference in time, first-order upwind in space using the nose-side
/// neighbour of the previous step.
double substantial_derivative(double now, double prev, double upstream_prev, double u, double dx,
                              double dt) noexcept;

struct WetSample {
    double T0 = 0.0;
    double T = 0.0;
    double c = 0.0;
    double A = 0.0;
};

/// Wetting quantities at one frame: this step, the previous step, and the
/// upstream neighbour at the previous step.
struct FrameHistory {
    WetSample now;
    WetSample prev;
    WetSample upstream_prev;
};

inline constexpr double kMinHalfBreadth = 1e-9;

/// V = (1/c) DA/Dt - D(T - T0)/Dt. Empty when c is below kMinHalfBreadth; the
/// caller then substitutes the keel's kinematic sink rate.
std::optional<double> immersion_velocity(const FrameHistory& h, double u, double dx, double dt) noexcept;

/// Section kinematics entering the force and pressure laws.
struct SectionKinematics {
    double c = 0.0;
    double V = 0.0;      ///< immersion velocity, positive into the water
    double DV_Dt = 0.0;
    double Dc_Dt = 0.0;
    double Dc2_Dt = 0.0;
};

/// Vertical force per unit length on one half-section, positive into the water:
/// fz = -k rho (pi/4) (c^2 DV/Dt + V Dc^2/Dt) - rho g A0.
double section_force(const SectionKinematics& s, double rho, double k, double g, double A0);

struct PressureOptions {
    std::optional<double> cap;  ///< upper bound on the total pressure, Pa
    bool floor_dynamic = false; ///< clip negative dynamic pressure to zero
};

/// Pressure at lateral offsets `y` of a wetted section. `zeta0` is the depth of
/// each point below the undisturbed surface. Points with |y| >= c carry only the
/// hydrostatic part.
void pressure_distribution(const SectionKinematics& s, double rho, double k, double g,
                           std::span<const double> y, std::span<const double> zeta0, std::span<double> out,
                           const PressureOptions& opts = {});

/// Pressure averaged over arc panels. Panel j covers the lateral interval
/// [edges[j], edges[j+1]]; the dynamic terms are integrated in closed form over
/// its wetted part, so the waterline singularity stays bounded and the panel
/// sum of p * width reproduces the section force exactly.
void panel_pressure(const SectionKinematics& s, double rho, double k, double g, std::span<const double> edges,
                    std::span<const double> zeta0, std::span<double> out, const PressureOptions& opts = {});

/// Panel edges halfway between consecutive arc offsets, closed by the first and last offset.
std::vector<double> panel_edges(std::span<const double> y);

}  // namespace ditchkit::hydro
