#include "ditchkit/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ditchkit/error.hpp"

namespace ditchkit::hydro {

namespace {

constexpr int kMaxFixedPointIterations = 50;
constexpr double kFixedPointTol = 1e-12;
constexpr double kBisectionTol = 1e-13;

double area_over_breadth(const geometry::SectionProps& p) { return p.c > 1e-12 ? p.A / p.c : 0.0; }

}  // namespace

PileupResult pileup_solve(const geometry::CrossSection& section, double T0, double k, int frame) {
    if (!std::isfinite(T0) || !std::isfinite(k) || k < 0.0) throw SolverError("pile-up: non-finite input", frame);
    if (!(T0 > 0.0)) return {};

    const double gain = kPileupCoefficient * k;
    double T = T0;
    for (int it = 1; it <= kMaxFixedPointIterations; ++it) {
        const double next = T0 + gain * area_over_breadth(section.props(T));
        const double step = std::abs(next - T);
        T = next;
        if (step < kFixedPointTol) {
            const auto p = section.props(T);
            return {T, p.c, p.A, it, false};
        }
    }

    auto residual = [&](double t) { return t - T0 - gain * area_over_breadth(section.props(t)); };
    double lo = T0;
    double hi = T0 + gain * area_over_breadth(section.props(T0)) + 1e-6;
    int expansions = 0;
    while (residual(hi) <= 0.0) {
        hi = T0 + 2.0 * (hi - T0);
        if (++expansions > 200 || !std::isfinite(hi)) throw SolverError("pile-up: no bracket for bisection", frame);
    }
    int it = 0;
    while (hi - lo > kBisectionTol && it < 200) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0.0 ? hi : lo) = mid;
        ++it;
    }
    if (hi - lo > kBisectionTol) throw SolverError("pile-up: bisection did not converge", frame);
    T = 0.5 * (lo + hi);
    const auto p = section.props(T);
    return {T, p.c, p.A, kMaxFixedPointIterations + it, true};
}

double substantial_derivative(double now, double prev, double upstream_prev, double u, double dx,
                              double dt) noexcept {
    return (now - prev) / dt + u * (prev - upstream_prev) / dx;
}

std::optional<double> immersion_velocity(const FrameHistory& h, double u, double dx, double dt) noexcept {
    if (h.now.c < kMinHalfBreadth) return std::nullopt;
    const double DA = substantial_derivative(h.now.A, h.prev.A, h.upstream_prev.A, u, dx, dt);
    const double Dpile = substantial_derivative(h.now.T - h.now.T0, h.prev.T - h.prev.T0,
                                                h.upstream_prev.T - h.upstream_prev.T0, u, dx, dt);
    return DA / h.now.c - Dpile;
}

double section_force(const SectionKinematics& s, double rho, double k, double g, double A0) {
    const double fz = -k * rho * (std::numbers::pi / 4.0) * (s.c * s.c * s.DV_Dt + s.V * s.Dc2_Dt) - rho * g * A0;
    if (!std::isfinite(fz)) throw SolverError("section force is not finite");
    return fz;
}

void pressure_distribution(const SectionKinematics& s, double rho, double k, double g,
                           std::span<const double> y, std::span<const double> zeta0, std::span<double> out,
                           const PressureOptions& opts) {
    if (y.size() != zeta0.size() || y.size() != out.size())
        throw ShapeError("pressure_distribution: y, zeta0 and out must have equal length");
    const double c2 = s.c * s.c;
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double hydrostatic = rho * g * std::max(zeta0[j], 0.0);
        double dynamic = 0.0;
        const double r2 = c2 - y[j] * y[j];
        if (std::abs(y[j]) < s.c && r2 > 0.0) {
            const double root = std::sqrt(r2);
            dynamic = k * rho * s.DV_Dt * root + k * rho * s.V * s.c * s.Dc_Dt / root;
            if (opts.floor_dynamic && dynamic < 0.0) dynamic = 0.0;
        }
        double p = dynamic + hydrostatic;
        if (opts.cap && p > *opts.cap) p = *opts.cap;
        if (!std::isfinite(p)) throw SolverError("pressure is not finite");
        out[j] = p;
    }
}

namespace {

// Antiderivatives of sqrt(c^2 - y^2) and 1/sqrt(c^2 - y^2) on [0, c].
double semi_disc(double y, double c) {
    const double r = std::sqrt(std::max(c * c - y * y, 0.0));
    return 0.5 * (y * r + c * c * std::asin(std::clamp(y / c, -1.0, 1.0)));
}

double arcsine(double y, double c) { return std::asin(std::clamp(y / c, -1.0, 1.0)); }

}  // namespace

std::vector<double> panel_edges(std::span<const double> y) {
    std::vector<double> edges(y.size() + 1);
    if (y.empty()) return edges;
    edges.front() = y.front();
    for (std::size_t j = 1; j < y.size(); ++j) edges[j] = 0.5 * (y[j - 1] + y[j]);
    edges.back() = y.back();
    return edges;
}

void panel_pressure(const SectionKinematics& s, double rho, double k, double g, std::span<const double> edges,
                    std::span<const double> zeta0, std::span<double> out, const PressureOptions& opts) {
    if (edges.size() != out.size() + 1 || zeta0.size() != out.size())
        throw ShapeError("panel_pressure: expected n+1 edges and n depths for n panels");
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double lo = std::min(edges[j], edges[j + 1]);
        const double hi = std::max(edges[j], edges[j + 1]);
        double dynamic = 0.0;
        if (s.c > 0.0 && lo < s.c && hi > lo) {
            const double top = std::min(hi, s.c);
            const double i1 = semi_disc(top, s.c) - semi_disc(lo, s.c);
            const double i2 = arcsine(top, s.c) - arcsine(lo, s.c);
            dynamic = k * rho * (s.DV_Dt * i1 + s.V * s.c * s.Dc_Dt * i2) / (hi - lo);
            if (opts.floor_dynamic && dynamic < 0.0) dynamic = 0.0;
        } else if (s.c > 0.0 && lo < s.c && hi == lo) {
            // degenerate panel: fall back to the point value
            const double r = std::sqrt(s.c * s.c - lo * lo);
            dynamic = k * rho * (s.DV_Dt * r + s.V * s.c * s.Dc_Dt / r);
            if (opts.floor_dynamic && dynamic < 0.0) dynamic = 0.0;
        }
        double p = dynamic + rho * g * std::max(zeta0[j], 0.0);
        if (opts.cap && p > *opts.cap) p = *opts.cap;
        if (!std::isfinite(p)) throw SolverError("panel pressure is not finite");
        out[j] = p;
    }
}

}  // namespace ditchkit::hydro
