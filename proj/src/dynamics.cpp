#include "ditchkit/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ditchkit/error.hpp"

namespace ditchkit::dynamics {

namespace {

double trapezoid_weight(std::size_t i, std::size_t n, double dx) { return (i == 0 || i + 1 == n) ? 0.5 * dx : dx; }

hydro::WetSample sample_of(const WettedFrame& f) { return {f.T0, f.T, f.c, f.A}; }

}  // namespace

SolverContext SolverContext::from(const geometry::Scenario& s, const geometry::HullMesh& mesh) {
    s.validate();
    if (mesh.frames.empty()) throw ConfigError("empty mesh");
    SolverContext ctx;
    ctx.rho = s.rho_water;
    ctx.g = s.g;
    ctx.k = s.k_factor;
    ctx.dt = s.dt;
    ctx.cog_x = mesh.frames.back().x - s.cog_from_nose;
    ctx.cog_z = s.cog_above_keel;
    ctx.mass.M = Vec3(s.mass, s.mass, s.inertia_yy).asDiagonal();
    ctx.pressure.cap = s.p_cap;
    ctx.pressure.floor_dynamic = s.pressure_floor;
    ctx.aero_enabled = s.aero.enabled;
    ctx.aero_weight = s.mass * s.g;
    ctx.aero_slope = s.aero.lift_slope;
    ctx.aero_arm = s.aero.moment_arm;
    ctx.theta_trim = s.aero.theta_trim.value_or(s.pitch0_deg * std::numbers::pi / 180.0);
    ctx.u_ref = s.aero.u_ref.value_or(s.u0);
    return ctx;
}

bool LoadResult::any_wetted() const {
    return std::any_of(wetted.begin(), wetted.end(), [](const WettedFrame& f) { return f.wetted; });
}

Vec3 aero_lift(const BodyState& state, const SolverContext& ctx) {
    if (!ctx.aero_enabled) return Vec3::Zero();
    const double speed_ratio = state.u / ctx.u_ref;
    const double lift = ctx.aero_weight * (1.0 + ctx.aero_slope * (state.theta - ctx.theta_trim)) * speed_ratio * speed_ratio;
    return {0.0, lift, lift * ctx.aero_arm};
}

LoadResult assemble_loads(const geometry::HullMesh& mesh, const BodyState& state, const WettedState& prev,
                          const SolverContext& ctx) {
    const std::size_t n = mesh.frames.size();
    const std::size_t n_arc = mesh.n_arc;
    const double ct = std::cos(state.theta);
    const double st = std::sin(state.theta);
    const double u_axial = state.u * ct + state.w * st;
    const bool have_prev = prev.size() == n;

    LoadResult out;
    out.wetted.assign(n, WettedFrame{});
    out.pressure.assign(n * n_arc, 0.0);
    WettedState& cur = out.wetted;

    for (std::size_t i = 0; i < n; ++i) {
        const auto& fr = mesh.frames[i];
        const double lever = fr.x - ctx.cog_x;
        const double keel = state.z + lever * st + (fr.keel_z - ctx.cog_z) * ct;
        if (keel >= 0.0) continue;
        WettedFrame& w = cur[i];
        w.wetted = true;
        w.T0 = -keel / ct;
        const auto pile = hydro::pileup_solve(fr.section, w.T0, ctx.k, static_cast<int>(i));
        w.T = pile.T;
        w.c = pile.c;
        w.A = pile.A;
        w.A0 = fr.section.props(w.T0).A;
    }

    auto prev_of = [&](std::size_t j) -> const WettedFrame& { return have_prev ? prev[j] : cur[j]; };
    auto upstream = [&](std::size_t i) { return i + 1 < n ? i + 1 : i; };

    for (std::size_t i = 0; i < n; ++i) {
        WettedFrame& w = cur[i];
        if (!w.wetted) continue;
        const hydro::FrameHistory h{sample_of(w), sample_of(prev_of(i)), sample_of(prev_of(upstream(i)))};
        if (auto V = hydro::immersion_velocity(h, u_axial, mesh.dx, ctx.dt)) {
            w.V = *V;
        } else {
            const double lever = mesh.frames[i].x - ctx.cog_x;
            w.V = -(-state.u * st + state.w * ct + state.q * lever);
            w.fallback = true;
        }
    }

    std::vector<double> y(n_arc), zeta0(n_arc), edges;
    for (std::size_t i = 0; i < n; ++i) {
        WettedFrame& w = cur[i];
        if (!w.wetted) continue;
        const std::size_t up = upstream(i);
        // A frame that was dry has no meaningful previous immersion velocity; a
        // zero gradient is used instead of the jump from zero.
        const WettedFrame& p = prev_of(i);
        const WettedFrame& pu = prev_of(up);
        const double V_prev = (have_prev && p.wetted) ? p.V : w.V;
        const double V_up = (have_prev && up != i && pu.wetted) ? pu.V : V_prev;
        w.DV_Dt = hydro::substantial_derivative(w.V, V_prev, V_up, u_axial, mesh.dx, ctx.dt);
        w.Dc_Dt = hydro::substantial_derivative(w.c, p.c, pu.c, u_axial, mesh.dx, ctx.dt);
        w.Dc2_Dt = hydro::substantial_derivative(w.c * w.c, p.c * p.c, pu.c * pu.c, u_axial, mesh.dx, ctx.dt);

        // Shrinking wetted breadth means the flow has separated; its momentum is not recovered.
        hydro::SectionKinematics kin{w.c, w.V, w.DV_Dt, std::max(w.Dc_Dt, 0.0), std::max(w.Dc2_Dt, 0.0)};
        w.fz = hydro::section_force(kin, ctx.rho, ctx.k, ctx.g, w.A0);
        const double hydrostatic = -ctx.rho * ctx.g * w.A0;
        if (w.fz > hydrostatic) {
            // suction during exit is not modelled
            w.fz = hydrostatic;
            w.suppressed = true;
            kin = hydro::SectionKinematics{w.c, 0.0, 0.0, 0.0, 0.0};
        }

        const auto& arc = mesh.frames[i].section.arc();
        for (std::size_t j = 0; j < n_arc; ++j) {
            y[j] = arc[j].y;
            zeta0[j] = (w.T0 - arc[j].z) * ct;
        }
        edges = hydro::panel_edges(y);
        hydro::panel_pressure(kin, ctx.rho, ctx.k, ctx.g, edges, zeta0,
                              std::span<double>(out.pressure.data() + i * n_arc, n_arc), ctx.pressure);
    }

    double normal = 0.0;
    double moment = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!cur[i].wetted) continue;
        const double f = -2.0 * cur[i].fz * trapezoid_weight(i, n, mesh.dx);
        normal += f;
        moment += f * (mesh.frames[i].x - ctx.cog_x);
    }
    if (!std::isfinite(normal) || !std::isfinite(moment)) throw SolverError("integrated load is not finite");
    out.normal_force = normal;
    out.hydro = {-normal * st, normal * ct, moment};
    out.aero = aero_lift(state, ctx);
    return out;
}

Mat3 added_mass_matrix(const geometry::HullMesh& mesh, const WettedState& wetted, double cog_x, double rho,
                       double k) {
    Mat3 MA = Mat3::Zero();
    const std::size_t n = std::min(mesh.frames.size(), wetted.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!wetted[i].wetted) continue;
        const double c = wetted[i].c;
        const double mA = k * rho * std::numbers::pi * c * c / 2.0 * trapezoid_weight(i, mesh.frames.size(), mesh.dx);
        const double d = mesh.frames[i].x - cog_x;
        MA(1, 1) += mA;
        MA(1, 2) += mA * d;
        MA(2, 2) += mA * d * d;
    }
    MA(2, 1) = MA(1, 2);
    return MA;
}

IterationResult solve_acceleration(const Mat3& M, const std::function<TrialLoads(const Vec3&)>& loads,
                                   const Vec3& guess, const StepOptions& opts) {
    Vec3 acc = guess;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const TrialLoads tl = loads(acc);
        const Vec3 next = (M + tl.MA).ldlt().solve(tl.force + tl.MA * acc);
        if (!next.allFinite()) throw SolverError("rigid-body iteration produced non-finite acceleration");
        const double change = (next - acc).cwiseAbs().maxCoeff();
        acc = next;
        if (change < opts.tolerance) return {acc, it};
    }
    throw SolverError("rigid-body iteration did not converge in " + std::to_string(opts.max_iterations) +
                      " iterations");
}

BodyState advance(const BodyState& s, const Vec3& acc, double dt) {
    BodyState n = s;
    n.u = s.u + dt * acc(0);
    n.w = s.w + dt * acc(1);
    n.q = s.q + dt * acc(2);
    n.x = s.x + 0.5 * dt * (s.u + n.u);
    n.z = s.z + 0.5 * dt * (s.w + n.w);
    n.theta = s.theta + 0.5 * dt * (s.q + n.q);
    n.t = s.t + dt;
    return n;
}

StepResult step(const BodyState& state, const geometry::HullMesh& mesh, const WettedState& prev,
                const SolverContext& ctx, const Vec3& acc_guess, const StepOptions& opts) {
    if (!(ctx.dt > 0.0)) throw ConfigError("step: dt must be positive");
    const Vec3 gravity(0.0, -ctx.mass.M(1, 1) * ctx.g, 0.0);
    LoadResult last;
    auto trial = [&](const Vec3& acc) {
        last = assemble_loads(mesh, advance(state, acc, ctx.dt), prev, ctx);
        return TrialLoads{last.total() + gravity, added_mass_matrix(mesh, last.wetted, ctx.cog_x, ctx.rho, ctx.k)};
    };
    const IterationResult res = solve_acceleration(ctx.mass.M, trial, acc_guess, opts);
    StepResult out;
    out.state = advance(state, res.acc, ctx.dt);
    out.acc = res.acc;
    out.loads = std::move(last);
    out.iterations = res.iterations;
    if (!(std::abs(out.state.theta) < std::numbers::pi / 2.0))
        throw SolverError("pitch left the admissible range (-pi/2, pi/2)");
    return out;
}

BodyState initial_state(const geometry::Scenario& s, const geometry::HullMesh& mesh) {
    const SolverContext ctx = SolverContext::from(s, mesh);
    BodyState st;
    st.theta = s.pitch0_deg * std::numbers::pi / 180.0;
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& fr : mesh.frames) {
        const double rel = (fr.x - ctx.cog_x) * std::sin(st.theta) + (fr.keel_z - ctx.cog_z) * std::cos(st.theta);
        lowest = std::min(lowest, rel);
    }
    st.z = s.h0 - lowest;
    st.u = s.u0;
    st.w = -s.w0;
    return st;
}

namespace {

class Recorder {
public:
    Recorder(LoadHistory& h, const RecordOptions& opts) : h_(h), opts_(opts) {}

    void on_step(std::size_t n, const BodyState& state, const LoadResult& loads, int iterations) {
        const bool wetted = loads.any_wetted();
        if (!h_.impact_step && loads.hydro(1) > kImpactForce) h_.impact_step = n;
        if (h_.impact_step && was_wetted_ && !wetted) ++h_.surface_exits;
        was_wetted_ = wetted;
        h_.motion.push_back({state.t, state, loads.hydro, loads.aero, wetted, iterations});

        bool record = false;
        if (opts_.from_impact) {
            record = h_.impact_step && (n - *h_.impact_step) % opts_.stride == 0;
        } else {
            record = n % opts_.stride == 0;
        }
        if (!record) return;
        PressureFrame f;
        f.step = n;
        f.t = state.t;
        f.pressure.assign(loads.pressure.begin(), loads.pressure.end());
        f.fz.resize(loads.wetted.size());
        for (std::size_t i = 0; i < loads.wetted.size(); ++i) f.fz[i] = static_cast<float>(loads.wetted[i].fz);
        h_.frames.push_back(std::move(f));
    }

private:
    LoadHistory& h_;
    RecordOptions opts_;
    bool was_wetted_ = false;
};

LoadHistory make_history(const geometry::Scenario& s, const geometry::HullMesh& mesh, const RecordOptions& rec) {
    if (rec.stride == 0) throw ConfigError("record stride must be positive");
    LoadHistory h;
    h.dt = s.dt;
    h.n_frames = mesh.frames.size();
    h.n_arc = mesh.n_arc;
    h.record_stride = rec.stride;
    return h;
}

std::size_t step_count(const geometry::Scenario& s) {
    return static_cast<std::size_t>(std::ceil(s.t_end / s.dt - 1e-9));
}

}  // namespace

LoadHistory simulate(const geometry::Scenario& scenario, const geometry::HullMesh& mesh, const RecordOptions& rec) {
    const SolverContext ctx = SolverContext::from(scenario, mesh);
    LoadHistory h = make_history(scenario, mesh, rec);
    Recorder recorder(h, rec);

    BodyState state = initial_state(scenario, mesh);
    WettedState prev;
    Vec3 acc = Vec3::Zero();
    h.motion.push_back({0.0, state, Vec3::Zero(), Vec3::Zero(), false, 0});

    const std::size_t n_steps = step_count(scenario);
    for (std::size_t n = 1; n <= n_steps; ++n) {
        StepResult res;
        try {
            res = step(state, mesh, prev, ctx, acc);
        } catch (const SolverError& e) {
            h.aborted = "step " + std::to_string(n) + ": " + e.what();
            break;
        }
        state = res.state;
        acc = res.acc;
        recorder.on_step(n, state, res.loads, res.iterations);
        prev = std::move(res.loads.wetted);
    }
    return h;
}

LoadHistory simulate_guided(const geometry::Scenario& scenario, const geometry::HullMesh& mesh,
                            const RecordOptions& rec) {
    const SolverContext ctx = SolverContext::from(scenario, mesh);
    LoadHistory h = make_history(scenario, mesh, rec);
    Recorder recorder(h, rec);

    const BodyState start = initial_state(scenario, mesh);
    WettedState prev;
    h.motion.push_back({0.0, start, Vec3::Zero(), Vec3::Zero(), false, 0});

    const std::size_t n_steps = step_count(scenario);
    for (std::size_t n = 1; n <= n_steps; ++n) {
        BodyState s = start;
        s.t = scenario.dt * static_cast<double>(n);
        s.x = start.x + start.u * s.t;
        s.z = start.z + start.w * s.t;
        LoadResult loads;
        try {
            loads = assemble_loads(mesh, s, prev, ctx);
        } catch (const SolverError& e) {
            h.aborted = "step " + std::to_string(n) + ": " + e.what();
            break;
        }
        recorder.on_step(n, s, loads, 0);
        prev = std::move(loads.wetted);
    }
    return h;
}

}  // namespace ditchkit::dynamics
