#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ditchkit/geometry.hpp"
#include "ditchkit/hydro.hpp"

namespace ditchkit::dynamics {

using Vec3 = Eigen::Vector3d;  ///< (surge, heave, pitch) components
using Mat3 = Eigen::Matrix3d;

/// Planar rigid-body state of the CoG. Heave is measured upward from the calm
/// water level, pitch is positive nose-up, `u` and `w` are world-frame rates.
struct BodyState {
    double x = 0.0;
    double z = 0.0;
    double theta = 0.0;
    double u = 0.0;
    double w = 0.0;
    double q = 0.0;
    double t = 0.0;

    Vec3 position() const { return {x, z, theta}; }
    Vec3 velocity() const { return {u, w, q}; }
};

struct MassMatrix {
    Mat3 M = Mat3::Identity();
    Mat3 MA = Mat3::Zero();
};

/// Per-frame hydrodynamic state of one time level.
struct WettedFrame {
    bool wetted = false;
    bool fallback = false;    ///< immersion velocity taken from keel kinematics
    bool suppressed = false;  ///< suction force removed (exit phase)
    double T0 = 0.0;
    double T = 0.0;
    double c = 0.0;
    double A = 0.0;
    double A0 = 0.0;
    double V = 0.0;
    double DV_Dt = 0.0;
    double Dc_Dt = 0.0;
    double Dc2_Dt = 0.0;
    double fz = 0.0;  ///< half-section force per unit length, positive into the water
};

using WettedState = std::vector<WettedFrame>;

/// Constants of one solver run derived from a scenario and mesh.
struct SolverContext {
    double rho = 1025.0;
    double g = 9.81;
    double k = 1.0;
    double dt = 5e-3;
    double cog_x = 0.0;  ///< CoG station from the tail, m
    double cog_z = 0.0;  ///< CoG height above the lowest keel point, m
    MassMatrix mass;
    hydro::PressureOptions pressure;

    bool aero_enabled = false;
    double aero_weight = 0.0;  ///< lift at trim, N
    double aero_slope = 0.0;
    double aero_arm = 0.0;
    double theta_trim = 0.0;
    double u_ref = 1.0;

    static SolverContext from(const geometry::Scenario& s, const geometry::HullMesh& mesh);
};

struct LoadResult {
    Vec3 hydro = Vec3::Zero();  ///< world-frame hydrodynamic force and pitch moment
    Vec3 aero = Vec3::Zero();
    double normal_force = 0.0;  ///< integrated section force normal to the body axis, N
    WettedState wetted;
    std::vector<double> pressure;  ///< n_frames x n_arc, row-major, Pa

    Vec3 total() const { return hydro + aero; }
    bool any_wetted() const;
};

/// Lift at the CoG scaled from weight-lift equilibrium at trim.
Vec3 aero_lift(const BodyState& state, const SolverContext& ctx);

/// Evaluates pile-up, immersion velocity, section forces and pressures on every
/// frame and integrates them over the body. `prev` is the wetted state of the
/// previous time level (empty at the first step).
LoadResult assemble_loads(const geometry::HullMesh& mesh, const BodyState& state, const WettedState& prev,
                          const SolverContext& ctx);

/// Added-mass matrix from the current wetting; surge entries are zero.
Mat3 added_mass_matrix(const geometry::HullMesh& mesh, const WettedState& wetted, double cog_x, double rho,
                       double k = 1.0);

struct StepOptions {
    int max_iterations = 25;
    double tolerance = 1e-6;
};

/// Force and added mass as a function of a trial acceleration.
struct TrialLoads {
    Vec3 force = Vec3::Zero();
    Mat3 MA = Mat3::Zero();
};

struct IterationResult {
    Vec3 acc = Vec3::Zero();
    int iterations = 0;
};

/// Fixed-point solve of (M + MA) a = f(a) using
/// a_{k+1} = (M + MA_k)^{-1} (f(a_k) + MA_k a_k). Throws SolverError after
/// `opts.max_iterations` without convergence.
IterationResult solve_acceleration(const Mat3& M, const std::function<TrialLoads(const Vec3&)>& loads,
                                   const Vec3& guess, const StepOptions& opts = {});

/// Velocities first, then positions with the mean of old and new velocity.
BodyState advance(const BodyState& s, const Vec3& acc, double dt);

struct StepResult {
    BodyState state;
    Vec3 acc = Vec3::Zero();
    LoadResult loads;
    int iterations = 0;
};

/// One implicit time step of the coupled body-fluid system.
StepResult step(const BodyState& state, const geometry::HullMesh& mesh, const WettedState& prev,
                const SolverContext& ctx, const Vec3& acc_guess = Vec3::Zero(), const StepOptions& opts = {});

struct MotionSample {
    double t = 0.0;
    BodyState state;
    Vec3 hydro = Vec3::Zero();
    Vec3 aero = Vec3::Zero();
    bool wetted = false;
    int iterations = 0;
};

struct PressureFrame {
    std::size_t step = 0;
    double t = 0.0;
    std::vector<float> pressure;  ///< n_frames x n_arc
    std::vector<float> fz;        ///< per frame, N/m
};

struct LoadHistory {
    double dt = 0.0;  ///< solver step
    std::size_t n_frames = 0;
    std::size_t n_arc = 0;
    std::size_t record_stride = 1;
    std::vector<MotionSample> motion;  ///< every solver step
    std::vector<PressureFrame> frames;
    std::optional<std::size_t> impact_step;
    int surface_exits = 0;  ///< wetted-to-dry transitions after impact
    std::optional<std::string> aborted;

    double record_dt() const { return dt * static_cast<double>(record_stride); }
};

struct RecordOptions {
    std::size_t stride = 1;
    bool from_impact = false;  ///< align the record to the impact step
};

inline constexpr double kImpactForce = 1.0;  ///< N

BodyState initial_state(const geometry::Scenario& s, const geometry::HullMesh& mesh);

/// Free motion from the initial airborne state to `t_end`.
LoadHistory simulate(const geometry::Scenario& scenario, const geometry::HullMesh& mesh,
                     const RecordOptions& record = {});

/// Prescribed constant-velocity trajectory at fixed pitch; loads are recorded only.
LoadHistory simulate_guided(const geometry::Scenario& scenario, const geometry::HullMesh& mesh,
                            const RecordOptions& record = {});

}  // namespace ditchkit::dynamics
