#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ditchkit::geometry {

struct ArcPoint {
    double y = 0.0;  ///< lateral offset from the symmetry plane, m
    double z = 0.0;  ///< height above the keel point, m
};

struct SectionProps {
    double c = 0.0;  ///< half-breadth at the waterline, m
    double A = 0.0;  ///< submerged half-area, m^2
};

/// Symmetric half-section discretised along its arc from the keel upward.
///
/// Submergence-dependent properties are tabulated on equidistant depth samples
/// and linearly interpolated. The half-breadth is the running maximum of the arc
/// offset below the waterline, so it never decreases with depth.
class CrossSection {
public:
    static constexpr std::size_t kTableSize = 512;

    CrossSection() = default;
    explicit CrossSection(std::vector<ArcPoint> arc);

    const std::vector<ArcPoint>& arc() const noexcept { return arc_; }
    std::size_t n_arc() const noexcept { return arc_.size(); }
    double max_depth() const noexcept { return max_depth_; }

    /// Negative depth is a dry section; depth beyond the table is clamped.
    SectionProps props(double T) const noexcept;

    std::span<const double> table_c() const noexcept { return c_; }
    std::span<const double> table_A() const noexcept { return A_; }

private:
    std::vector<ArcPoint> arc_;
    double max_depth_ = 0.0;
    double dT_ = 0.0;
    std::vector<double> c_;
    std::vector<double> A_;
};

/// Half of a circle of the given radius, keel to crown.
CrossSection build_circular_section(double radius, std::size_t n_arc);

/// Circular arc from the keel up to `max_angle` (radians, measured at the centre).
CrossSection build_arc_section(double radius, std::size_t n_arc, double max_angle);

SectionProps section_props(const CrossSection& section, double T) noexcept;

struct ProfilePoint {
    double x = 0.0;       ///< station measured from the tail, m
    double radius = 0.0;  ///< section radius, m
    double keel_z = 0.0;  ///< keel height above the lowest fuselage point, m
};

/// Piecewise-linear longitudinal description of a body of circular sections.
struct FuselageProfile {
    std::vector<ProfilePoint> points;  ///< sorted by x, first at x = 0
    double arc_angle = 1.0471975511965976;  ///< half-section arc span at the centre, rad
    double min_radius = 1e-3;

    double length() const;
    ProfilePoint at(double x) const;
};

struct Frame {
    double x = 0.0;
    double keel_z = 0.0;
    CrossSection section;
};

struct HullMesh {
    std::vector<Frame> frames;
    double dx = 0.0;
    std::size_t n_frames = 0;
    std::size_t n_arc = 0;

    double length() const noexcept { return frames.empty() ? 0.0 : frames.back().x - frames.front().x; }
};

HullMesh build_fuselage_mesh(const FuselageProfile& profile, std::size_t n_frames, std::size_t n_arc);

/// Generic narrow-body fuselage: 37.25 m cylinder of radius 2 m with a cubic nose
/// blend and an upswept cubic tail cone.
FuselageProfile d150_profile();

/// Body of revolution model (1.219 m, max radius 0.1016 m) with a swept-up rear.
FuselageProfile tn2929_model_d_profile();

/// Curved plate: 1.0 m long, 0.5 m wide, transverse radius 2 m.
FuselageProfile curved_plate_profile();

struct AeroConfig {
    bool enabled = false;
    double lift_slope = 0.0;   ///< relative lift change per radian of pitch from trim
    double moment_arm = 0.0;   ///< x-offset of the lift point ahead of the CoG, m
    std::optional<double> theta_trim;  ///< rad; defaults to the initial pitch
    std::optional<double> u_ref;       ///< m/s; defaults to the initial speed
};

struct Scenario {
    double u0 = 0.0;          ///< horizontal speed, m/s
    double w0 = 0.0;          ///< sink speed (downward positive), m/s
    double pitch0_deg = 0.0;
    double h0 = 0.05;         ///< initial clearance of the lowest keel point, m
    double mass = 1.0;
    double cog_from_nose = 0.0;
    double cog_above_keel = 0.0;
    double inertia_yy = 1.0;
    double rho_water = 1025.0;
    double g = 9.81;
    double dt = 5e-3;
    double t_end = 1.0;
    double k_factor = 1.0;
    std::optional<double> p_cap;
    bool pressure_floor = false;
    AeroConfig aero;

    void validate() const;
};

Scenario d150_scenario(double u0, double w0);

/// Free-flight model test at 15.24 m/s and 10 deg with lift balancing weight at trim.
Scenario tn2929_scenario();

/// Guided plate impact at 40 m/s, 6 deg, 1.5 m/s sink.
Scenario curved_plate_scenario();

/// "d150", "tn2929_d" or "curved_plate".
Scenario preset_scenario(const std::string& name);

void to_json(nlohmann::json& j, const FuselageProfile& p);
void from_json(const nlohmann::json& j, FuselageProfile& p);
void to_json(nlohmann::json& j, const HullMesh& mesh);
HullMesh mesh_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

}  // namespace ditchkit::geometry
