#include "ditchkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ditchkit/error.hpp"

namespace ditchkit::geometry {

namespace {

double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Lateral offset of the polyline at height z inside segment [a, b] (a.z <= z <= b.z).
double offset_at(const ArcPoint& a, const ArcPoint& b, double z) {
    const double dz = b.z - a.z;
    if (dz <= 0.0) return std::max(a.y, b.y);
    return a.y + (b.y - a.y) * (z - a.z) / dz;
}

// Area between the symmetry plane and the polyline from the keel up to height T.
double area_below(const std::vector<ArcPoint>& arc, double T) {
    double area = 0.0;
    for (std::size_t j = 0; j + 1 < arc.size(); ++j) {
        const ArcPoint& a = arc[j];
        const ArcPoint& b = arc[j + 1];
        if (a.z >= T) break;
        const double dz = b.z - a.z;
        if (dz <= 0.0) continue;
        const double top = std::min(b.z, T);
        const double y_top = offset_at(a, b, top);
        area += 0.5 * (a.y + y_top) * (top - a.z);
    }
    return area;
}

double breadth_below(const std::vector<ArcPoint>& arc, double T) {
    double c = 0.0;
    for (std::size_t j = 0; j < arc.size(); ++j) {
        if (arc[j].z <= T) {
            c = std::max(c, arc[j].y);
        } else {
            if (j > 0) c = std::max(c, offset_at(arc[j - 1], arc[j], T));
            break;
        }
    }
    return c;
}

}  // namespace

CrossSection::CrossSection(std::vector<ArcPoint> arc) : arc_(std::move(arc)) {
    if (arc_.size() < 2) throw GeometryError("cross section needs at least two arc points");
    for (std::size_t j = 0; j < arc_.size(); ++j) {
        const ArcPoint& p = arc_[j];
        if (!std::isfinite(p.y) || !std::isfinite(p.z) || p.y < 0.0)
            throw GeometryError("arc point " + std::to_string(j) + " has negative or non-finite offset");
        if (j > 0 && p.z < arc_[j - 1].z)
            throw GeometryError("arc heights must be non-decreasing (point " + std::to_string(j) + ")");
    }
    max_depth_ = arc_.back().z - arc_.front().z;
    if (max_depth_ <= 0.0) throw GeometryError("cross section has zero height");

    dT_ = max_depth_ / static_cast<double>(kTableSize - 1);
    c_.resize(kTableSize);
    A_.resize(kTableSize);
    const double z0 = arc_.front().z;
    for (std::size_t k = 0; k < kTableSize; ++k) {
        const double T = z0 + dT_ * static_cast<double>(k);
        c_[k] = k == 0 ? 0.0 : breadth_below(arc_, T);
        A_[k] = k == 0 ? 0.0 : area_below(arc_, T);
    }
    // The running maximum keeps c monotone; A is monotone because y >= 0.
    for (std::size_t k = 1; k < kTableSize; ++k) c_[k] = std::max(c_[k], c_[k - 1]);
}

SectionProps CrossSection::props(double T) const noexcept {
    if (!(T > 0.0) || c_.empty()) return {};
    const double s = T / dT_;
    if (s >= static_cast<double>(kTableSize - 1)) return {c_.back(), A_.back()};
    const auto k = static_cast<std::size_t>(s);
    const double w = s - static_cast<double>(k);
    return {c_[k] + w * (c_[k + 1] - c_[k]), A_[k] + w * (A_[k + 1] - A_[k])};
}

SectionProps section_props(const CrossSection& section, double T) noexcept { return section.props(T); }

CrossSection build_arc_section(double radius, std::size_t n_arc, double max_angle) {
    if (!(radius > 0.0)) throw GeometryError("section radius must be positive");
    if (n_arc < 3) throw GeometryError("section needs at least 3 arc points");
    if (!(max_angle > 0.0) || max_angle > std::numbers::pi)
        throw GeometryError("arc angle must lie in (0, pi]");
    std::vector<ArcPoint> arc(n_arc);
    for (std::size_t j = 0; j < n_arc; ++j) {
        const double phi = max_angle * static_cast<double>(j) / static_cast<double>(n_arc - 1);
        arc[j] = {radius * std::sin(phi), radius * (1.0 - std::cos(phi))};
    }
    // sin(pi) is not exactly zero
    if (max_angle == std::numbers::pi) arc.back().y = 0.0;
    return CrossSection(std::move(arc));
}

CrossSection build_circular_section(double radius, std::size_t n_arc) {
    return build_arc_section(radius, n_arc, std::numbers::pi);
}

double FuselageProfile::length() const { return points.empty() ? 0.0 : points.back().x - points.front().x; }

ProfilePoint FuselageProfile::at(double x) const {
    if (points.empty()) throw GeometryError("empty fuselage profile");
    if (x <= points.front().x) return points.front();
    if (x >= points.back().x) return points.back();
    auto hi = std::upper_bound(points.begin(), points.end(), x,
                               [](double v, const ProfilePoint& p) { return v < p.x; });
    auto lo = hi - 1;
    const double w = (x - lo->x) / (hi->x - lo->x);
    return {x, lo->radius + w * (hi->radius - lo->radius), lo->keel_z + w * (hi->keel_z - lo->keel_z)};
}

HullMesh build_fuselage_mesh(const FuselageProfile& profile, std::size_t n_frames, std::size_t n_arc) {
    if (n_frames < 2) throw GeometryError("mesh needs at least two frames");
    if (profile.points.size() < 2) throw GeometryError("profile needs at least two points");
    for (std::size_t i = 0; i < profile.points.size(); ++i) {
        const auto& p = profile.points[i];
        if (p.radius < 0.0 || !std::isfinite(p.radius))
            throw GeometryError("profile point " + std::to_string(i) + " has negative radius");
        if (i > 0 && !(p.x > profile.points[i - 1].x))
            throw GeometryError("profile stations must be strictly increasing");
    }
    const double x0 = profile.points.front().x;
    const double L = profile.length();

    HullMesh mesh;
    mesh.n_frames = n_frames;
    mesh.n_arc = n_arc;
    mesh.dx = L / static_cast<double>(n_frames - 1);
    mesh.frames.reserve(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        const double x = x0 + mesh.dx * static_cast<double>(i);
        const ProfilePoint p = profile.at(x);
        const double r = std::max(p.radius, profile.min_radius);
        mesh.frames.push_back({x, p.keel_z, build_arc_section(r, n_arc, profile.arc_angle)});
    }
    return mesh;
}

FuselageProfile d150_profile() {
    constexpr double L = 37.25;
    constexpr double R = 2.0;
    constexpr double nose_len = 6.0;
    constexpr double tail_len = 11.0;
    constexpr double tail_radius = 0.35;
    constexpr double tail_keel = 2.9;  // upswept tail cone
    constexpr int n = 150;

    FuselageProfile profile;
    profile.arc_angle = std::numbers::pi / 3.0;
    profile.points.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double x = L * i / (n - 1);
        double r = R;
        double keel = 0.0;
        if (x < tail_len) {
            const double s = smoothstep(x / tail_len);
            r = tail_radius + (R - tail_radius) * s;
            keel = tail_keel * (1.0 - s);
        } else if (x > L - nose_len) {
            const double s = smoothstep((L - x) / nose_len);
            r = 0.25 + (R - 0.25) * std::sqrt(s);
            keel = 0.7 * (R - r);
        }
        profile.points.push_back({x, r, keel});
    }
    return profile;
}

FuselageProfile tn2929_model_d_profile() {
    constexpr double L = 1.219;
    constexpr double R = 0.1016;
    constexpr double nose_len = 0.2;
    constexpr double tail_len = 0.38;
    constexpr int n = 80;

    FuselageProfile profile;
    profile.arc_angle = std::numbers::pi / 2.0;
    profile.points.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double x = L * i / (n - 1);
        double r = R;
        double keel = 0.0;
        if (x < tail_len) {
            const double s = smoothstep(x / tail_len);
            r = 0.35 * R + 0.65 * R * s;
            keel = 0.9 * R * (1.0 - s);
        } else if (x > L - nose_len) {
            const double s = smoothstep((L - x) / nose_len);
            r = 0.15 * R + 0.85 * R * std::sqrt(s);
            keel = 0.8 * (R - r);
        }
        profile.points.push_back({x, r, keel});
    }
    return profile;
}

FuselageProfile curved_plate_profile() {
    constexpr double radius = 2.0;
    constexpr double half_width = 0.25;
    FuselageProfile profile;
    profile.points = {{0.0, radius, 0.0}, {1.0, radius, 0.0}};
    profile.arc_angle = std::asin(half_width / radius);
    return profile;
}

void Scenario::validate() const {
    if (!(u0 > 0.0)) throw ConfigError("scenario: u0 must be positive");
    if (!(w0 >= 0.0)) throw ConfigError("scenario: w0 must be non-negative");
    if (!(dt > 0.0)) throw ConfigError("scenario: dt must be positive");
    if (!(rho_water > 0.0)) throw ConfigError("scenario: rho_water must be positive");
    if (!(mass > 0.0) || !(inertia_yy > 0.0)) throw ConfigError("scenario: mass and inertia must be positive");
    if (!(k_factor >= 0.0)) throw ConfigError("scenario: k_factor must be non-negative");
    if (!(t_end > 0.0)) throw ConfigError("scenario: t_end must be positive");
}

Scenario d150_scenario(double u0, double w0) {
    Scenario s;
    s.u0 = u0;
    s.w0 = w0;
    s.pitch0_deg = 6.0;
    s.h0 = 0.05;
    s.mass = 68000.0;
    s.cog_from_nose = 16.43;
    s.cog_above_keel = 1.72;
    s.inertia_yy = 68000.0 * 11.0 * 11.0;
    s.rho_water = 1025.0;
    s.g = 9.81;
    s.dt = 5e-3;
    s.t_end = 8.0;
    s.k_factor = 1.0;
    return s;
}

Scenario tn2929_scenario() {
    Scenario s;
    s.u0 = 15.24;
    s.w0 = 0.6;
    s.pitch0_deg = 10.0;
    s.mass = 4.0;
    s.cog_from_nose = 0.55;
    s.cog_above_keel = 0.1;
    s.inertia_yy = 4.0 * 0.09;
    s.dt = 1e-3;
    s.t_end = 2.0;
    s.aero.enabled = true;
    s.aero.lift_slope = 3.0;
    return s;
}

Scenario curved_plate_scenario() {
    Scenario s;
    s.u0 = 40.0;
    s.w0 = 1.5;
    s.pitch0_deg = 6.0;
    s.h0 = 1e-3;
    s.mass = 1000.0;
    s.cog_from_nose = 0.5;
    s.cog_above_keel = 0.1;
    s.inertia_yy = 100.0;
    s.dt = 1e-4;
    s.t_end = 0.12;
    return s;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const FuselageProfile& p) {
    j = nlohmann::json::object();
    j["arc_angle_deg"] = p.arc_angle * 180.0 / std::numbers::pi;
    j["min_radius_m"] = p.min_radius;
    auto& pts = j["points"] = nlohmann::json::array();
    for (const auto& q : p.points) pts.push_back({{"x_m", q.x}, {"radius_m", q.radius}, {"keel_z_m", q.keel_z}});
}

void from_json(const nlohmann::json& j, FuselageProfile& p) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "d150") p = d150_profile();
        else if (name == "tn2929_d") p = tn2929_model_d_profile();
        else if (name == "curved_plate") p = curved_plate_profile();
        else throw ConfigError("unknown profile preset '" + name + "'");
        return;
    }
    p = FuselageProfile{};
    if (j.contains("arc_angle_deg")) p.arc_angle = j.at("arc_angle_deg").get<double>() * std::numbers::pi / 180.0;
    p.min_radius = j.value("min_radius_m", p.min_radius);
    for (const auto& q : j.at("points"))
        p.points.push_back({q.at("x_m").get<double>(), q.at("radius_m").get<double>(), q.value("keel_z_m", 0.0)});
}

void to_json(nlohmann::json& j, const HullMesh& mesh) {
    j = nlohmann::json::object();
    j["dx_m"] = mesh.dx;
    j["n_frames"] = mesh.n_frames;
    j["n_arc"] = mesh.n_arc;
    auto& frames = j["frames"] = nlohmann::json::array();
    for (const auto& f : mesh.frames) {
        nlohmann::json arc = nlohmann::json::array();
        for (const auto& p : f.section.arc()) arc.push_back({p.y, p.z});
        frames.push_back({{"x_m", f.x}, {"keel_z_m", f.keel_z}, {"arc", std::move(arc)}});
    }
}

HullMesh mesh_from_json(const nlohmann::json& j) {
    HullMesh mesh;
    mesh.dx = j.at("dx_m").get<double>();
    mesh.n_frames = j.at("n_frames").get<std::size_t>();
    mesh.n_arc = j.at("n_arc").get<std::size_t>();
    for (const auto& f : j.at("frames")) {
        std::vector<ArcPoint> arc;
        for (const auto& p : f.at("arc")) arc.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        mesh.frames.push_back({f.at("x_m").get<double>(), f.at("keel_z_m").get<double>(), CrossSection(std::move(arc))});
    }
    if (mesh.frames.size() != mesh.n_frames) throw ConfigError("mesh: frame count mismatch");
    return mesh;
}

void to_json(nlohmann::json& j, const Scenario& s) {
    j = {{"u0_mps", s.u0},
         {"w0_mps", s.w0},
         {"pitch0_deg", s.pitch0_deg},
         {"h0_m", s.h0},
         {"mass_kg", s.mass},
         {"cog_from_nose_m", s.cog_from_nose},
         {"cog_above_keel_m", s.cog_above_keel},
         {"inertia_yy_kgm2", s.inertia_yy},
         {"rho_water_kgpm3", s.rho_water},
         {"g_mps2", s.g},
         {"dt_s", s.dt},
         {"t_end_s", s.t_end},
         {"k_factor", s.k_factor},
         {"pressure_floor", s.pressure_floor}};
    if (s.p_cap) j["p_cap_pa"] = *s.p_cap;
    nlohmann::json aero = {{"enabled", s.aero.enabled},
                           {"lift_slope_per_rad", s.aero.lift_slope},
                           {"moment_arm_m", s.aero.moment_arm}};
    if (s.aero.theta_trim) aero["theta_trim_deg"] = *s.aero.theta_trim * 180.0 / std::numbers::pi;
    if (s.aero.u_ref) aero["u_ref_mps"] = *s.aero.u_ref;
    j["aero"] = std::move(aero);
}

Scenario preset_scenario(const std::string& name) {
    if (name == "d150") return d150_scenario(75.0, 2.0);
    if (name == "tn2929_d") return tn2929_scenario();
    if (name == "curved_plate") return curved_plate_scenario();
    throw ConfigError("unknown scenario preset '" + name + "'");
}

void from_json(const nlohmann::json& j, Scenario& s) {
    const Scenario d = j.contains("preset") ? preset_scenario(j.at("preset").get<std::string>()) : Scenario{};
    if (!j.contains("preset") && !j.contains("u0_mps")) throw ConfigError("scenario needs u0_mps or a preset");
    s.u0 = j.value("u0_mps", d.u0);
    s.w0 = j.value("w0_mps", d.w0);
    s.pitch0_deg = j.value("pitch0_deg", d.pitch0_deg);
    s.h0 = j.value("h0_m", d.h0);
    s.mass = j.value("mass_kg", d.mass);
    s.cog_from_nose = j.value("cog_from_nose_m", d.cog_from_nose);
    s.cog_above_keel = j.value("cog_above_keel_m", d.cog_above_keel);
    s.inertia_yy = j.value("inertia_yy_kgm2", d.inertia_yy);
    s.rho_water = j.value("rho_water_kgpm3", d.rho_water);
    s.g = j.value("g_mps2", d.g);
    s.dt = j.value("dt_s", d.dt);
    s.t_end = j.value("t_end_s", d.t_end);
    s.k_factor = j.value("k_factor", d.k_factor);
    s.pressure_floor = j.value("pressure_floor", d.pressure_floor);
    s.p_cap = d.p_cap;
    if (j.contains("p_cap_pa")) s.p_cap = j.at("p_cap_pa").get<double>();
    s.aero = d.aero;
    if (j.contains("aero")) {
        const auto& a = j.at("aero");
        s.aero.enabled = a.value("enabled", false);
        s.aero.lift_slope = a.value("lift_slope_per_rad", 0.0);
        s.aero.moment_arm = a.value("moment_arm_m", 0.0);
        s.aero.theta_trim.reset();
        s.aero.u_ref.reset();
        if (a.contains("theta_trim_deg")) s.aero.theta_trim = a.at("theta_trim_deg").get<double>() * std::numbers::pi / 180.0;
        if (a.contains("u_ref_mps")) s.aero.u_ref = a.at("u_ref_mps").get<double>();
    }
}

}  // namespace ditchkit::geometry
