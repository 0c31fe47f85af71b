#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "ditchkit/dynamics.hpp"

namespace ditchkit::dataset {

/// Rectangular sub-grid of the (frame, arc) load grid.
struct Window {
    std::size_t frame0 = 0;
    std::size_t arc0 = 0;
    std::size_t H = 32;  ///< frames
    std::size_t W = 32;  ///< arc points
};

/// Load patches of one scenario, starting at the impact frame, equidistant in time.
struct CaseRecord {
    double u0 = 0.0;
    double w0 = 0.0;
    double pitch0 = 0.0;
    std::size_t n_t = 0;
    std::size_t H = 0;
    std::size_t W = 0;
    std::uint32_t origin_frame = 0;
    std::uint32_t origin_arc = 0;
    std::vector<float> data;  ///< n_t x H x W, row-major, Pa or normalised

    std::size_t frame_size() const noexcept { return H * W; }
    std::span<const float> frame(std::size_t t) const { return {data.data() + t * H * W, H * W}; }
    std::span<float> frame(std::size_t t) { return {data.data() + t * H * W, H * W}; }
    float max_value() const;
};

struct Dataset {
    std::vector<CaseRecord> cases;
    double x_min = 0.0;
    double x_max = 1.0;
};

struct ExtractOptions {
    std::size_t step_every = 20;     ///< solver steps per record step
    double stop_threshold = 5e3;     ///< Pa
};

/// Cuts `window` out of every `step_every`-th solver step from impact on and
/// stops at the first frame whose patch maximum drops below the threshold after
/// having exceeded it. The history must contain those steps (any record stride
/// dividing `step_every`, aligned to impact).
CaseRecord extract_patches(const dynamics::LoadHistory& history, const Window& window,
                           const ExtractOptions& opts = {});

/// Adds the loads of the frames extract_patches would visit (without trimming)
/// to `field` (n_frames x n_arc).
void accumulate_load(const dynamics::LoadHistory& history, std::size_t step_every, std::vector<double>& field);

/// H x W window with the largest summed load in `field`; ties go to the lowest index.
Window select_window(std::span<const double> field, std::size_t n_frames, std::size_t n_arc, std::size_t H,
                     std::size_t W);

/// Sum-preserving 3x3 binomial blur in scatter form. Every input cell spreads
/// its value over the valid part of its (1,2,1)x(1,2,1)/16 neighbourhood with
/// weights renormalised to one.
void gaussian_blur3(std::span<const float> in, std::size_t H, std::size_t W, std::span<float> out);
void blur_case(CaseRecord& c);

std::pair<double, double> value_range(std::span<const CaseRecord> cases);
void normalize(std::span<float> x, double x_min, double x_max);
void denormalize(std::span<float> x, double x_min, double x_max);

struct VelocityPair {
    double u0 = 0.0;
    double w0 = 0.0;
    double pitch0 = 6.0;
};

struct SweepConfig {
    double u_min = 66.88;
    double u_max = 87.46;
    double w_min = 0.61;
    double w_max = 3.96;
    double pitch_deg = 6.0;
    std::size_t n_train = 323;
    std::size_t n_val = 20;
    std::size_t n_test = 30;
    std::uint64_t seed = 0;
};

struct SweepPlan {
    std::vector<VelocityPair> train;
    std::vector<VelocityPair> val;
    std::vector<VelocityPair> test;
};

/// Deterministic quasi-uniform velocity pairs. Training uses the box corners
/// and a randomly shifted Halton(2,3) sequence; validation and test points come
/// from the box shrunk by 5% per side, so they lie strictly inside the
/// training hull.
SweepPlan sweep(const SweepConfig& cfg);

/// (case, t) pairs such that frames t .. t+window are all inside the case.
std::vector<std::pair<std::size_t, std::size_t>> sequence_index(std::span<const CaseRecord> cases,
                                                                std::size_t window);

inline constexpr std::uint32_t kDlfVersion = 1;

void write_dlf(const Dataset& d, const std::filesystem::path& path);
Dataset read_dlf(const std::filesystem::path& path);

}  // namespace ditchkit::dataset
