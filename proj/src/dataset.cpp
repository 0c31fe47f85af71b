#include "ditchkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ditchkit/binary_io.hpp"
#include "ditchkit/error.hpp"
#include "ditchkit/nn/rng.hpp"

namespace ditchkit::dataset {

float CaseRecord::max_value() const {
    if (data.empty()) return 0.0f;
    return *std::max_element(data.begin(), data.end());
}

namespace {

// Recorded frames that fall on the record grid: impact step plus multiples of step_every.
std::vector<const dynamics::PressureFrame*> record_frames(const dynamics::LoadHistory& h, std::size_t step_every) {
    std::vector<const dynamics::PressureFrame*> out;
    if (!h.impact_step) return out;
    const std::size_t impact = *h.impact_step;
    for (const auto& f : h.frames) {
        if (f.step < impact || (f.step - impact) % step_every != 0) continue;
        out.push_back(&f);
    }
    if (!out.empty() && out.front()->step != impact)
        throw ConfigError("load history does not contain the impact step; record it aligned to impact");
    for (std::size_t k = 1; k < out.size(); ++k)
        if (out[k]->step - out[k - 1]->step != step_every)
            throw ConfigError("load history has gaps on the record grid (step_every " + std::to_string(step_every) +
                              ")");
    return out;
}

}  // namespace

CaseRecord extract_patches(const dynamics::LoadHistory& history, const Window& w, const ExtractOptions& opts) {
    if (opts.step_every == 0) throw ConfigError("step_every must be positive");
    if (w.H == 0 || w.W == 0 || w.frame0 + w.H > history.n_frames || w.arc0 + w.W > history.n_arc)
        throw ConfigError("patch window exceeds the " + std::to_string(history.n_frames) + " x " +
                          std::to_string(history.n_arc) + " load grid");
    CaseRecord rec;
    rec.H = w.H;
    rec.W = w.W;
    rec.origin_frame = static_cast<std::uint32_t>(w.frame0);
    rec.origin_arc = static_cast<std::uint32_t>(w.arc0);

    bool exceeded = false;
    std::vector<float> patch(w.H * w.W);
    for (const auto* f : record_frames(history, opts.step_every)) {
        float peak = 0.0f;
        for (std::size_t i = 0; i < w.H; ++i) {
            const float* row = f->pressure.data() + (w.frame0 + i) * history.n_arc + w.arc0;
            std::copy(row, row + w.W, patch.begin() + i * w.W);
            peak = std::max(peak, *std::max_element(row, row + w.W));
        }
        if (peak >= opts.stop_threshold) {
            exceeded = true;
        } else if (exceeded) {
            break;
        }
        rec.data.insert(rec.data.end(), patch.begin(), patch.end());
        ++rec.n_t;
    }
    // a patch that never reached the threshold carries no usable record
    if (!exceeded) {
        rec.data.clear();
        rec.n_t = 0;
    }
    return rec;
}

void accumulate_load(const dynamics::LoadHistory& history, std::size_t step_every, std::vector<double>& field) {
    const std::size_t n = history.n_frames * history.n_arc;
    if (field.empty()) field.assign(n, 0.0);
    if (field.size() != n) throw ShapeError("accumulate_load: field size does not match the load grid");
    for (const auto* f : record_frames(history, step_every))
        for (std::size_t k = 0; k < n; ++k) field[k] += f->pressure[k];
}

Window select_window(std::span<const double> field, std::size_t n_frames, std::size_t n_arc, std::size_t H,
                     std::size_t W) {
    if (field.size() != n_frames * n_arc) throw ShapeError("select_window: field size does not match the grid");
    if (H == 0 || W == 0 || H > n_frames || W > n_arc)
        throw ConfigError("patch " + std::to_string(H) + " x " + std::to_string(W) + " does not fit the " +
                          std::to_string(n_frames) + " x " + std::to_string(n_arc) + " grid");
    // summed-area table with a zero border
    std::vector<double> S((n_frames + 1) * (n_arc + 1), 0.0);
    const std::size_t ld = n_arc + 1;
    for (std::size_t i = 0; i < n_frames; ++i)
        for (std::size_t j = 0; j < n_arc; ++j)
            S[(i + 1) * ld + j + 1] = field[i * n_arc + j] + S[i * ld + j + 1] + S[(i + 1) * ld + j] - S[i * ld + j];

    Window best{0, 0, H, W};
    double best_sum = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + H <= n_frames; ++i) {
        for (std::size_t j = 0; j + W <= n_arc; ++j) {
            const double s = S[(i + H) * ld + j + W] - S[i * ld + j + W] - S[(i + H) * ld + j] + S[i * ld + j];
            if (s > best_sum) {
                best_sum = s;
                best.frame0 = i;
                best.arc0 = j;
            }
        }
    }
    return best;
}

void gaussian_blur3(std::span<const float> in, std::size_t H, std::size_t W, std::span<float> out) {
    if (in.size() != H * W || out.size() != H * W) throw ShapeError("gaussian_blur3: buffer size is not H*W");
    static constexpr double tap[3] = {1.0, 2.0, 1.0};
    std::vector<double> acc(H * W, 0.0);
    const auto h = static_cast<std::ptrdiff_t>(H);
    const auto w = static_cast<std::ptrdiff_t>(W);
    for (std::ptrdiff_t i = 0; i < h; ++i) {
        const int di0 = i > 0 ? -1 : 0, di1 = i + 1 < h ? 1 : 0;
        double row_sum = 0.0;
        for (int di = di0; di <= di1; ++di) row_sum += tap[di + 1];
        for (std::ptrdiff_t j = 0; j < w; ++j) {
            const double v = in[i * w + j];
            if (v == 0.0) continue;
            const int dj0 = j > 0 ? -1 : 0, dj1 = j + 1 < w ? 1 : 0;
            double col_sum = 0.0;
            for (int dj = dj0; dj <= dj1; ++dj) col_sum += tap[dj + 1];
            const double scale = v / (row_sum * col_sum);
            for (int di = di0; di <= di1; ++di)
                for (int dj = dj0; dj <= dj1; ++dj) acc[(i + di) * w + j + dj] += scale * tap[di + 1] * tap[dj + 1];
        }
    }
    for (std::size_t k = 0; k < acc.size(); ++k) out[k] = static_cast<float>(acc[k]);
}

void blur_case(CaseRecord& c) {
    std::vector<float> tmp(c.frame_size());
    for (std::size_t t = 0; t < c.n_t; ++t) {
        gaussian_blur3(c.frame(t), c.H, c.W, tmp);
        std::copy(tmp.begin(), tmp.end(), c.frame(t).begin());
    }
}

std::pair<double, double> value_range(std::span<const CaseRecord> cases) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : cases)
        for (float v : c.data) {
            lo = std::min<double>(lo, v);
            hi = std::max<double>(hi, v);
        }
    if (!(hi > lo)) throw ConfigError("degenerate value range: training data is empty or constant");
    return {lo, hi};
}

void normalize(std::span<float> x, double x_min, double x_max) {
    if (!(x_max > x_min)) throw ConfigError("normalize: x_max must exceed x_min");
    const double inv = 1.0 / (x_max - x_min);
    for (float& v : x) v = static_cast<float>((v - x_min) * inv);
}

void denormalize(std::span<float> x, double x_min, double x_max) {
    if (!(x_max > x_min)) throw ConfigError("denormalize: x_max must exceed x_min");
    const double range = x_max - x_min;
    for (float& v : x) v = static_cast<float>(v * range + x_min);
}

namespace {

double radical_inverse(std::size_t k, unsigned base) {
    double f = 1.0, r = 0.0;
    while (k > 0) {
        f /= base;
        r += f * static_cast<double>(k % base);
        k /= base;
    }
    return r;
}

std::vector<VelocityPair> halton_points(std::size_t n, double u_lo, double u_hi, double w_lo, double w_hi,
                                        double pitch, nn::Rng& rng) {
    const double su = rng.uniform(), sw = rng.uniform();
    std::vector<VelocityPair> out;
    for (std::size_t k = 1; k <= n; ++k) {
        const double a = std::fmod(radical_inverse(k, 2) + su, 1.0);
        const double b = std::fmod(radical_inverse(k, 3) + sw, 1.0);
        out.push_back({u_lo + a * (u_hi - u_lo), w_lo + b * (w_hi - w_lo), pitch});
    }
    return out;
}

}  // namespace

SweepPlan sweep(const SweepConfig& cfg) {
    if (!(cfg.u_max > cfg.u_min) || !(cfg.w_max > cfg.w_min))
        throw ConfigError("sweep: empty velocity range");
    if (cfg.n_train == 0) throw ConfigError("sweep: at least one training case is required");
    nn::Rng rng(cfg.seed);
    const VelocityPair mid{0.5 * (cfg.u_min + cfg.u_max), 0.5 * (cfg.w_min + cfg.w_max), cfg.pitch_deg};

    SweepPlan plan;
    if (cfg.n_train == 1) {
        plan.train.push_back(mid);
    } else {
        std::size_t rest = cfg.n_train;
        if (cfg.n_train >= 4) {
            for (double u : {cfg.u_min, cfg.u_max})
                for (double w : {cfg.w_min, cfg.w_max}) plan.train.push_back({u, w, cfg.pitch_deg});
            rest -= 4;
        }
        auto pts = halton_points(rest, cfg.u_min, cfg.u_max, cfg.w_min, cfg.w_max, cfg.pitch_deg, rng);
        plan.train.insert(plan.train.end(), pts.begin(), pts.end());
    }

    const double du = 0.05 * (cfg.u_max - cfg.u_min), dw = 0.05 * (cfg.w_max - cfg.w_min);
    auto inner = [&](std::size_t n) {
        if (n == 1) return std::vector<VelocityPair>{mid};
        return halton_points(n, cfg.u_min + du, cfg.u_max - du, cfg.w_min + dw, cfg.w_max - dw, cfg.pitch_deg, rng);
    };
    plan.val = inner(cfg.n_val);
    plan.test = inner(cfg.n_test);
    return plan;
}

std::vector<std::pair<std::size_t, std::size_t>> sequence_index(std::span<const CaseRecord> cases,
                                                                std::size_t window) {
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    for (std::size_t c = 0; c < cases.size(); ++c)
        for (std::size_t t = 0; t + window < cases[c].n_t; ++t) idx.emplace_back(c, t);
    return idx;
}

void write_dlf(const Dataset& d, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.bytes("DLF1");
    w.u32(kDlfVersion);
    w.u32(static_cast<std::uint32_t>(d.cases.size()));
    std::uint32_t crc = 0;
    for (const auto& c : d.cases) {
        if (c.data.size() != c.n_t * c.H * c.W) throw ShapeError("write_dlf: case payload size mismatch");
        w.f64(c.u0);
        w.f64(c.w0);
        w.f64(c.pitch0);
        w.u32(static_cast<std::uint32_t>(c.n_t));
        w.u32(static_cast<std::uint32_t>(c.H));
        w.u32(static_cast<std::uint32_t>(c.W));
        w.u32(c.origin_frame);
        w.u32(c.origin_arc);
        w.f32s(c.data);
        crc = io::crc32(std::span<const float>(c.data), crc);
    }
    w.f64(d.x_min);
    w.f64(d.x_max);
    w.u32(crc);
    io::write_file(path, w.buffer());
}

Dataset read_dlf(const std::filesystem::path& path) {
    io::ByteReader r(io::read_file(path));
    io::expect_header(r, "DLF1", kDlfVersion);
    Dataset d;
    const std::uint32_t n_cases = r.u32();
    std::uint32_t crc = 0;
    for (std::uint32_t k = 0; k < n_cases; ++k) {
        CaseRecord c;
        c.u0 = r.f64();
        c.w0 = r.f64();
        c.pitch0 = r.f64();
        c.n_t = r.u32();
        c.H = r.u32();
        c.W = r.u32();
        c.origin_frame = r.u32();
        c.origin_arc = r.u32();
        const std::size_t n = c.n_t * c.H * c.W;
        if (n * sizeof(float) > r.remaining())
            throw FormatError(FormatErrc::truncated, "case " + std::to_string(k) + " payload is truncated");
        c.data.resize(n);
        r.f32s(c.data);
        crc = io::crc32(std::span<const float>(c.data), crc);
        d.cases.push_back(std::move(c));
    }
    d.x_min = r.f64();
    d.x_max = r.f64();
    if (r.u32() != crc) throw FormatError(FormatErrc::checksum_mismatch, "payload checksum mismatch in " + path.string());
    return d;
}

}  // namespace ditchkit::dataset
