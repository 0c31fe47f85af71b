#include "ditchkit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "ditchkit/dynamics.hpp"
#include "ditchkit/error.hpp"
#include "ditchkit/nn/checkpoint.hpp"

namespace ditchkit::dataset {

void to_json(nlohmann::json& j, const SweepConfig& s) {
    j = {{"u0_min_mps", s.u_min}, {"u0_max_mps", s.u_max}, {"w0_min_mps", s.w_min}, {"w0_max_mps", s.w_max},
         {"pitch_deg", s.pitch_deg}, {"n_train", s.n_train}, {"n_val", s.n_val}, {"n_test", s.n_test},
         {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SweepConfig& s) {
    const SweepConfig d;
    s.u_min = j.value("u0_min_mps", d.u_min);
    s.u_max = j.value("u0_max_mps", d.u_max);
    s.w_min = j.value("w0_min_mps", d.w_min);
    s.w_max = j.value("w0_max_mps", d.w_max);
    s.pitch_deg = j.value("pitch_deg", d.pitch_deg);
    s.n_train = j.value("n_train", d.n_train);
    s.n_val = j.value("n_val", d.n_val);
    s.n_test = j.value("n_test", d.n_test);
    s.seed = j.value("seed", d.seed);
}

}  // namespace ditchkit::dataset

namespace ditchkit::pipeline {

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

DatasetConfig DatasetConfig::desk(std::uint64_t seed) {
    DatasetConfig c;
    c.profile_spec = "d150";
    c.profile = geometry::d150_profile();
    c.n_frames = 64;
    c.n_arc = 48;
    c.scenario = geometry::d150_scenario(75.0, 2.0);
    c.scenario.t_end = 4.0;
    c.sweep.n_train = 20;
    c.sweep.n_val = 4;
    c.sweep.n_test = 6;
    c.sweep.seed = seed;
    c.patch_h = c.patch_w = 32;
    return c;
}

void DatasetConfig::validate() const {
    if (patch_h > n_frames || patch_w > n_arc) throw ConfigError("patch is larger than the load grid");
    if (patch_h == 0 || patch_w == 0) throw ConfigError("patch must be non-empty");
    if (extract.step_every == 0) throw ConfigError("step_every must be positive");
    if (sweep.n_train == 0) throw ConfigError("sweep needs at least one training case");
    scenario.validate();
}

void to_json(nlohmann::json& j, const DatasetConfig& c) {
    j = {{"geometry", {{"profile", c.profile_spec}, {"n_frames", c.n_frames}, {"n_arc", c.n_arc}}},
         {"scenario", c.scenario},
         {"sweep", c.sweep},
         {"patch", {c.patch_h, c.patch_w}},
         {"step_every", c.extract.step_every},
         {"stop_threshold_pa", c.extract.stop_threshold},
         {"blur", c.blur}};
}

void from_json(const nlohmann::json& j, DatasetConfig& c) {
    c = DatasetConfig{};
    const auto& g = j.at("geometry");
    c.profile_spec = g.value("profile", nlohmann::json("d150"));
    c.profile = c.profile_spec.get<geometry::FuselageProfile>();
    c.n_frames = g.value("n_frames", c.n_frames);
    c.n_arc = g.value("n_arc", c.n_arc);
    c.scenario = j.value("scenario", nlohmann::json{{"preset", "d150"}}).get<geometry::Scenario>();
    if (j.contains("sweep")) c.sweep = j.at("sweep").get<dataset::SweepConfig>();
    if (j.contains("patch")) {
        const auto& p = j.at("patch");
        if (p.is_array()) {
            c.patch_h = p.at(0).get<std::size_t>();
            c.patch_w = p.at(1).get<std::size_t>();
        } else {
            c.patch_h = c.patch_w = p.get<std::size_t>();
        }
    }
    c.extract.step_every = j.value("step_every", c.extract.step_every);
    c.extract.stop_threshold = j.value("stop_threshold_pa", c.extract.stop_threshold);
    c.blur = j.value("blur", c.blur);
}

geometry::Scenario scenario_for(const geometry::Scenario& base, const dataset::VelocityPair& v) {
    geometry::Scenario s = base;
    s.u0 = v.u0;
    s.w0 = v.w0;
    s.pitch0_deg = v.pitch0;
    return s;
}

namespace {

dataset::Dataset keep_nonempty(std::vector<dataset::CaseRecord> records, const char* split,
                               std::vector<std::string>& warnings) {
    dataset::Dataset d;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].n_t == 0) {
            warnings.push_back(std::string(split) + " case " + std::to_string(i) +
                               " never exceeds the stop threshold and is dropped");
            continue;
        }
        d.cases.push_back(std::move(records[i]));
    }
    return d;
}

void normalize_all(dataset::Dataset& d, double lo, double hi) {
    d.x_min = lo;
    d.x_max = hi;
    for (auto& c : d.cases) dataset::normalize(c.data, lo, hi);
}

}  // namespace

BuiltData build_datasets(const DatasetConfig& cfg, std::size_t jobs) {
    cfg.validate();
    const auto mesh = geometry::build_fuselage_mesh(cfg.profile, cfg.n_frames, cfg.n_arc);
    const auto plan = dataset::sweep(cfg.sweep);

    std::vector<dataset::VelocityPair> all;
    all.insert(all.end(), plan.train.begin(), plan.train.end());
    all.insert(all.end(), plan.val.begin(), plan.val.end());
    all.insert(all.end(), plan.test.begin(), plan.test.end());

    std::vector<dynamics::LoadHistory> histories(all.size());
    parallel_for(all.size(), jobs, [&](std::size_t i) {
        histories[i] = dynamics::simulate(scenario_for(cfg.scenario, all[i]), mesh, {cfg.extract.step_every, true});
    });

    BuiltData out;
    for (std::size_t i = 0; i < histories.size(); ++i)
        if (histories[i].aborted)
            out.warnings.push_back("scenario " + std::to_string(i) + " aborted: " + *histories[i].aborted);

    std::vector<double> field(cfg.n_frames * cfg.n_arc, 0.0);
    for (std::size_t i = 0; i < plan.train.size(); ++i)
        dataset::accumulate_load(histories[i], cfg.extract.step_every, field);
    out.window = dataset::select_window(field, cfg.n_frames, cfg.n_arc, cfg.patch_h, cfg.patch_w);

    std::vector<dataset::CaseRecord> raw(all.size());
    parallel_for(all.size(), jobs, [&](std::size_t i) {
        raw[i] = dataset::extract_patches(histories[i], out.window, cfg.extract);
        raw[i].pitch0 = all[i].pitch0;
    });
    histories.clear();

    auto blurred = raw;
    if (cfg.blur)
        for (auto& c : blurred) dataset::blur_case(c);

    const auto slice = [](const std::vector<dataset::CaseRecord>& v, std::size_t b, std::size_t e) {
        return std::vector<dataset::CaseRecord>(v.begin() + static_cast<std::ptrdiff_t>(b),
                                                v.begin() + static_cast<std::ptrdiff_t>(e));
    };
    const std::size_t n1 = plan.train.size(), n2 = n1 + plan.val.size(), n3 = all.size();
    out.train = keep_nonempty(slice(blurred, 0, n1), "train", out.warnings);
    out.val = keep_nonempty(slice(blurred, n1, n2), "val", out.warnings);
    out.test = keep_nonempty(slice(blurred, n2, n3), "test", out.warnings);
    std::vector<std::string> dup;
    out.raw_train = keep_nonempty(slice(raw, 0, n1), "train", dup);
    out.raw_test = keep_nonempty(slice(raw, n2, n3), "test", dup);
    if (out.train.cases.empty()) throw ConfigError("no training case exceeds the stop threshold");

    const auto [lo, hi] = dataset::value_range(out.train.cases);
    for (auto* d : {&out.train, &out.val, &out.test, &out.raw_train, &out.raw_test}) normalize_all(*d, lo, hi);
    return out;
}

std::vector<float> rollout_case(surrogates::Model& m, const dataset::CaseRecord& c, bool latent_only) {
    const auto& a = m.arch();
    if (c.H != a.patch || c.W != a.patch)
        throw ShapeError("case patch " + std::to_string(c.H) + "x" + std::to_string(c.W) + " does not match model patch " +
                         std::to_string(a.patch));
    if (c.n_t <= a.window) return {};
    const std::size_t F = c.frame_size();
    nn::Tensor<float> start({a.window, c.H, c.W},
                            std::vector<float>(c.data.begin(), c.data.begin() + static_cast<std::ptrdiff_t>(a.window * F)));
    const std::size_t n = c.n_t - a.window;
    auto out = latent_only ? surrogates::kae_latent_rollout(m, start, n) : surrogates::rollout(m, start, n);
    return std::move(out.data);
}

std::vector<double> case_rmse(std::span<const float> pred, const dataset::CaseRecord& truth, std::size_t window,
                              double x_min, double x_max) {
    const std::size_t F = truth.frame_size();
    std::vector<float> p(pred.begin(), pred.end());
    std::vector<float> t(truth.data.begin() + static_cast<std::ptrdiff_t>(window * F), truth.data.end());
    dataset::denormalize(p, x_min, x_max);
    dataset::denormalize(t, x_min, x_max);
    std::vector<float> all = truth.data;
    dataset::denormalize(all, x_min, x_max);
    const double case_max = *std::max_element(all.begin(), all.end());
    return eval::rmse_series(p, t, F, case_max);
}

std::unique_ptr<surrogates::Model> load_model(const std::filesystem::path& ckpt) {
    const auto c = nn::load_checkpoint(ckpt);
    auto m = std::make_unique<surrogates::Model>(surrogates::arch_from_metadata(c.metadata), 0);
    nn::restore(m->params(), c);
    return m;
}

void save_model(const std::filesystem::path& ckpt, surrogates::Model& m) {
    nn::save_checkpoint(ckpt, m.params(), m.metadata());
}

GridResult evaluate_runs(const std::vector<ModelRun>& runs, const std::vector<std::string>& models,
                         std::size_t n_seeds, const dataset::Dataset& test, std::size_t jobs) {
    std::size_t window = 0;
    for (const auto& r : runs) {
        if (!r.net) throw EvalError("run " + r.model + " seed " + std::to_string(r.seed) + " has no model");
        window = std::max(window, r.net->arch().window);
    }
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < test.cases.size(); ++i)
        if (test.cases[i].n_t > window) ids.push_back(i);
    if (ids.empty()) throw EvalError("no test case is longer than the input window");
    GridResult out{eval::RunGrid(models, ids.size(), n_seeds), ids, {}};

    std::vector<std::vector<std::vector<double>>> series(runs.size());
    parallel_for(runs.size(), jobs, [&](std::size_t r) {
        auto& run = runs[r];
        for (std::size_t c : out.case_ids) {
            const auto& tc = test.cases[c];
            const std::size_t l = run.net->arch().window;
            auto pred = rollout_case(*run.net, tc, run.latent_only);
            auto s = case_rmse(pred, tc, l, test.x_min, test.x_max);
            // align runs with different windows on the frames all of them predict
            s.erase(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(window - l));
            series[r].push_back(std::move(s));
        }
    });
    for (std::size_t r = 0; r < runs.size(); ++r)
        for (std::size_t k = 0; k < out.case_ids.size(); ++k)
            out.grid.add(runs[r].model, k, runs[r].seed, std::move(series[r][k]));

    for (std::size_t k = 0; k < out.case_ids.size(); ++k) {
        const auto& tc = test.cases[out.case_ids[k]];
        std::vector<float> truth(tc.data.begin() + static_cast<std::ptrdiff_t>(window * tc.frame_size()), tc.data.end());
        dataset::denormalize(truth, test.x_min, test.x_max);
        out.truth_norms[k] = eval::frame_norms(truth, tc.frame_size());
    }
    return out;
}

}  // namespace ditchkit::pipeline
