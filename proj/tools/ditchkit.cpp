// ditchkit: command-line front-end for simulation, dataset building, surrogate
// training and evaluation.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ditchkit/binary_io.hpp"
#include "ditchkit/dataset.hpp"
#include "ditchkit/dynamics.hpp"
#include "ditchkit/error.hpp"
#include "ditchkit/eval.hpp"
#include "ditchkit/geometry.hpp"
#include "ditchkit/pipeline.hpp"
#include "ditchkit/rom.hpp"
#include "ditchkit/surrogates.hpp"
#include "ditchkit/svg.hpp"
#include "ditchkit/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ditchkit;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit : int { kOk = 0, kConfig = 2, kNumeric = 3, kIo = 4, kIncomplete = 5 };

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(FormatErrc::io, "cannot write " + path.string());
    out << text;
}

std::string hex32(std::uint32_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(8) << std::setfill('0') << v;
    return s.str();
}

// Seed precedence: explicit flag, then DITCHKIT_SEED, then the config value.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config) {
    if (flag) return *flag;
    if (const char* env = std::getenv("DITCHKIT_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("DITCHKIT_SEED is not an unsigned integer: ") + env);
        }
    }
    return config;
}

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    json config = json::object();
    json seeds = json::object();
    json inputs = json::object();
    json outputs = json::array();

    void write(const fs::path& path) const {
        const std::string dump = config.dump();
        const json m = {{"tool", "ditchkit"},
                        {"version", kVersion},
                        {"command", command},
                        {"argv", argv},
                        {"config", config},
                        {"config_hash", "crc32:" + hex32(io::crc32(std::span(
                                                        reinterpret_cast<const std::uint8_t*>(dump.data()),
                                                        dump.size())))},
                        {"seeds", seeds},
                        {"inputs", inputs},
                        {"outputs", outputs}};
        write_text(path, m.dump(2) + "\n");
    }
};

std::vector<std::string> g_argv;

Manifest manifest_for(const std::string& command) {
    Manifest m;
    m.command = command;
    m.argv = g_argv;
    return m;
}

geometry::HullMesh mesh_from_config(const json& geo) {
    const auto profile = geo.value("profile", json("d150")).get<geometry::FuselageProfile>();
    return geometry::build_fuselage_mesh(profile, geo.value("n_frames", std::size_t{150}),
                                         geo.value("n_arc", std::size_t{171}));
}

// ---------------------------------------------------------------------------
// simulate / sweep

void write_motion_csv(const fs::path& path, const dynamics::LoadHistory& h) {
    std::ostringstream out;
    out << std::setprecision(9);
    out << "t_s,x_m,z_m,theta_deg,u_mps,w_mps,q_radps,fx_n,fz_n,my_nm,aero_fz_n,wetted,iterations\n";
    for (const auto& m : h.motion) {
        const auto& s = m.state;
        out << m.t << ',' << s.x << ',' << s.z << ',' << s.theta * 180.0 / 3.14159265358979323846 << ',' << s.u
            << ',' << s.w << ',' << s.q << ',' << m.hydro(0) << ',' << m.hydro(1) << ',' << m.hydro(2) << ','
            << m.aero(1) << ',' << (m.wetted ? 1 : 0) << ',' << m.iterations << '\n';
    }
    write_text(path, out.str());
}

// Full load grid of every recorded frame as a single DLF case, in Pa.
dataset::Dataset history_as_dataset(const dynamics::LoadHistory& h, const geometry::Scenario& s) {
    dataset::CaseRecord c;
    c.u0 = s.u0;
    c.w0 = s.w0;
    c.pitch0 = s.pitch0_deg;
    c.n_t = h.frames.size();
    c.H = h.n_frames;
    c.W = h.n_arc;
    for (const auto& f : h.frames) c.data.insert(c.data.end(), f.pressure.begin(), f.pressure.end());
    dataset::Dataset d;
    d.cases.push_back(std::move(c));
    d.x_min = 0.0;  // identity scaling: values are pressures
    d.x_max = 1.0;
    return d;
}

json history_summary(const dynamics::LoadHistory& h) {
    float peak = 0.0f;
    for (const auto& f : h.frames)
        for (float p : f.pressure) peak = std::max(peak, p);
    json j = {{"solver_dt_s", h.dt},
              {"record_dt_s", h.record_dt()},
              {"n_steps", h.motion.size()},
              {"n_recorded", h.frames.size()},
              {"surface_exits", h.surface_exits},
              {"peak_pressure_pa", peak},
              {"impact_step", nullptr},
              {"impact_t_s", nullptr},
              {"aborted", nullptr}};
    if (h.impact_step) {
        j["impact_step"] = *h.impact_step;
        j["impact_t_s"] = h.motion.at(*h.impact_step).t;
    }
    if (h.aborted) j["aborted"] = *h.aborted;
    return j;
}

int cmd_simulate(const fs::path& config_path, const fs::path& out_dir) {
    const json cfg = read_json(config_path);
    const auto mesh = mesh_from_config(cfg.value("geometry", json::object()));
    const auto scenario = cfg.at("scenario").get<geometry::Scenario>();
    const std::string mode = cfg.value("mode", "free");
    const dynamics::RecordOptions rec{cfg.value("record_stride", std::size_t{1}), false};
    dynamics::LoadHistory h;
    if (mode == "free")
        h = dynamics::simulate(scenario, mesh, rec);
    else if (mode == "guided")
        h = dynamics::simulate_guided(scenario, mesh, rec);
    else
        throw ConfigError("mode must be \"free\" or \"guided\", got \"" + mode + "\"");

    write_motion_csv(out_dir / "motion.csv", h);
    dataset::write_dlf(history_as_dataset(h, scenario), out_dir / "loads.dlf");
    const json summary = history_summary(h);
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");

    auto m = manifest_for("simulate");
    m.config = cfg;
    m.inputs = {{"config", config_path.string()}};
    m.outputs = {"motion.csv", "loads.dlf", "summary.json"};
    m.write(out_dir / "manifest.json");

    std::cout << "steps " << h.motion.size() << ", recorded frames " << h.frames.size() << ", surface exits "
              << h.surface_exits << '\n';
    if (h.aborted) {
        std::cerr << "simulation aborted: " << *h.aborted << '\n';
        return kNumeric;
    }
    return kOk;
}

int cmd_sweep(const fs::path& config_path, const fs::path& out_dir, std::size_t jobs,
              std::optional<std::uint64_t> seed_flag) {
    const json raw = read_json(config_path);
    auto cfg = raw.get<pipeline::DatasetConfig>();
    cfg.sweep.seed = resolve_seed(seed_flag, cfg.sweep.seed);
    cfg.validate();
    const auto mesh = geometry::build_fuselage_mesh(cfg.profile, cfg.n_frames, cfg.n_arc);
    const auto plan = dataset::sweep(cfg.sweep);

    struct Job {
        std::string split;
        std::size_t index;
        dataset::VelocityPair v;
    };
    std::vector<Job> all;
    for (std::size_t i = 0; i < plan.train.size(); ++i) all.push_back({"train", i, plan.train[i]});
    for (std::size_t i = 0; i < plan.val.size(); ++i) all.push_back({"val", i, plan.val[i]});
    for (std::size_t i = 0; i < plan.test.size(); ++i) all.push_back({"test", i, plan.test[i]});

    std::vector<json> summaries(all.size());
    pipeline::parallel_for(all.size(), jobs, [&](std::size_t k) {
        const auto& job = all[k];
        const auto scenario = pipeline::scenario_for(cfg.scenario, job.v);
        const auto h = dynamics::simulate(scenario, mesh, {cfg.extract.step_every, true});
        std::ostringstream name;
        name << job.split << '_' << std::setw(3) << std::setfill('0') << job.index;
        const fs::path dir = out_dir / "runs" / name.str();
        write_motion_csv(dir / "motion.csv", h);
        dataset::write_dlf(history_as_dataset(h, scenario), dir / "loads.dlf");
        summaries[k] = history_summary(h);
        write_text(dir / "summary.json", summaries[k].dump(2) + "\n");
    });

    std::ostringstream csv;
    csv << std::setprecision(9);
    csv << "split,index,u0_mps,w0_mps,pitch_deg,impact_t_s,surface_exits,peak_pressure_pa,aborted\n";
    std::size_t aborted = 0;
    for (std::size_t k = 0; k < all.size(); ++k) {
        const auto& s = summaries[k];
        csv << all[k].split << ',' << all[k].index << ',' << all[k].v.u0 << ',' << all[k].v.w0 << ','
            << all[k].v.pitch0 << ',';
        if (!s["impact_t_s"].is_null()) csv << s["impact_t_s"].get<double>();
        csv << ',' << s["surface_exits"].get<int>() << ',' << s["peak_pressure_pa"].get<double>() << ','
            << (s["aborted"].is_null() ? 0 : 1) << '\n';
        if (!s["aborted"].is_null()) ++aborted;
    }
    write_text(out_dir / "sweep.csv", csv.str());

    auto m = manifest_for("sweep");
    m.config = cfg;
    m.seeds = {{"sweep", cfg.sweep.seed}};
    m.inputs = {{"config", config_path.string()}};
    m.outputs = {"sweep.csv", "runs/"};
    m.write(out_dir / "manifest.json");
    std::cout << all.size() << " runs, " << aborted << " aborted\n";
    return aborted ? kNumeric : kOk;
}

// ---------------------------------------------------------------------------
// dataset

int cmd_dataset(const fs::path& config_path, const fs::path& out_dir, std::size_t jobs,
                std::optional<std::uint64_t> seed_flag) {
    auto cfg = read_json(config_path).get<pipeline::DatasetConfig>();
    cfg.sweep.seed = resolve_seed(seed_flag, cfg.sweep.seed);
    const auto built = pipeline::build_datasets(cfg, jobs);
    dataset::write_dlf(built.train, out_dir / "train.dlf");
    dataset::write_dlf(built.val, out_dir / "val.dlf");
    dataset::write_dlf(built.test, out_dir / "test.dlf");
    dataset::write_dlf(built.raw_train, out_dir / "raw_train.dlf");
    dataset::write_dlf(built.raw_test, out_dir / "raw_test.dlf");

    const json info = {
        {"window", {{"frame0", built.window.frame0}, {"arc0", built.window.arc0}, {"H", built.window.H},
                    {"W", built.window.W}}},
        {"x_min_pa", built.train.x_min},
        {"x_max_pa", built.train.x_max},
        {"cases", {{"train", built.train.cases.size()}, {"val", built.val.cases.size()}, {"test", built.test.cases.size()}}},
        {"warnings", built.warnings}};
    write_text(out_dir / "dataset.json", info.dump(2) + "\n");

    auto m = manifest_for("dataset");
    m.config = cfg;
    m.seeds = {{"sweep", cfg.sweep.seed}};
    m.inputs = {{"config", config_path.string()}};
    m.outputs = {"train.dlf", "val.dlf", "test.dlf", "raw_train.dlf", "raw_test.dlf", "dataset.json"};
    m.write(out_dir / "manifest.json");

    for (const auto& w : built.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "window (" << built.window.frame0 << ", " << built.window.arc0 << ") " << built.window.H << "x"
              << built.window.W << ", cases " << built.train.cases.size() << "/" << built.val.cases.size() << "/"
              << built.test.cases.size() << ", range [" << built.train.x_min << ", " << built.train.x_max << "] Pa\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// train

surrogates::ArchConfig arch_for(surrogates::Variant v, std::size_t patch, const json& overrides) {
    auto a = patch == 128 ? surrogates::ArchConfig::full(v) : surrogates::ArchConfig::desk(v, patch);
    if (!overrides.is_null()) {
        json j = a;
        for (const auto& [k, val] : overrides.items()) j[k] = val;
        j["variant"] = surrogates::to_string(v);
        a = j.get<surrogates::ArchConfig>();
    }
    a.validate();
    return a;
}

struct TrainArgs {
    std::string arch;
    fs::path data;
    fs::path val;
    fs::path raw;
    fs::path config;
    fs::path out = "models";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> patch;
    bool count_only = false;
};

fs::path split_path(const fs::path& data, const char* name) {
    return fs::is_directory(data) ? data / name : data.parent_path() / name;
}

int cmd_train(const TrainArgs& a) {
    const auto variant = surrogates::parse_variant(a.arch);
    const json cfg = a.config.empty() ? json::object() : read_json(a.config);
    const json arch_overrides = cfg.value("arch", json());

    if (a.count_only) {
        std::cout << surrogates::count_params(arch_for(variant, a.patch.value_or(128), arch_overrides)) << '\n';
        return kOk;
    }
    if (a.data.empty()) throw ConfigError("train needs --data");

    const fs::path train_path = fs::is_directory(a.data) ? a.data / "train.dlf" : a.data;
    const auto train = dataset::read_dlf(train_path);
    if (train.cases.empty()) throw ConfigError("training set is empty");
    if (train.cases.front().H != train.cases.front().W) throw ConfigError("surrogates need square patches");
    const auto arch = arch_for(variant, a.patch.value_or(train.cases.front().H), arch_overrides);

    auto tc = cfg.value("train", json::object()).get<training::TrainConfig>();
    tc.seed = resolve_seed(a.seed, tc.seed);
    if (a.epochs) tc.epochs = *a.epochs;

    surrogates::Model model(arch, tc.seed);
    const std::string stem = a.arch + "_seed" + std::to_string(tc.seed);
    auto on_epoch = [](const training::EpochLog& e) {
        std::cout << "epoch " << e.epoch << " loss " << e.train_loss;
        if (!std::isnan(e.val_loss)) std::cout << " val " << e.val_loss;
        std::cout << '\n';
    };

    training::TrainResult res;
    json inputs = {{"train", train_path.string()}};
    if (variant == surrogates::Variant::unfilter) {
        const fs::path raw_path = a.raw.empty() ? split_path(a.data, "raw_train.dlf") : a.raw;
        const auto raw = dataset::read_dlf(raw_path);
        std::vector<float> blurred, target;
        for (const auto& c : train.cases) blurred.insert(blurred.end(), c.data.begin(), c.data.end());
        for (const auto& c : raw.cases) target.insert(target.end(), c.data.begin(), c.data.end());
        if (blurred.size() != target.size()) throw ConfigError("blurred and raw training sets differ in size");
        res = training::train_unfilter(model, blurred, target, tc, on_epoch);
        inputs["raw"] = raw_path.string();
    } else {
        const fs::path val_path = a.val.empty() ? split_path(a.data, "val.dlf") : a.val;
        std::optional<dataset::Dataset> val;
        if (fs::exists(val_path)) {
            val = dataset::read_dlf(val_path);
            inputs["val"] = val_path.string();
        }
        res = training::train(model, train, val ? &*val : nullptr, tc, on_epoch);
    }

    pipeline::save_model(a.out / (stem + ".dkpt"), model);
    training::write_log_csv(a.out / (stem + "_log.csv"), res.history);

    auto m = manifest_for("train");
    m.config = {{"arch", arch}, {"train", tc}};
    m.seeds = {{"train", tc.seed}};
    m.inputs = inputs;
    m.outputs = {stem + ".dkpt", stem + "_log.csv"};
    m.write(a.out / (stem + ".manifest.json"));

    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
    const auto& last = res.history.back();
    std::cout << stem << ": " << model.param_count() << " parameters, final loss " << last.train_loss << " (epoch 1 "
              << res.history.front().train_loss << ")\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// rollout

int cmd_rollout(const fs::path& ckpt, const fs::path& data, std::optional<std::size_t> case_id, bool latent,
                const fs::path& out) {
    auto model = pipeline::load_model(ckpt);
    const auto test = dataset::read_dlf(data);
    dataset::Dataset pred;
    pred.x_min = test.x_min;
    pred.x_max = test.x_max;
    std::vector<std::size_t> ids;
    if (case_id) {
        if (*case_id >= test.cases.size())
            throw ConfigError("case " + std::to_string(*case_id) + " out of range (" +
                              std::to_string(test.cases.size()) + " cases)");
        ids.push_back(*case_id);
    } else {
        for (std::size_t i = 0; i < test.cases.size(); ++i) ids.push_back(i);
    }
    const std::size_t l = model->arch().window;
    for (std::size_t i : ids) {
        const auto& c = test.cases[i];
        dataset::CaseRecord r = c;
        r.data = pipeline::rollout_case(*model, c, latent);
        r.n_t = c.n_t > l ? c.n_t - l : 0;
        pred.cases.push_back(std::move(r));
        std::cout << "case " << i << ": " << pred.cases.back().n_t << " predicted frames\n";
    }
    dataset::write_dlf(pred, out);

    auto m = manifest_for("rollout");
    m.config = {{"arch", model->arch()}, {"latent_only", latent}, {"cases", ids}};
    m.inputs = {{"ckpt", ckpt.string()}, {"data", data.string()}};
    m.outputs = {out.filename().string()};
    m.write(fs::path(out.string() + ".manifest.json"));
    return kOk;
}

// ---------------------------------------------------------------------------
// rom

Eigen::MatrixXd snapshots(const dataset::CaseRecord& c) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(c.frame_size()), static_cast<Eigen::Index>(c.n_t));
    for (std::size_t t = 0; t < c.n_t; ++t) {
        const auto f = c.frame(t);
        for (std::size_t i = 0; i < f.size(); ++i) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = f[i];
    }
    return X;
}

int cmd_rom(const std::string& kind, std::size_t rank, const fs::path& data, std::size_t case_id,
            const fs::path& out) {
    const auto d = dataset::read_dlf(data);
    if (case_id >= d.cases.size()) throw ConfigError("case " + std::to_string(case_id) + " out of range");
    const auto& c = d.cases[case_id];
    const Eigen::MatrixXd X = snapshots(c);
    const double scale = d.x_max - d.x_min;

    std::ostringstream csv;
    csv << std::setprecision(9) << "step,rmse\n";
    const auto emit = [&](const Eigen::MatrixXd& approx) {
        double case_max = X.maxCoeff() * scale + d.x_min;
        for (Eigen::Index t = 0; t < X.cols(); ++t) {
            const double rmse = std::sqrt((approx.col(t) - X.col(t)).squaredNorm() / static_cast<double>(X.rows()));
            csv << t << ',' << rmse * scale / case_max << '\n';
        }
    };
    if (kind == "dmd") {
        const auto model = rom::dmd_fit(X, rank);
        rom::write_drom(out, model);
        emit(rom::dmd_predict(model, static_cast<std::size_t>(X.cols())));
        std::cout << "DMD rank " << model.rank() << ", eigen residual " << model.eig_residual << '\n';
    } else if (kind == "pod") {
        const auto pod = rom::pod_fit(X, rank);
        rom::write_drom(out, pod);
        emit(rom::pod_reconstruct(pod, X));
        std::cout << "POD rank " << rank << '\n';
    } else {
        throw ConfigError("--kind must be dmd or pod, got " + kind);
    }
    const fs::path csv_path = fs::path(out).replace_extension(".csv");
    write_text(csv_path, csv.str());

    auto m = manifest_for("rom");
    m.config = {{"kind", kind}, {"rank", rank}, {"case", case_id}};
    m.inputs = {{"data", data.string()}};
    m.outputs = {out.filename().string(), csv_path.filename().string()};
    m.write(fs::path(out.string() + ".manifest.json"));
    return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_evaluate(const fs::path& data, const fs::path& ckpt_dir, const std::string& models_arg,
                 const std::string& seeds_arg, bool kae_latent, const fs::path& out_dir, std::size_t jobs) {
    const auto test = dataset::read_dlf(data);
    const auto models = split_list(models_arg);
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_list(seeds_arg)) seeds.push_back(std::stoull(s));
    if (models.empty() || seeds.empty()) throw ConfigError("evaluate needs at least one model and one seed");

    std::vector<std::string> grid_models = models;
    if (kae_latent) grid_models.push_back("kae_latent");

    std::vector<std::string> missing;
    std::vector<std::unique_ptr<surrogates::Model>> owned;
    std::vector<pipeline::ModelRun> runs;
    for (const auto& name : models)
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const fs::path p = ckpt_dir / (name + "_seed" + std::to_string(seeds[s]) + ".dkpt");
            if (!fs::exists(p)) {
                missing.push_back(p.filename().string());
                continue;
            }
            owned.push_back(pipeline::load_model(p));
            runs.push_back({name, s, owned.back().get(), false});
            if (kae_latent && name == "kae") {
                owned.push_back(pipeline::load_model(p));
                runs.push_back({"kae_latent", s, owned.back().get(), true});
            }
        }
    if (!missing.empty()) {
        std::string msg = "missing run:";
        for (const auto& m : missing) msg += " " + m;
        throw EvalError(msg);
    }
    if (kae_latent && std::find(models.begin(), models.end(), "kae") == models.end())
        throw ConfigError("--kae-latent needs kae among the models");

    const auto res = pipeline::evaluate_runs(runs, grid_models, seeds.size(), test, jobs);
    res.grid.check_complete();
    const auto totals = eval::total_average_error(res.grid);
    std::vector<std::string> ties;
    const auto winners = eval::winner_table(res.grid, &ties);

    eval::write_rmse_csv(out_dir / "rmse_series.csv", res.grid, res.truth_norms);
    eval::write_totals_csv(out_dir / "totals.csv", totals, grid_models);
    eval::write_winners_csv(out_dir / "winners.csv", winners);

    auto m = manifest_for("evaluate");
    m.config = {{"models", grid_models}, {"seeds", seeds}, {"test_cases", res.case_ids}};
    m.seeds = seeds;
    m.inputs = {{"data", data.string()}, {"ckpt_dir", ckpt_dir.string()}};
    m.outputs = {"rmse_series.csv", "totals.csv", "winners.csv"};
    m.write(out_dir / "manifest.json");

    for (const auto& t : ties) std::cerr << "tie: " << t << '\n';
    for (const auto& name : grid_models) std::cout << name << " total average error " << totals.at(name) << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// plot

void write_grid_csv(const fs::path& path, std::span<const double> v, std::size_t H, std::size_t W) {
    std::ostringstream out;
    out << std::setprecision(9);
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) out << v[i * W + j] << (j + 1 == W ? '\n' : ',');
    write_text(path, out.str());
}

int plot_loads(const fs::path& data, std::size_t case_id, const std::string& frames_arg, double threshold,
               const fs::path& out_dir, std::vector<std::string>& outputs) {
    const auto d = dataset::read_dlf(data);
    if (case_id >= d.cases.size()) throw ConfigError("case " + std::to_string(case_id) + " out of range");
    auto c = d.cases[case_id];
    dataset::denormalize(c.data, d.x_min, d.x_max);
    const std::size_t F = c.frame_size();

    std::vector<std::size_t> frames;
    if (frames_arg.empty()) {
        for (std::size_t t = 0; t < c.n_t; t += std::max<std::size_t>(1, c.n_t / 4)) frames.push_back(t);
    } else {
        for (const auto& s : split_list(frames_arg)) frames.push_back(std::stoul(s));
    }
    const double vmax = c.n_t ? *std::max_element(c.data.begin(), c.data.end()) : 1.0;
    for (std::size_t t : frames) {
        if (t >= c.n_t) throw ConfigError("frame " + std::to_string(t) + " out of range");
        const auto f = c.frame(t);
        std::vector<double> v(f.begin(), f.end());
        const std::string stem = "case" + std::to_string(case_id) + "_frame" + std::to_string(t);
        svg::heatmap(out_dir / (stem + ".svg"), v, c.H, c.W,
                     {"case " + std::to_string(case_id) + ", frame " + std::to_string(t) + " [Pa]", 0.0, vmax, {}, 6.0});
        write_grid_csv(out_dir / (stem + ".csv"), v, c.H, c.W);
        outputs.push_back(stem + ".svg");
        outputs.push_back(stem + ".csv");
    }

    const auto peaks = eval::peak_time_map(c.data, c.n_t, F, threshold);
    std::vector<double> pv(peaks.begin(), peaks.end());
    const std::string stem = "case" + std::to_string(case_id) + "_peak_time";
    svg::heatmap(out_dir / (stem + ".svg"), pv, c.H, c.W,
                 {"time index of peak load, case " + std::to_string(case_id), 0.0,
                  static_cast<double>(std::max<std::size_t>(c.n_t, 2) - 1), 0.0, 6.0});
    write_grid_csv(out_dir / (stem + ".csv"), pv, c.H, c.W);
    io::ByteWriter w;
    std::vector<float> raw(pv.begin(), pv.end());
    w.f32s(raw);
    io::write_file(out_dir / (stem + ".f32"), w.buffer());
    outputs.insert(outputs.end(), {stem + ".svg", stem + ".csv", stem + ".f32"});
    return kOk;
}

int plot_rmse(const fs::path& csv_path, const fs::path& out_dir, std::vector<std::string>& outputs) {
    std::ifstream in(csv_path);
    if (!in) throw FormatError(FormatErrc::io, "cannot open " + csv_path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("model,case,seed,step,rmse", 0) != 0) throw ConfigError(csv_path.string() + " is not an RMSE table");
    // case -> model -> seed -> series
    std::map<std::size_t, std::map<std::string, std::map<std::size_t, std::vector<double>>>> runs;
    std::map<std::size_t, std::vector<double>> norms;
    while (std::getline(in, line)) {
        const auto f = split_list(line + ",");
        if (f.size() < 5) continue;
        const std::size_t c = std::stoul(f[1]), s = std::stoul(f[2]), t = std::stoul(f[3]);
        auto& series = runs[c][f[0]][s];
        if (series.size() <= t) series.resize(t + 1);
        series[t] = std::stod(f[4]);
        if (f.size() > 5) {
            auto& n = norms[c];
            if (n.size() <= t) n.resize(t + 1);
            n[t] = std::stod(f[5]);
        }
    }
    for (const auto& [c, by_model] : runs) {
        std::vector<svg::Series> lines;
        for (const auto& [name, by_seed] : by_model) {
            std::vector<std::vector<double>> per_seed;
            for (const auto& [s, v] : by_seed) per_seed.push_back(v);
            const auto agg = eval::aggregate_seeds(per_seed);
            lines.push_back({name + " avg", agg.avg});
            if (per_seed.size() > 1) {
                lines.push_back({name + " best", agg.best});
                lines.push_back({name + " worst", agg.worst});
            }
        }
        const std::string stem = "rmse_case" + std::to_string(c);
        svg::line_plot(out_dir / (stem + ".svg"), lines, "normalised RMSE, test case " + std::to_string(c),
                       "time step", "RMSE / case max");
        outputs.push_back(stem + ".svg");
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    g_argv.assign(argv, argv + argc);
    CLI::App app{"ditchkit: aircraft ditching loads, surrogate models and reduced-order baselines"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    std::size_t jobs = pipeline::default_jobs();
    app.add_option("--jobs", jobs, "worker threads for sweeps, datasets and evaluation")->check(CLI::PositiveNumber);

    fs::path config, out;
    std::optional<std::uint64_t> seed;

    auto* sim = app.add_subcommand("simulate", "run one scenario and write motion and load history");
    sim->add_option("--config", config, "simulation JSON")->required();
    sim->add_option("--out", out, "output directory")->required();

    auto* swp = app.add_subcommand("sweep", "simulate every scenario of a velocity sweep");
    swp->add_option("--config", config, "dataset JSON (geometry, scenario, sweep)")->required();
    swp->add_option("--out", out, "output directory")->required();
    swp->add_option("--seed", seed, "sweep seed");

    auto* dst = app.add_subcommand("dataset", "build normalised train/val/test load patches");
    dst->add_option("--config", config, "dataset JSON")->required();
    dst->add_option("--out", out, "output directory")->required();
    dst->add_option("--seed", seed, "sweep seed");

    TrainArgs ta;
    auto* trn = app.add_subcommand("train", "train a surrogate model");
    trn->add_option("--arch", ta.arch, "cjm, cjmdd, cjmnlb, kae or unfilter")->required();
    trn->add_option("--data", ta.data, "training DLF or dataset directory");
    trn->add_option("--val", ta.val, "validation DLF (default: val.dlf beside the training data)");
    trn->add_option("--raw", ta.raw, "unblurred training DLF for unfilter");
    trn->add_option("--config", ta.config, "training JSON");
    trn->add_option("--out", ta.out, "checkpoint directory");
    trn->add_option("--seed", ta.seed, "initialisation and shuffle seed");
    trn->add_option("--epochs", ta.epochs, "override the configured epoch count");
    trn->add_option("--patch", ta.patch, "patch size (count mode default 128)");
    trn->add_flag("--count-params-only", ta.count_only, "print the trainable parameter count and exit");

    fs::path ckpt, data;
    std::optional<std::size_t> case_id;
    bool latent = false;
    auto* rol = app.add_subcommand("rollout", "autoregressive prediction from the first window of test cases");
    rol->add_option("--ckpt", ckpt, "DKPT checkpoint")->required();
    rol->add_option("--data", data, "DLF with the cases to predict")->required();
    rol->add_option("--case", case_id, "single case index (default: all)");
    rol->add_flag("--latent", latent, "KAE: advance in latent space only");
    rol->add_option("--out", out, "predicted DLF")->required();

    std::string kind = "dmd";
    std::size_t rank = 10, rom_case = 0;
    auto* rm = app.add_subcommand("rom", "fit a DMD or POD model to the frames of one case");
    rm->add_option("--kind", kind, "dmd or pod")->check(CLI::IsMember({"dmd", "pod"}));
    rm->add_option("--rank", rank, "truncation rank")->required();
    rm->add_option("--data", data, "DLF")->required();
    rm->add_option("--case", rom_case, "case index");
    rm->add_option("--out", out, "DROM file")->required();

    fs::path ckpt_dir;
    std::string models = "cjm,cjmdd,cjmnlb,kae", seeds = "0";
    bool kae_latent = false;
    auto* ev = app.add_subcommand("evaluate", "RMSE series, total average errors and winner table");
    ev->add_option("--data", data, "test DLF")->required();
    ev->add_option("--ckpt-dir", ckpt_dir, "directory holding <model>_seed<N>.dkpt")->required();
    ev->add_option("--models", models, "comma-separated model list");
    ev->add_option("--seeds", seeds, "comma-separated seed list");
    ev->add_flag("--kae-latent", kae_latent, "also evaluate latent-only KAE rollouts");
    ev->add_option("--out", out, "output directory")->required();

    fs::path rmse_csv;
    std::string frames;
    std::size_t plot_case = 0;
    double threshold = 5e3;
    auto* plt = app.add_subcommand("plot", "SVG heatmaps of frames and peak times, RMSE line plots");
    plt->add_option("--data", data, "DLF to draw");
    plt->add_option("--case", plot_case, "case index");
    plt->add_option("--frames", frames, "comma-separated frame indices");
    plt->add_option("--threshold", threshold, "peak-time mask threshold, Pa");
    plt->add_option("--rmse", rmse_csv, "rmse_series.csv to draw");
    plt->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*sim) return cmd_simulate(config, out);
        if (*swp) return cmd_sweep(config, out, jobs, seed);
        if (*dst) return cmd_dataset(config, out, jobs, seed);
        if (*trn) return cmd_train(ta);
        if (*rol) return cmd_rollout(ckpt, data, case_id, latent, out);
        if (*rm) return cmd_rom(kind, rank, data, rom_case, out);
        if (*ev) return cmd_evaluate(data, ckpt_dir, models, seeds, kae_latent, out, jobs);
        if (*plt) {
            if (data.empty() && rmse_csv.empty()) throw ConfigError("plot needs --data or --rmse");
            std::vector<std::string> outputs;
            if (!data.empty()) plot_loads(data, plot_case, frames, threshold, out, outputs);
            if (!rmse_csv.empty()) plot_rmse(rmse_csv, out, outputs);
            auto m = manifest_for("plot");
            m.config = {{"case", plot_case}, {"frames", frames}, {"threshold_pa", threshold}};
            m.inputs = {{"data", data.string()}, {"rmse", rmse_csv.string()}};
            m.outputs = outputs;
            m.write(out / "manifest.json");
            return kOk;
        }
    } catch (const EvalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIncomplete;
    } catch (const SolverError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const FormatError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }
    return kConfig;
}
