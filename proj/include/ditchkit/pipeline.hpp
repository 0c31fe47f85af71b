#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ditchkit/dataset.hpp"
#include "ditchkit/eval.hpp"
#include "ditchkit/geometry.hpp"
#include "ditchkit/surrogates.hpp"

namespace ditchkit::dataset {

void to_json(nlohmann::json& j, const SweepConfig& s);
void from_json(const nlohmann::json& j, SweepConfig& s);

}  // namespace ditchkit::dataset

namespace ditchkit::pipeline {

/// Logical core count, at least one.
std::size_t default_jobs();

/// Runs fn(0..n-1) on up to `jobs` threads. Each index is visited exactly once;
/// the first exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct DatasetConfig {
    nlohmann::json profile_spec = "d150";  ///< preset name or explicit profile, kept for the manifest
    geometry::FuselageProfile profile;
    std::size_t n_frames = 150;
    std::size_t n_arc = 171;
    geometry::Scenario scenario;  ///< template; u0, w0 and pitch come from the sweep
    dataset::SweepConfig sweep;
    std::size_t patch_h = 128;
    std::size_t patch_w = 128;
    dataset::ExtractOptions extract;
    bool blur = true;

    /// 64 x 48 mesh, 4 s runs, 32 x 32 patches, 20/4/6 cases.
    static DatasetConfig desk(std::uint64_t seed = 1);
    void validate() const;
};

void to_json(nlohmann::json& j, const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);

struct BuiltData {
    dataset::Window window;
    dataset::Dataset train, val, test;   ///< blurred (if enabled) and normalised
    dataset::Dataset raw_train, raw_test;  ///< before the blur, same normalisation
    std::vector<std::string> warnings;
};

/// Simulates every sweep scenario, picks the patch window from the training
/// loads, extracts, blurs and normalises with the training range. Cases that
/// never exceed the stop threshold are dropped with a warning.
BuiltData build_datasets(const DatasetConfig& cfg, std::size_t jobs);

geometry::Scenario scenario_for(const geometry::Scenario& base, const dataset::VelocityPair& v);

/// Autoregressive prediction of frames window .. n_t-1 of a case from its
/// first `window` frames (normalised units, (n_t - window) x H x W).
std::vector<float> rollout_case(surrogates::Model& m, const dataset::CaseRecord& c, bool latent_only = false);

/// RMSE series of a rollout against frames window .. n_t-1, computed in Pa and
/// divided by the case maximum.
std::vector<double> case_rmse(std::span<const float> pred, const dataset::CaseRecord& truth, std::size_t window,
                              double x_min, double x_max);

/// Model rebuilt from a DKPT checkpoint.
std::unique_ptr<surrogates::Model> load_model(const std::filesystem::path& ckpt);

void save_model(const std::filesystem::path& ckpt, surrogates::Model& m);

struct ModelRun {
    std::string model;
    std::size_t seed = 0;
    surrogates::Model* net = nullptr;
    bool latent_only = false;  ///< KAE: advance in latent space only
};

struct GridResult {
    eval::RunGrid grid;
    std::vector<std::size_t> case_ids;  ///< test-case index of every grid case
    std::map<std::size_t, std::vector<double>> truth_norms;  ///< per grid case, Pa
};

/// Rolls every run out on every test case long enough for all windows and
/// collects the normalised RMSE series. Runs are processed in parallel; each
/// model object is touched by one worker only.
GridResult evaluate_runs(const std::vector<ModelRun>& runs, const std::vector<std::string>& models,
                         std::size_t n_seeds, const dataset::Dataset& test, std::size_t jobs);

}  // namespace ditchkit::pipeline
