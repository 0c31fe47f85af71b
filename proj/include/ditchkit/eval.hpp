#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace ditchkit::eval {

/// Per-frame RMSE between pred and truth (n_t frames of frame_size values),
/// divided by case_max.
std::vector<double> rmse_series(std::span<const float> pred, std::span<const float> truth, std::size_t frame_size,
                                double case_max);

double time_mean(std::span<const double> series);

struct SeedAggregate {
    std::vector<double> avg;
    std::vector<double> best;   ///< whole series of the seed with the lowest time mean
    std::vector<double> worst;  ///< whole series of the seed with the highest time mean
    std::size_t best_seed = 0;
    std::size_t worst_seed = 0;
};

SeedAggregate aggregate_seeds(const std::vector<std::vector<double>>& per_seed);

/// RMSE series keyed by (model, case, seed).
class RunGrid {
public:
    RunGrid(std::vector<std::string> models, std::size_t n_cases, std::size_t n_seeds);

    void add(const std::string& model, std::size_t case_id, std::size_t seed, std::vector<double> series);
    const std::vector<double>& at(const std::string& model, std::size_t case_id, std::size_t seed) const;
    /// Throws EvalError naming the first missing run.
    void check_complete() const;

    const std::vector<std::string>& models() const noexcept { return models_; }
    std::size_t n_cases() const noexcept { return n_cases_; }
    std::size_t n_seeds() const noexcept { return n_seeds_; }

private:
    std::vector<std::string> models_;
    std::size_t n_cases_, n_seeds_;
    std::map<std::tuple<std::string, std::size_t, std::size_t>, std::vector<double>> series_;
};

/// Mean over seeds, then over time, then over cases, per model.
std::map<std::string, double> total_average_error(const RunGrid& grid);

struct WinnerRow {
    std::string model;
    std::size_t wins = 0;
    double percent = 0.0;
};

/// For each case the best seed of every model competes; the lowest time-mean
/// RMSE wins, ties going to the earlier model. Tied cases are appended to `ties`.
std::vector<WinnerRow> winner_table(const RunGrid& grid, std::vector<std::string>* ties = nullptr);

inline constexpr int kMasked = -1;

/// Per point, the time index of its maximum load (earliest on ties), or
/// kMasked where the maximum stays below `threshold`.
std::vector<int> peak_time_map(std::span<const float> seq, std::size_t n_t, std::size_t frame_size,
                               double threshold = 5e3);

/// Frobenius norm of every frame (background column of the RMSE plots).
std::vector<double> frame_norms(std::span<const float> seq, std::size_t frame_size);

void write_rmse_csv(const std::filesystem::path& path, const RunGrid& grid,
                    const std::map<std::size_t, std::vector<double>>& truth_norms = {});
void write_totals_csv(const std::filesystem::path& path, const std::map<std::string, double>& totals,
                      const std::vector<std::string>& order);
void write_winners_csv(const std::filesystem::path& path, const std::vector<WinnerRow>& rows);

}  // namespace ditchkit::eval
