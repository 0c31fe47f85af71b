#include "ditchkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "ditchkit/error.hpp"

namespace ditchkit::eval {

std::vector<double> rmse_series(std::span<const float> pred, std::span<const float> truth, std::size_t frame_size,
                                double case_max) {
    if (pred.size() != truth.size())
        throw EvalError("rmse_series: prediction has " + std::to_string(pred.size()) + " values, truth " +
                        std::to_string(truth.size()));
    if (frame_size == 0 || pred.size() % frame_size != 0) throw EvalError("rmse_series: ragged frames");
    if (!(case_max > 0.0)) throw EvalError("rmse_series: case maximum must be positive");
    const std::size_t n_t = pred.size() / frame_size;
    std::vector<double> out(n_t);
    for (std::size_t t = 0; t < n_t; ++t) {
        double s = 0.0;
        for (std::size_t k = t * frame_size; k < (t + 1) * frame_size; ++k) {
            const double d = static_cast<double>(pred[k]) - truth[k];
            s += d * d;
        }
        out[t] = std::sqrt(s / static_cast<double>(frame_size)) / case_max;
    }
    return out;
}

double time_mean(std::span<const double> series) {
    if (series.empty()) throw EvalError("time_mean of an empty series");
    return std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
}

SeedAggregate aggregate_seeds(const std::vector<std::vector<double>>& per_seed) {
    if (per_seed.empty()) throw EvalError("aggregate_seeds needs at least one seed");
    const std::size_t n = per_seed.front().size();
    SeedAggregate a;
    a.avg.assign(n, 0.0);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t s = 0; s < per_seed.size(); ++s) {
        if (per_seed[s].size() != n) throw EvalError("aggregate_seeds: series lengths differ");
        for (std::size_t t = 0; t < n; ++t) a.avg[t] += per_seed[s][t];
        const double m = time_mean(per_seed[s]);
        if (m < lo) {
            lo = m;
            a.best_seed = s;
        }
        if (m > hi) {
            hi = m;
            a.worst_seed = s;
        }
    }
    for (double& v : a.avg) v /= static_cast<double>(per_seed.size());
    a.best = per_seed[a.best_seed];
    a.worst = per_seed[a.worst_seed];
    return a;
}

RunGrid::RunGrid(std::vector<std::string> models, std::size_t n_cases, std::size_t n_seeds)
    : models_(std::move(models)), n_cases_(n_cases), n_seeds_(n_seeds) {
    if (models_.empty() || n_cases_ == 0 || n_seeds_ == 0) throw EvalError("empty evaluation grid");
}

void RunGrid::add(const std::string& model, std::size_t case_id, std::size_t seed, std::vector<double> series) {
    if (std::find(models_.begin(), models_.end(), model) == models_.end())
        throw EvalError("model " + model + " is not part of the grid");
    if (case_id >= n_cases_ || seed >= n_seeds_) throw EvalError("run index outside the grid");
    series_[{model, case_id, seed}] = std::move(series);
}

const std::vector<double>& RunGrid::at(const std::string& model, std::size_t case_id, std::size_t seed) const {
    auto it = series_.find({model, case_id, seed});
    if (it == series_.end())
        throw EvalError("missing run: model " + model + ", case " + std::to_string(case_id) + ", seed " +
                        std::to_string(seed));
    return it->second;
}

void RunGrid::check_complete() const {
    for (const auto& m : models_)
        for (std::size_t c = 0; c < n_cases_; ++c)
            for (std::size_t s = 0; s < n_seeds_; ++s) at(m, c, s);
}

std::map<std::string, double> total_average_error(const RunGrid& grid) {
    grid.check_complete();
    std::map<std::string, double> out;
    for (const auto& m : grid.models()) {
        double acc = 0.0;
        for (std::size_t c = 0; c < grid.n_cases(); ++c) {
            std::vector<std::vector<double>> seeds;
            for (std::size_t s = 0; s < grid.n_seeds(); ++s) seeds.push_back(grid.at(m, c, s));
            acc += time_mean(aggregate_seeds(seeds).avg);
        }
        out[m] = acc / static_cast<double>(grid.n_cases());
    }
    return out;
}

std::vector<WinnerRow> winner_table(const RunGrid& grid, std::vector<std::string>* ties) {
    grid.check_complete();
    std::vector<WinnerRow> rows;
    for (const auto& m : grid.models()) rows.push_back({m, 0, 0.0});
    for (std::size_t c = 0; c < grid.n_cases(); ++c) {
        std::size_t winner = 0;
        double best = std::numeric_limits<double>::infinity();
        bool tied = false;
        for (std::size_t k = 0; k < grid.models().size(); ++k) {
            double model_best = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < grid.n_seeds(); ++s)
                model_best = std::min(model_best, time_mean(grid.at(grid.models()[k], c, s)));
            if (model_best < best) {
                best = model_best;
                winner = k;
                tied = false;
            } else if (model_best == best) {
                tied = true;
            }
        }
        if (tied && ties) ties->push_back("case " + std::to_string(c) + ": tie resolved for " + grid.models()[winner]);
        ++rows[winner].wins;
    }
    for (auto& r : rows) r.percent = 100.0 * static_cast<double>(r.wins) / static_cast<double>(grid.n_cases());
    return rows;
}

std::vector<int> peak_time_map(std::span<const float> seq, std::size_t n_t, std::size_t frame_size,
                               double threshold) {
    if (n_t == 0 || seq.size() != n_t * frame_size) throw EvalError("peak_time_map: sequence shape mismatch");
    std::vector<int> out(frame_size, kMasked);
    for (std::size_t k = 0; k < frame_size; ++k) {
        float best = seq[k];
        int arg = 0;
        for (std::size_t t = 1; t < n_t; ++t)
            if (seq[t * frame_size + k] > best) {
                best = seq[t * frame_size + k];
                arg = static_cast<int>(t);
            }
        if (best >= threshold) out[k] = arg;
    }
    return out;
}

std::vector<double> frame_norms(std::span<const float> seq, std::size_t frame_size) {
    if (frame_size == 0 || seq.size() % frame_size != 0) throw EvalError("frame_norms: ragged frames");
    std::vector<double> out(seq.size() / frame_size);
    for (std::size_t t = 0; t < out.size(); ++t) {
        double s = 0.0;
        for (std::size_t k = 0; k < frame_size; ++k) s += static_cast<double>(seq[t * frame_size + k]) * seq[t * frame_size + k];
        out[t] = std::sqrt(s);
    }
    return out;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw FormatError(FormatErrc::io, "cannot create " + path.string());
    out.precision(10);
    return out;
}

}  // namespace

void write_rmse_csv(const std::filesystem::path& path, const RunGrid& grid,
                    const std::map<std::size_t, std::vector<double>>& truth_norms) {
    auto out = open_csv(path);
    out << "model,case,seed,step,rmse,truth_norm\n";
    for (const auto& m : grid.models())
        for (std::size_t c = 0; c < grid.n_cases(); ++c)
            for (std::size_t s = 0; s < grid.n_seeds(); ++s) {
                const auto& series = grid.at(m, c, s);
                auto norms = truth_norms.find(c);
                for (std::size_t t = 0; t < series.size(); ++t) {
                    out << m << ',' << c << ',' << s << ',' << t << ',' << series[t] << ',';
                    if (norms != truth_norms.end() && t < norms->second.size()) out << norms->second[t];
                    out << '\n';
                }
            }
}

void write_totals_csv(const std::filesystem::path& path, const std::map<std::string, double>& totals,
                      const std::vector<std::string>& order) {
    auto out = open_csv(path);
    out << "model,total_average_error\n";
    for (const auto& m : order) out << m << ',' << totals.at(m) << '\n';
}

void write_winners_csv(const std::filesystem::path& path, const std::vector<WinnerRow>& rows) {
    auto out = open_csv(path);
    out << "model,wins,percent\n";
    for (const auto& r : rows) out << r.model << ',' << r.wins << ',' << r.percent << '\n';
}

}  // namespace ditchkit::eval
