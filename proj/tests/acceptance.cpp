// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any hard criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ditchkit/dataset.hpp"
#include "ditchkit/dynamics.hpp"
#include "ditchkit/error.hpp"
#include "ditchkit/eval.hpp"
#include "ditchkit/hydro.hpp"
#include "ditchkit/nn/layers.hpp"
#include "ditchkit/nn/optim.hpp"
#include "ditchkit/pipeline.hpp"
#include "ditchkit/rom.hpp"
#include "ditchkit/surrogates.hpp"
#include "ditchkit/training.hpp"

using namespace ditchkit;
using Clock = std::chrono::steady_clock;
using surrogates::ArchConfig;
using surrogates::Variant;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class... A>
std::string fmt(const char* f, A... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

// ---------------------------------------------------------------- 1
Outcome param_counts() {
    const auto t0 = Clock::now();
    const std::map<Variant, std::size_t> want{{Variant::cjm, 1844938},
                                              {Variant::cjmdd, 260541},
                                              {Variant::cjmnlb, 1855178},
                                              {Variant::kae, 216751}};
    Outcome o{true, ""};
    for (const auto& [v, n] : want) {
        const std::size_t got = surrogates::count_params(ArchConfig::full(v));
        o.pass = o.pass && got == n;
        o.detail += surrogates::to_string(v) + "=" + std::to_string(got) + " ";
    }
    const double s = since(t0);
    o.pass = o.pass && s < 1.0;
    o.detail += fmt("in %.2fs", s);
    return o;
}

// ---------------------------------------------------------------- 2
Outcome gradients() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string where;
    auto run = [&](nn::Layer<double>& l, nn::ParamStore<double>& s, nn::Shape in, std::uint64_t seed) {
        nn::Rng rng(seed);
        l.initialize(rng);
        for (auto& [name, p] : s)
            for (auto& v : p.value.data) v += 0.1 * rng.normal();
        nn::Tensor<double> x(std::move(in));
        for (auto& v : x.data) v = rng.normal();
        const auto r = nn::grad_check(l, s, x, rng);
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            where = l.name() + ":" + r.worst;
        }
    };
    {
        nn::ParamStore<double> s;
        nn::Dense<double> l(s, "dense", 6, 4);
        run(l, s, {3, 6}, 1);
    }
    {
        nn::ParamStore<double> s;
        nn::Conv2D<double> l(s, "conv", 3, 4, 3, 2);
        run(l, s, {2, 6, 5, 3}, 2);
    }
    {
        nn::ParamStore<double> s;
        nn::Conv2DTranspose<double> l(s, "deconv", 4, 3, 3, 2);
        run(l, s, {2, 3, 3, 4}, 3);
    }
    for (bool seq : {true, false}) {
        nn::ParamStore<double> s;
        nn::LSTM<double> l(s, "lstm", 4, 5, seq);
        run(l, s, {2, 3, 4}, 4);
    }
    {
        nn::ParamStore<double> s;
        nn::NonLocal<double> l(s, "nonlocal", 4);
        run(l, s, {2, 3, 3, 4}, 5);
    }
    for (auto a : {nn::Activation::leaky_relu, nn::Activation::tanh, nn::Activation::sigmoid}) {
        nn::ParamStore<double> s;
        nn::Pointwise<double> l(a);
        run(l, s, {4, 9}, 6);
    }
    const double t = since(t0);
    return {worst < 1e-5 && t < 60.0, fmt("max rel error %.2e (%s) in %.1fs", worst, where.c_str(), t)};
}

// ---------------------------------------------------------------- 3
Outcome momentum_identity() {
    const double rho = 1025.0, k = 1.0, g = 9.81, A0 = 0.0;
    auto c = [](double t) { return 0.3 + 0.8 * t + 0.2 * std::sin(3.0 * t); };
    auto V = [](double t) { return 2.0 * std::exp(-0.7 * t) + 0.3 * std::cos(5.0 * t); };
    auto m_a = [&](double t) { return rho * std::numbers::pi * c(t) * c(t) / 2.0; };
    double worst = 0.0;
    const double h = 1e-5;
    for (int i = 0; i <= 200; ++i) {
        const double t = 0.01 * i;
        const double dc = (c(t + h) - c(t - h)) / (2 * h);
        const double dV = (V(t + h) - V(t - h)) / (2 * h);
        hydro::SectionKinematics s{c(t), V(t), dV, dc, 2.0 * c(t) * dc};
        const double half = hydro::section_force(s, rho, k, g, A0) + rho * g * A0;
        const double momentum = -(m_a(t + h) * V(t + h) - m_a(t - h) * V(t - h)) / (2 * h);
        worst = std::max(worst, std::abs(2.0 * half - momentum) / std::max(std::abs(momentum), 1.0));
    }
    return {worst < 1e-3, fmt("max relative deviation %.2e over 201 samples", worst)};
}

// ---------------------------------------------------------------- 4
Outcome pileup_closure() {
    const auto s = geometry::build_circular_section(1.0, 721);
    double worst = 0.0;
    int n = 0;
    for (int i = 1; i <= 40; ++i)
        for (double k : {0.25, 0.5, 0.75, 1.0, 1.25, 1.5}) {
            const double T0 = 0.02 * i;
            auto residual = [&](double T) {
                const auto p = s.props(T);
                return T - T0 - hydro::kPileupCoefficient * k * (p.c > 1e-12 ? p.A / p.c : 0.0);
            };
            double lo = T0, hi = T0 + 2.0;
            if (residual(hi) <= 0.0) continue;  // pile-up above the crown
            for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
                const double mid = 0.5 * (lo + hi);
                (residual(mid) > 0.0 ? hi : lo) = mid;
            }
            worst = std::max(worst, std::abs(hydro::pileup_solve(s, T0, k).T - 0.5 * (lo + hi)));
            ++n;
        }
    return {worst < 1e-7 && n > 100, fmt("max |T - T_bisect| %.2e m over %d (T0, k) pairs", worst, n)};
}

// ---------------------------------------------------------------- 5
Outcome blur_conservation() {
    nn::Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t H = 1 + rng.index(40), W = 1 + rng.index(40);
        std::vector<float> in(H * W, 0.0f), out(H * W);
        const int kind = trial % 3;
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                const bool edge = i == 0 || j == 0 || i + 1 == H || j + 1 == W;
                if (kind == 0 || (kind == 1 && edge) || (kind == 2 && rng.uniform() < 0.05))
                    in[i * W + j] = static_cast<float>(rng.uniform() * 1e6);
            }
        dataset::gaussian_blur3(in, H, W, out);
        double a = 0.0, b = 0.0;
        for (std::size_t q = 0; q < in.size(); ++q) {
            a += in[q];
            b += out[q];
        }
        if (a > 0.0) worst = std::max(worst, std::abs(b - a) / a);
    }
    return {worst < 1e-6, fmt("max relative sum change %.2e over 1000 fields", worst)};
}

// ---------------------------------------------------------------- 6
Outcome dmd_exactness() {
    nn::Rng rng(6);
    auto rnd = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
        return m;
    };
    Eigen::Matrix3d B = Eigen::Matrix3d::Zero();
    B(0, 0) = 0.9;
    B(1, 1) = B(2, 2) = 0.5 * std::cos(0.3);
    B(1, 2) = -0.5 * std::sin(0.3);
    B(2, 1) = 0.5 * std::sin(0.3);
    const Eigen::Matrix3d S = rnd(3, 3) + 3.0 * Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d A = S * B * S.inverse();
    const Eigen::MatrixXd P = rnd(64, 3);
    Eigen::MatrixXd X(64, 50);
    Eigen::Vector3d y(1.0, -0.5, 0.25);
    for (int t = 0; t < 50; ++t) {
        X.col(t) = P * y;
        y = A * y;
    }
    const auto m = rom::dmd_fit(X, 3);
    double eig_err = 0.0;
    for (const std::complex<double> w : {std::complex<double>(0.9), std::polar(0.5, 0.3), std::polar(0.5, -0.3)}) {
        double best = 1e9;
        for (Eigen::Index i = 0; i < m.eigenvalues.size(); ++i) best = std::min(best, std::abs(m.eigenvalues(i) - w));
        eig_err = std::max(eig_err, best);
    }
    const double traj_err = (rom::dmd_predict(m, 20) - X.leftCols(20)).cwiseAbs().maxCoeff();

    const Eigen::MatrixXd Z = rnd(32, 5);
    const auto id = rom::dmd_fit(Z, Z, 5);
    double unit_err = 0.0;
    for (Eigen::Index i = 0; i < 5; ++i) unit_err = std::max(unit_err, std::abs(id.eigenvalues(i) - 1.0));
    return {eig_err < 1e-8 && traj_err < 1e-6 && unit_err < 1e-8,
            fmt("eigenvalue error %.1e, 20-step error %.1e, identity |lambda-1| %.1e", eig_err, traj_err, unit_err)};
}

// ---------------------------------------------------------------- 7
Outcome pod_checks() {
    nn::Rng rng(7);
    Eigen::MatrixXd X(200, 24);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.normal() * std::exp(-0.15 * static_cast<double>(j));
    const auto full = rom::pod_fit(X, 24);
    const double full_err = (rom::pod_reconstruct(full, X) - X).norm() / X.norm();
    bool monotone = true, beats = true;
    double prev = 1e300;
    for (std::size_t r = 1; r <= 24; ++r) {
        const auto pod = rom::pod_fit(X, r);
        const double err = (rom::pod_reconstruct(pod, X) - X).norm();
        monotone = monotone && err <= prev + 1e-12;
        prev = err;
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::MatrixXd G(200, static_cast<Eigen::Index>(r));
            for (Eigen::Index i = 0; i < G.rows(); ++i)
                for (Eigen::Index j = 0; j < G.cols(); ++j) G(i, j) = rng.normal();
            const Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
            const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(200, G.cols());
            beats = beats && err <= (X - Q * (Q.transpose() * X)).norm() + 1e-12;
        }
    }
    return {full_err < 1e-8 && monotone && beats,
            fmt("full-rank error %.1e, monotone %s, beats 20 random bases at all 24 ranks %s", full_err,
                monotone ? "yes" : "no", beats ? "yes" : "no")};
}

// ---------------------------------------------------------------- 8, 9
struct Trained {
    std::unique_ptr<surrogates::Model> model;
    training::TrainResult result;
    double seconds = 0.0;
};

training::TrainConfig desk_training(std::uint64_t seed) {
    training::TrainConfig tc;
    tc.epochs = 300;
    tc.batch = 32;
    tc.lr = 2e-3;
    tc.lr_final = 1e-5;
    tc.eps = 1e-12;
    tc.warmup = 75;
    tc.seed = seed;
    return tc;
}

Trained train_one(ArchConfig arch, const pipeline::BuiltData& d, std::uint64_t seed) {
    Trained t;
    const auto t0 = Clock::now();
    t.model = std::make_unique<surrogates::Model>(arch, seed);
    t.result = training::train(*t.model, d.train, &d.val, desk_training(seed));
    t.seconds = since(t0);
    return t;
}

double mean_rmse(surrogates::Model& m, const pipeline::BuiltData& d, bool latent, std::vector<double>* per_case,
                 std::size_t skip_to = 0) {
    // skip_to aligns windows of different length to the same first predicted frame
    double total = 0.0;
    std::size_t n = 0;
    const std::size_t l = m.arch().window;
    for (const auto& c : d.test.cases) {
        const std::size_t start = std::max(l, skip_to);
        if (c.n_t <= start) continue;
        auto pred = pipeline::rollout_case(m, c, latent);
        auto s = pipeline::case_rmse(pred, c, l, d.test.x_min, d.test.x_max);
        s.erase(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(start - l));
        const double v = eval::time_mean(s);
        if (per_case) per_case->push_back(v);
        total += v;
        ++n;
    }
    return n ? total / static_cast<double>(n) : std::nan("");
}

struct DeskRun {
    pipeline::BuiltData data;
    std::map<Variant, Trained> models;
};

Outcome desk_pipeline(DeskRun& run) {
    const auto t0 = Clock::now();
    run.data = pipeline::build_datasets(pipeline::DatasetConfig::desk(1), pipeline::default_jobs());
    const auto& d = run.data;
    std::printf("      dataset: %zu/%zu/%zu cases, window (%zu, %zu), range [%.6g, %.6g] Pa, built in %.1fs\n",
                d.train.cases.size(), d.val.cases.size(), d.test.cases.size(), d.window.frame0, d.window.arc0,
                d.train.x_min, d.train.x_max, since(t0));
    for (const auto& w : d.warnings) std::printf("      warning: %s\n", w.c_str());

    bool pass = d.train.cases.size() + d.val.cases.size() + d.test.cases.size() > 0;
    std::string detail;
    const std::vector<Variant> variants{Variant::cjm, Variant::cjmdd, Variant::cjmnlb, Variant::kae};
    std::vector<Trained> trained(variants.size());
    pipeline::parallel_for(variants.size(), pipeline::default_jobs(),
                           [&](std::size_t i) { trained[i] = train_one(ArchConfig::desk(variants[i]), d, 1); });
    for (std::size_t i = 0; i < variants.size(); ++i) {
        auto& t = trained[i];
        const auto& h = t.result.history;
        const double ratio = h.back().train_loss / h.front().train_loss;
        bool finite = true;
        for (const auto& c : d.test.cases)
            for (float v : pipeline::rollout_case(*t.model, c)) finite = finite && std::isfinite(v);
        bool ok = ratio < 0.25 && finite;
        std::string extra;
        if (variants[i] == Variant::kae) {
            double min_std = 1e300;
            for (const auto& e : h)
                if (e.epoch > desk_training(1).warmup && std::isfinite(e.latent_std))
                    min_std = std::min(min_std, e.latent_std);
            ok = ok && min_std > 1e-3 && !t.result.collapsed;
            extra = fmt(", latent std >= %.3g", min_std);
        }
        std::printf("      %-6s loss %.4g -> %.4g (ratio %.3f), rollouts %s%s, %.0fs\n",
                    surrogates::to_string(variants[i]).c_str(), h.front().train_loss, h.back().train_loss, ratio,
                    finite ? "finite" : "NON-FINITE", extra.c_str(), t.seconds);
        detail += surrogates::to_string(variants[i]) + fmt(" %.3f ", ratio);
        pass = pass && ok;
        run.models[variants[i]] = std::move(t);
    }
    const double s = since(t0);
    pass = pass && s < 1800.0;
    return {pass, "loss ratios " + detail + fmt("(limit 0.25), %.0fs", s)};
}

Outcome soft_ordering(DeskRun& run) {
    const auto& d = run.data;
    std::vector<std::string> warnings;
    const std::size_t n_seeds = 3;

    // (a) CJMDD vs CJM, seed by seed
    std::vector<Trained> extra(2 * (n_seeds - 1) + n_seeds);
    pipeline::parallel_for(extra.size(), pipeline::default_jobs(), [&](std::size_t i) {
        if (i < 2 * (n_seeds - 1)) {
            const Variant v = i % 2 ? Variant::cjmdd : Variant::cjm;
            extra[i] = train_one(ArchConfig::desk(v), d, 2 + i / 2);
        } else {
            auto a = ArchConfig::desk(Variant::cjmdd);
            a.window = 1;
            extra[i] = train_one(a, d, 1 + i - 2 * (n_seeds - 1));
        }
    });
    std::vector<surrogates::Model*> cjm{run.models[Variant::cjm].model.get()};
    std::vector<surrogates::Model*> cjmdd{run.models[Variant::cjmdd].model.get()};
    for (std::size_t s = 0; s + 1 < n_seeds; ++s) {
        cjm.push_back(extra[2 * s].model.get());
        cjmdd.push_back(extra[2 * s + 1].model.get());
    }
    std::size_t a_wins = 0;
    std::string a_data;
    for (std::size_t s = 0; s < n_seeds; ++s) {
        const double e_cjm = mean_rmse(*cjm[s], d, false, nullptr), e_dd = mean_rmse(*cjmdd[s], d, false, nullptr);
        a_wins += e_dd <= e_cjm;
        a_data += fmt(" seed%zu %.4f/%.4f", s + 1, e_dd, e_cjm);
    }
    const bool a_ok = 2 * a_wins > n_seeds;
    std::printf("      (a) CJMDD <= CJM total average error in %zu/%zu seeds:%s\n", a_wins, n_seeds, a_data.c_str());
    if (!a_ok) warnings.push_back("(a)");

    // (b) KAE full-dimension vs latent-only rollout, per test case
    auto& kae = *run.models[Variant::kae].model;
    std::vector<double> full, latent;
    mean_rmse(kae, d, false, &full);
    mean_rmse(kae, d, true, &latent);
    std::size_t b_wins = 0;
    std::string b_data;
    for (std::size_t i = 0; i < full.size(); ++i) {
        b_wins += full[i] <= latent[i];
        b_data += fmt(" %.4f/%.4f", full[i], latent[i]);
    }
    const bool b_ok = 2 * b_wins > full.size();
    std::printf("      (b) KAE full <= latent-only in %zu/%zu test cases:%s\n", b_wins, full.size(), b_data.c_str());
    if (!b_ok) warnings.push_back("(b)");

    // (c) CJMDD with one input frame vs three, same seeds and same evaluated frames
    std::size_t c_wins = 0;
    std::string c_data;
    for (std::size_t s = 0; s < n_seeds; ++s) {
        auto& one = *extra[2 * (n_seeds - 1) + s].model;
        const double e1 = mean_rmse(one, d, false, nullptr, 3), e3 = mean_rmse(*cjmdd[s], d, false, nullptr, 3);
        c_wins += e3 <= e1;
        c_data += fmt(" seed%zu l3 %.4f / l1 %.4f", s + 1, e3, e1);
    }
    const bool c_ok = 2 * c_wins > n_seeds;
    std::printf("      (c) CJMDD error not larger with 3 input frames than 1 in %zu/%zu seeds:%s\n", c_wins, n_seeds,
                c_data.c_str());
    if (!c_ok) warnings.push_back("(c)");

    std::string detail = "soft criterion";
    if (warnings.empty()) {
        detail += ", all three orderings hold";
    } else {
        detail += ", WARNING ordering";
        for (const auto& w : warnings) detail += " " + w;
        detail += " not met (data above)";
    }
    return {true, detail};
}

// ---------------------------------------------------------------- 10
Outcome validation_replay() {
    const auto tn_mesh = geometry::build_fuselage_mesh(geometry::tn2929_model_d_profile(), 100, 41);
    const auto tn = dynamics::simulate(geometry::tn2929_scenario(), tn_mesh, {10, false});
    const bool skip = tn.surface_exits >= 1 && !tn.aborted;

    const auto plate_mesh = geometry::build_fuselage_mesh(geometry::curved_plate_profile(), 101, 21);
    const auto plate = dynamics::simulate_guided(geometry::curved_plate_scenario(), plate_mesh, {1, false});
    std::vector<double> arrival;
    for (std::size_t station : {10, 30, 50, 70, 90}) {
        float peak = -1.0f;
        double when = -1.0;
        for (const auto& f : plate.frames) {
            const float p = f.pressure[station * plate.n_arc];
            if (p > peak) {
                peak = p;
                when = f.t;
            }
        }
        arrival.push_back(peak > 0.0f ? when : -1.0);
    }
    bool increasing = arrival.front() >= 0.0;
    for (std::size_t i = 1; i < arrival.size(); ++i) increasing = increasing && arrival[i] > arrival[i - 1];
    std::string times;
    for (double t : arrival) times += fmt(" %.4f", t);
    return {skip && increasing, fmt("TN2929 surface exits %d; plate peak arrival [s]:", tn.surface_exits) + times};
}

// ---------------------------------------------------------------- 11
Outcome eval_fixtures() {
    bool ok = true;
    const std::vector<float> truth{0, 0, 0, 4}, pred{0, 0, 0, 2};
    ok = ok && eval::rmse_series(pred, truth, 4, 4.0) == std::vector<double>{0.25};

    eval::RunGrid g({"a", "b"}, 2, 2);
    g.add("a", 0, 0, {0.1, 0.3});
    g.add("a", 0, 1, {0.3, 0.5});
    g.add("a", 1, 0, {0.25, 0.25});
    g.add("a", 1, 1, {0.25, 0.25});
    g.add("b", 0, 0, {0.5, 0.5});
    g.add("b", 0, 1, {0.5, 0.5});
    g.add("b", 1, 0, {0.125, 0.125});
    g.add("b", 1, 1, {0.5, 0.5});
    const auto tot = eval::total_average_error(g);
    // a: case 0 -> (0.2 + 0.4) / 2 = 0.3, case 1 -> 0.25; b: 0.5 and 0.3125
    ok = ok && std::abs(tot.at("a") - 0.275) < 1e-15 && std::abs(tot.at("b") - 0.40625) < 1e-15;
    const auto w = eval::winner_table(g);
    ok = ok && w.size() == 2 && w[0].wins == 1 && w[1].wins == 1 && w[0].percent == 50.0;

    const std::vector<float> seq{6e3f, 1e3f, 9e3f, 7e3f, 8e3f, 2e3f, 9e3f, 6e3f, 7e3f, 4e3f, 1e3f, 5.5e3f};
    ok = ok && eval::peak_time_map(seq, 3, 4) == std::vector<int>{1, eval::kMasked, 0, 0};
    return {ok, "rmse 0.25, totals 0.275/0.40625, winners 1/1, peak map {1, masked, 0, 0}"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s  %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    };
    DeskRun desk;
    report(1, "parameter counts", param_counts);
    report(2, "gradient checks", gradients);
    report(3, "momentum identity", momentum_identity);
    report(4, "pile-up closure", pileup_closure);
    report(5, "blur conservation", blur_conservation);
    report(6, "DMD exactness", dmd_exactness);
    report(7, "POD", pod_checks);
    report(8, "desk training pipeline", [&] { return desk_pipeline(desk); });
    report(9, "soft ordering", [&] {
        if (desk.models.size() < 4) return Outcome{true, "soft criterion, skipped: desk models unavailable"};
        return soft_ordering(desk);
    });
    report(10, "validation replay", validation_replay);
    report(11, "evaluation arithmetic", eval_fixtures);
    return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
