#include "ditchkit/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include "ditchkit/error.hpp"

namespace ditchkit::training {

using nn::Tensor;
using surrogates::Variant;

void TrainConfig::validate(Variant v) const {
    if (epochs == 0 || batch == 0) throw ConfigError("epochs and batch size must be positive");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (lr_final >= 0.0 && !(lr_final <= lr)) throw ConfigError("lr_final must not exceed lr");
    if (!(eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (weights.reconst < 0.0 || weights.predict < 0.0 || weights.linear < 0.0)
        throw ConfigError("loss weights must be non-negative");
    if (v == Variant::kae && warmup >= epochs) throw ConfigError("warmup must be shorter than the training run");
}

double TrainConfig::lr_at(std::size_t epoch) const {
    if (lr_final < 0.0 || epochs < 2) return lr;
    const double f = static_cast<double>(epoch - 1) / static_cast<double>(epochs - 1);
    return lr_final + 0.5 * (lr - lr_final) * (1.0 + std::cos(std::numbers::pi * f));
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"epochs", c.epochs},
         {"batch", c.batch},
         {"lr", c.lr},
         {"lr_final", c.lr_final},
         {"adam_eps", c.eps},
         {"seed", c.seed},
         {"warmup_epochs", c.warmup},
         {"collapse_threshold", c.collapse_threshold},
         {"loss_weights", {{"reconst", c.weights.reconst}, {"predict", c.weights.predict}, {"linear", c.weights.linear}}}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    const TrainConfig d;
    c.epochs = j.value("epochs", d.epochs);
    c.batch = j.value("batch", d.batch);
    c.lr = j.value("lr", d.lr);
    c.lr_final = j.value("lr_final", d.lr_final);
    c.eps = j.value("adam_eps", d.eps);
    c.seed = j.value("seed", d.seed);
    c.warmup = j.value("warmup_epochs", d.warmup);
    c.collapse_threshold = j.value("collapse_threshold", d.collapse_threshold);
    c.weights = d.weights;
    if (j.contains("loss_weights")) {
        const auto& w = j.at("loss_weights");
        c.weights.reconst = w.value("reconst", d.weights.reconst);
        c.weights.predict = w.value("predict", d.weights.predict);
        c.weights.linear = w.value("linear", d.weights.linear);
    }
}

Tensor<float> gather_sequences(const dataset::Dataset& d, std::span<const std::pair<std::size_t, std::size_t>> idx,
                               std::size_t length) {
    if (idx.empty()) throw ConfigError("no sequences to gather");
    const auto& c0 = d.cases.at(idx.front().first);
    const std::size_t F = c0.frame_size();
    Tensor<float> out({idx.size(), length, c0.H, c0.W});
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& c = d.cases[idx[k].first];
        if (c.frame_size() != F) throw ShapeError("cases have different patch sizes");
        std::copy_n(c.data.data() + idx[k].second * F, length * F, out.ptr() + k * length * F);
    }
    return out;
}

double latent_std(surrogates::Model& model, const Tensor<float>& windows) {
    const Tensor<float> z = model.encode(windows);
    const std::size_t B = z.dim(0), m = z.dim(1);
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t b = 0; b < B; ++b) mean += z[b * m + j];
        mean /= static_cast<double>(B);
        for (std::size_t b = 0; b < B; ++b) sq += (z[b * m + j] - mean) * (z[b * m + j] - mean);
        acc += std::sqrt(sq / static_cast<double>(B));
    }
    return acc / static_cast<double>(m);
}

surrogates::LossTerms evaluate_loss(surrogates::Model& model, const dataset::Dataset& d, double linear_weight,
                                    std::size_t batch) {
    const std::size_t l = model.arch().window;
    const auto idx = dataset::sequence_index(d.cases, l);
    surrogates::LossTerms sum;
    if (idx.empty()) return sum;
    surrogates::LossWeights w;
    w.linear = linear_weight;
    // gradients are accumulated into a scratch copy, then discarded
    std::vector<std::vector<float>> saved;
    for (auto& [_, p] : model.params()) saved.push_back(p.grad.data);
    for (std::size_t s = 0; s < idx.size(); s += batch) {
        const std::size_t n = std::min(batch, idx.size() - s);
        const auto t = model.accumulate_gradients(gather_sequences(d, {idx.data() + s, n}, l + 1), w);
        const double f = static_cast<double>(n);
        sum.total += t.total * f;
        sum.reconst += t.reconst * f;
        sum.predict += t.predict * f;
        sum.linear += t.linear * f;
    }
    std::size_t k = 0;
    for (auto& [_, p] : model.params()) p.grad.data = saved[k++];
    const double n = static_cast<double>(idx.size());
    sum.total /= n;
    sum.reconst /= n;
    sum.predict /= n;
    sum.linear /= n;
    return sum;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TrainResult train(surrogates::Model& model, const dataset::Dataset& train, const dataset::Dataset* val,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
    const Variant v = model.arch().variant;
    if (v == Variant::unfilter) throw ConfigError("use train_unfilter for the UNFILTER network");
    cfg.validate(v);
    const std::size_t l = model.arch().window;
    auto idx = dataset::sequence_index(train.cases, l);
    if (idx.empty()) throw ConfigError("training split has no sequence of " + std::to_string(l + 1) + " frames");

    nn::Rng rng(cfg.seed ^ 0x5eed5eed5eedULL);
    nn::AdamConfig adam;
    adam.lr = cfg.lr;
    adam.eps = cfg.eps;
    TrainResult res;
    const auto t0 = std::chrono::steady_clock::now();
    const bool kae = v == Variant::kae;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        adam.lr = cfg.lr_at(epoch);
        surrogates::LossWeights w = cfg.weights;
        if (kae && epoch <= cfg.warmup) w.linear = 0.0;
        rng.shuffle(idx);
        double total = 0.0, linear = 0.0;
        for (std::size_t s = 0; s < idx.size(); s += cfg.batch) {
            const std::size_t n = std::min(cfg.batch, idx.size() - s);
            model.params().zero_grad();
            const auto t = model.accumulate_gradients(gather_sequences(train, {idx.data() + s, n}, l + 1), w);
            if (!std::isfinite(t.total))
                throw SolverError("training loss became non-finite in epoch " + std::to_string(epoch));
            adam_step(model.params(), adam);
            total += t.total * static_cast<double>(n);
            linear += t.linear * static_cast<double>(n);
        }
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = total / static_cast<double>(idx.size());
        if (kae) log.linear_residual = linear / static_cast<double>(idx.size());
        if (val && !dataset::sequence_index(val->cases, l).empty()) {
            log.val_loss = evaluate_loss(model, *val, w.linear, cfg.batch).total;
            if (kae) {
                auto vidx = dataset::sequence_index(val->cases, l);
                if (vidx.size() > cfg.batch) vidx.resize(cfg.batch);
                const Tensor<float> seq = gather_sequences(*val, vidx, l);
                log.latent_std = latent_std(model, seq);
                if (epoch > cfg.warmup && log.latent_std < cfg.collapse_threshold && !res.collapsed) {
                    res.collapsed = true;
                    res.warnings.push_back("encoder collapse: latent std " + std::to_string(log.latent_std) +
                                           " after epoch " + std::to_string(epoch));
                }
            }
        }
        log.wall_s = seconds_since(t0);
        res.history.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    return res;
}

TrainResult train_unfilter(surrogates::Model& model, const std::vector<float>& blurred, const std::vector<float>& raw,
                           const TrainConfig& cfg, const EpochCallback& on_epoch) {
    const std::size_t P = model.arch().patch, F = P * P;
    if (blurred.size() != raw.size() || blurred.empty() || blurred.size() % F != 0)
        throw ShapeError("unfilter training pairs must be equally many " + std::to_string(P) + "x" +
                         std::to_string(P) + " frames");
    cfg.validate(Variant::unfilter);
    const std::size_t N = blurred.size() / F;
    std::vector<std::size_t> order(N);
    for (std::size_t i = 0; i < N; ++i) order[i] = i;
    nn::Rng rng(cfg.seed ^ 0x5eed5eed5eedULL);
    nn::AdamConfig adam;
    adam.lr = cfg.lr;
    adam.eps = cfg.eps;
    TrainResult res;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        adam.lr = cfg.lr_at(epoch);
        rng.shuffle(order);
        double total = 0.0;
        for (std::size_t s = 0; s < N; s += cfg.batch) {
            const std::size_t n = std::min(cfg.batch, N - s);
            Tensor<float> x({n, P, P}), y({n, P, P});
            for (std::size_t k = 0; k < n; ++k) {
                std::copy_n(blurred.data() + order[s + k] * F, F, x.ptr() + k * F);
                std::copy_n(raw.data() + order[s + k] * F, F, y.ptr() + k * F);
            }
            model.params().zero_grad();
            total += model.accumulate_gradients_pairs(x, y) * static_cast<double>(n);
            adam_step(model.params(), adam);
        }
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = total / static_cast<double>(N);
        log.wall_s = seconds_since(t0);
        res.history.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    return res;
}

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& history) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw FormatError(FormatErrc::io, "cannot create " + path.string());
    out << "epoch,train_loss,val_loss,wall_s,linear_residual,latent_std\n";
    out.precision(9);
    for (const auto& e : history)
        out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.wall_s << ',' << e.linear_residual
            << ',' << e.latent_std << '\n';
}

}  // namespace ditchkit::training
