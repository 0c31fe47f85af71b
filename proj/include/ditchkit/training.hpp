#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "ditchkit/dataset.hpp"
#include "ditchkit/nn/optim.hpp"
#include "ditchkit/surrogates.hpp"

namespace ditchkit::training {

struct TrainConfig {
    std::size_t epochs = 500;
    std::size_t batch = 128;
    double lr = 1e-3;
    double lr_final = -1.0;           ///< cosine decay target; negative keeps lr constant
    double eps = 1e-7;                ///< Adam denominator offset
    std::uint64_t seed = 0;
    surrogates::LossWeights weights;  ///< KAE loss weights
    std::size_t warmup = 25;          ///< KAE epochs without the linearity term
    double collapse_threshold = 1e-6; ///< latent std below this after warmup -> warning

    void validate(surrogates::Variant v) const;
    double lr_at(std::size_t epoch) const;  ///< 1-based epoch
};

/// Keys: epochs, batch, lr, lr_final, adam_eps, seed, warmup_epochs, collapse_threshold,
/// loss_weights {reconst, predict, linear}. Missing keys keep their defaults.
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochLog {
    std::size_t epoch = 0;  ///< 1-based
    double train_loss = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    double wall_s = 0.0;
    double linear_residual = std::numeric_limits<double>::quiet_NaN();  ///< KAE, train split
    double latent_std = std::numeric_limits<double>::quiet_NaN();       ///< KAE, validation batch
};

struct TrainResult {
    std::vector<EpochLog> history;
    std::vector<std::string> warnings;
    bool collapsed = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Minibatch Adam on all (window + 1)-frame sequences of the training cases,
/// shuffled globally every epoch with the configured seed. Validation (if
/// given) is evaluated for monitoring only.
TrainResult train(surrogates::Model& model, const dataset::Dataset& train, const dataset::Dataset* val,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// UNFILTER training on matching frames before and after the blur.
TrainResult train_unfilter(surrogates::Model& model, const std::vector<float>& blurred,
                           const std::vector<float>& raw, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Mean latent standard deviation (per dimension, over the batch).
double latent_std(surrogates::Model& model, const nn::Tensor<float>& windows);

/// Gathers sequences (B, window + 1, H, W) for the given (case, t) indices.
nn::Tensor<float> gather_sequences(const dataset::Dataset& d,
                                   std::span<const std::pair<std::size_t, std::size_t>> idx, std::size_t length);

/// Mean loss over the given sequences without touching gradients.
surrogates::LossTerms evaluate_loss(surrogates::Model& model, const dataset::Dataset& d, double linear_weight,
                                    std::size_t batch = 128);

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& history);

}  // namespace ditchkit::training
