#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "json.hpp"

#include "ditchkit/nn/layers.hpp"
#include "ditchkit/nn/tensor.hpp"

namespace ditchkit::surrogates {

enum class Variant { cjm, cjmdd, cjmnlb, kae, unfilter };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

/// Layer-stack parameters. The full configuration (128 x 128 patches, filters
/// 8/16/32/64, LSTM width 100, latent width 10) reproduces the reference
/// parameter counts; smaller patches keep the topology.
struct ArchConfig {
    Variant variant = Variant::cjm;
    std::size_t patch = 128;   ///< H = W, divisible by 16
    std::size_t window = 3;    ///< input time steps
    std::size_t latent = 10;
    std::array<std::size_t, 4> filters{8, 16, 32, 64};
    std::size_t lstm_units = 100;

    static ArchConfig full(Variant v);
    static ArchConfig desk(Variant v, std::size_t patch = 32);

    void validate() const;
    std::size_t code_size() const { return patch / 16; }  ///< spatial size after the encoder
};

void to_json(nlohmann::json& j, const ArchConfig& a);
void from_json(const nlohmann::json& j, ArchConfig& a);

struct LossWeights {
    double reconst = 1.0;
    double predict = 1.0;
    double linear = 0.01;
};

struct LossTerms {
    double total = 0.0;
    double reconst = 0.0;
    double predict = 0.0;
    double linear = 0.0;
};

class Model {
public:
    Model(const ArchConfig& arch, std::uint64_t seed);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    const ArchConfig& arch() const noexcept { return arch_; }
    nn::ParamStore<float>& params() noexcept { return store_; }
    std::size_t param_count() const { return store_.count(); }

    /// Next frame (B, H, W) from windows (B, window, H, W). For UNFILTER the
    /// input is (B, H, W) and the output its unfiltered estimate.
    nn::Tensor<float> predict(const nn::Tensor<float>& x);

    /// Forward and backward pass on sequences (B, window + 1, H, W); gradients
    /// are accumulated (not zeroed). LSTM variants minimise the MSE of the last
    /// frame; KAE uses the three-term loss.
    LossTerms accumulate_gradients(const nn::Tensor<float>& seq, const LossWeights& w = {});

    /// UNFILTER: MSE between predict(input) and target, gradients accumulated.
    double accumulate_gradients_pairs(const nn::Tensor<float>& input, const nn::Tensor<float>& target);

    // KAE pieces
    nn::Tensor<float> encode(const nn::Tensor<float>& windows);  ///< (B, latent)
    nn::Tensor<float> advance(const nn::Tensor<float>& z);       ///< K z
    nn::Tensor<float> decode(const nn::Tensor<float>& z);        ///< (B, H, W)
    std::vector<double> koopman_matrix() const;                  ///< latent x latent, row-major

    std::string metadata() const;  ///< JSON for checkpoints

private:
    ArchConfig arch_;
    nn::ParamStore<float> store_;
    std::unique_ptr<nn::Sequential<float>> net_;  // LSTM variants and UNFILTER
    std::unique_ptr<nn::Sequential<float>> enc_;  // KAE
    std::unique_ptr<nn::Dense<float>> K_;
    std::unique_ptr<nn::Sequential<float>> dec_;
};

/// Trainable parameter count of an architecture (builds it once).
std::size_t count_params(const ArchConfig& arch);

/// Architecture stored in a checkpoint's metadata.
ArchConfig arch_from_metadata(const std::string& metadata);

/// Sliding-window autoregression from `start` (window, H, W) for n_steps frames.
nn::Tensor<float> rollout(Model& m, const nn::Tensor<float>& start, std::size_t n_steps);

/// KAE only: encode once, apply K repeatedly, decode every latent state.
nn::Tensor<float> kae_latent_rollout(Model& m, const nn::Tensor<float>& start, std::size_t n_steps);

}  // namespace ditchkit::surrogates
