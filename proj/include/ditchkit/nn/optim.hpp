#pragma once

#include "ditchkit/nn/layers.hpp"
#include "ditchkit/nn/tensor.hpp"

namespace ditchkit::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
};

/// One bias-corrected Adam update of every parameter; increments store.step.
template <class T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg = {});

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;  ///< parameter name or "input" with element index
};

/// Central-difference check of a layer in double precision against the
/// analytic backward pass, for the scalar loss sum(r * y) with random r.
/// Relative errors use max(|analytic|, |numeric|, 1e-4) as denominator.
GradCheckResult grad_check(Layer<double>& layer, ParamStore<double>& store, const Tensor<double>& x, Rng& rng,
                           double h = 1e-5);

}  // namespace ditchkit::nn
