#include "ditchkit/nn/optim.hpp"

#include <cmath>

namespace ditchkit::nn {

template <class T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg) {
    ++store.step;
    const double t = static_cast<double>(store.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    for (auto& [name, p] : store) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const T g = p.grad[i];
            p.m[i] = b1 * p.m[i] + (T(1) - b1) * g;
            p.v[i] = b2 * p.v[i] + (T(1) - b2) * g * g;
            const double mhat = p.m[i] / c1;
            const double vhat = p.v[i] / c2;
            p.value[i] -= static_cast<T>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

template void adam_step(ParamStore<float>&, const AdamConfig&);
template void adam_step(ParamStore<double>&, const AdamConfig&);

GradCheckResult grad_check(Layer<double>& layer, ParamStore<double>& store, const Tensor<double>& x, Rng& rng,
                           double h) {
    Tensor<double> y = layer.forward(x);
    Tensor<double> r(y.shape);
    for (auto& v : r.data) v = rng.uniform(-1.0, 1.0);
    auto loss = [&](const Tensor<double>& input) {
        const Tensor<double> out = layer.forward(input);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += r[i] * out[i];
        return s;
    };

    store.zero_grad();
    layer.forward(x);
    const Tensor<double> dx = layer.backward(r);

    GradCheckResult res;
    auto record = [&](double analytic, double numeric, const std::string& where) {
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
        const double err = std::abs(analytic - numeric) / denom;
        if (err > res.max_rel_error) {
            res.max_rel_error = err;
            res.worst = where;
        }
    };

    for (auto& [name, p] : store) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double keep = p.value[i];
            p.value[i] = keep + h;
            const double lp = loss(x);
            p.value[i] = keep - h;
            const double lm = loss(x);
            p.value[i] = keep;
            record(p.grad[i], (lp - lm) / (2.0 * h), name + "[" + std::to_string(i) + "]");
        }
    }
    Tensor<double> xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        const double lp = loss(xp);
        xp[i] = x[i] - h;
        const double lm = loss(xp);
        xp[i] = x[i];
        record(dx[i], (lp - lm) / (2.0 * h), "input[" + std::to_string(i) + "]");
    }
    return res;
}

}  // namespace ditchkit::nn
