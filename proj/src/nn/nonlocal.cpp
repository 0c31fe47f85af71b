#include "ditchkit/nn/init.hpp"
#include "ditchkit/nn/layers.hpp"
#include "eigen_maps.hpp"

namespace ditchkit::nn {

using detail::mat;

template <class T>
NonLocal<T>::NonLocal(ParamStore<T>& store, std::string name, std::size_t channels)
    : name_(std::move(name)), C_(channels) {
    if (C_ == 0 || C_ % 2 != 0)
        throw ConfigError(name_ + ": non-local block needs an even channel count, got " + std::to_string(C_));
    const std::size_t h = C_ / 2;
    Wt_ = &store.add(name_ + ".theta", {1, 1, C_, h});
    Wp_ = &store.add(name_ + ".phi", {1, 1, C_, h});
    Wg_ = &store.add(name_ + ".g", {1, 1, C_, h});
    Ww_ = &store.add(name_ + ".w", {1, 1, h, C_});
}

template <class T>
void NonLocal<T>::initialize(Rng& rng) {
    const std::size_t h = C_ / 2;
    glorot_uniform<T>(Wt_->value.data, C_, h, rng);
    glorot_uniform<T>(Wp_->value.data, C_, h, rng);
    glorot_uniform<T>(Wg_->value.data, C_, h, rng);
    glorot_uniform<T>(Ww_->value.data, h, C_, rng);
}

template <class T>
Tensor<T> NonLocal<T>::forward(const Tensor<T>& x) {
    if (x.rank() != 4 || x.dim(3) != C_)
        throw ShapeError(name_ + ": expected (N, H, W, " + std::to_string(C_) + "), got " + shape_str(x.shape));
    x_ = x;
    const std::size_t N = x.dim(0), P = x.dim(1) * x.dim(2), C = C_, h = C_ / 2;
    theta_.resize(N * P * h);
    phi_.resize(N * P * h);
    g_.resize(N * P * h);
    y_.resize(N * P * h);
    attn_.resize(N * P * P);
    const auto X = mat(x.ptr(), N * P, C);
    mat(theta_.data(), N * P, h).noalias() = X * mat(Wt_->value.ptr(), C, h);
    mat(phi_.data(), N * P, h).noalias() = X * mat(Wp_->value.ptr(), C, h);
    mat(g_.data(), N * P, h).noalias() = X * mat(Wg_->value.ptr(), C, h);
    for (std::size_t b = 0; b < N; ++b) {
        auto A = mat(attn_.data() + b * P * P, P, P);
        A.noalias() = mat(static_cast<const T*>(theta_.data()) + b * P * h, P, h) *
                      mat(static_cast<const T*>(phi_.data()) + b * P * h, P, h).transpose();
        softmax_rows(attn_.data() + b * P * P, P, P);
        mat(y_.data() + b * P * h, P, h).noalias() = A * mat(static_cast<const T*>(g_.data()) + b * P * h, P, h);
    }
    Tensor<T> z = x;
    mat(z.ptr(), N * P, C).noalias() += mat(static_cast<const T*>(y_.data()), N * P, h) * mat(Ww_->value.ptr(), h, C);
    return z;
}

template <class T>
Tensor<T> NonLocal<T>::backward(const Tensor<T>& dz) {
    const std::size_t N = x_.dim(0), P = x_.dim(1) * x_.dim(2), C = C_, h = C_ / 2;
    if (dz.size() != x_.size()) throw ShapeError(name_ + ": gradient shape mismatch");
    const auto dZ = mat(dz.ptr(), N * P, C);
    const auto X = mat(x_.ptr(), N * P, C);
    mat(Ww_->grad.ptr(), h, C).noalias() += mat(static_cast<const T*>(y_.data()), N * P, h).transpose() * dZ;
    detail::RowMat<T> dY = dZ * mat(Ww_->value.ptr(), h, C).transpose();
    detail::RowMat<T> dTheta(N * P, h), dPhi(N * P, h), dG(N * P, h), dA(P, P);
    for (std::size_t b = 0; b < N; ++b) {
        const auto A = mat(static_cast<const T*>(attn_.data()) + b * P * P, P, P);
        const auto G = mat(static_cast<const T*>(g_.data()) + b * P * h, P, h);
        const auto Th = mat(static_cast<const T*>(theta_.data()) + b * P * h, P, h);
        const auto Ph = mat(static_cast<const T*>(phi_.data()) + b * P * h, P, h);
        const auto dYb = dY.middleRows(b * P, P);
        dG.middleRows(b * P, P).noalias() = A.transpose() * dYb;
        dA.noalias() = dYb * G.transpose();
        // softmax backward, row-wise
        for (std::size_t r = 0; r < P; ++r) {
            const T dot = (dA.row(r).array() * A.row(r).array()).sum();
            dA.row(r) = (A.row(r).array() * (dA.row(r).array() - dot)).matrix();
        }
        dTheta.middleRows(b * P, P).noalias() = dA * Ph;
        dPhi.middleRows(b * P, P).noalias() = dA.transpose() * Th;
    }
    mat(Wt_->grad.ptr(), C, h).noalias() += X.transpose() * dTheta;
    mat(Wp_->grad.ptr(), C, h).noalias() += X.transpose() * dPhi;
    mat(Wg_->grad.ptr(), C, h).noalias() += X.transpose() * dG;
    Tensor<T> dx = dz;
    auto dX = mat(dx.ptr(), N * P, C);
    dX.noalias() += dTheta * mat(Wt_->value.ptr(), C, h).transpose();
    dX.noalias() += dPhi * mat(Wp_->value.ptr(), C, h).transpose();
    dX.noalias() += dG * mat(Wg_->value.ptr(), C, h).transpose();
    return dx;
}

template class NonLocal<float>;
template class NonLocal<double>;

}  // namespace ditchkit::nn
