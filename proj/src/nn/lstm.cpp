#include <cmath>

#include "ditchkit/nn/init.hpp"
#include "ditchkit/nn/layers.hpp"
#include "eigen_maps.hpp"

namespace ditchkit::nn {

using detail::mat;

template <class T>
LSTM<T>::LSTM(ParamStore<T>& store, std::string name, std::size_t in, std::size_t units, bool sequences)
    : name_(std::move(name)), in_(in), n_(units), sequences_(sequences) {
    K_ = &store.add(name_ + ".kernel", {in, 4 * units});
    U_ = &store.add(name_ + ".recurrent", {units, 4 * units});
    b_ = &store.add(name_ + ".bias", {4 * units});
}

template <class T>
void LSTM<T>::initialize(Rng& rng) {
    glorot_uniform<T>(K_->value.data, in_, 4 * n_, rng);
    const auto q = orthogonal(n_, 4 * n_, rng);
    for (std::size_t i = 0; i < q.size(); ++i) U_->value[i] = static_cast<T>(q[i]);
    b_->value.fill(T(0));
    for (std::size_t j = n_; j < 2 * n_; ++j) b_->value[j] = T(1);  // forget gate
}

template <class T>
Tensor<T> LSTM<T>::forward(const Tensor<T>& x) {
    if (x.rank() != 3 || x.dim(2) != in_)
        throw ShapeError(name_ + ": expected (N, steps, " + std::to_string(in_) + "), got " + shape_str(x.shape));
    x_ = x;
    const std::size_t N = x.dim(0), steps = x.dim(1), n = n_, n4 = 4 * n_;
    gates_.assign(steps, std::vector<T>(N * n4));
    c_.assign(steps, std::vector<T>(N * n));
    tc_.assign(steps, std::vector<T>(N * n));
    h_.assign(steps, std::vector<T>(N * n));

    // rows of x for step t are strided by steps*in
    detail::RowMat<T> xt(N, in_);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t b = 0; b < N; ++b)
            for (std::size_t i = 0; i < in_; ++i) xt(b, i) = x[(b * steps + t) * in_ + i];
        auto Z = mat(gates_[t].data(), N, n4);
        Z.noalias() = xt * mat(K_->value.ptr(), in_, n4);
        if (t > 0) Z.noalias() += mat(static_cast<const T*>(h_[t - 1].data()), N, n) * mat(U_->value.ptr(), n, n4);
        Z.rowwise() += mat(b_->value.ptr(), 1, n4).row(0);
        for (std::size_t b = 0; b < N; ++b) {
            T* z = gates_[t].data() + b * n4;
            for (std::size_t j = 0; j < n; ++j) {
                const T ig = sigmoid(z[j]), fg = sigmoid(z[n + j]), gg = std::tanh(z[2 * n + j]),
                        og = sigmoid(z[3 * n + j]);
                z[j] = ig;
                z[n + j] = fg;
                z[2 * n + j] = gg;
                z[3 * n + j] = og;
                const T cprev = t > 0 ? c_[t - 1][b * n + j] : T(0);
                const T c = fg * cprev + ig * gg;
                c_[t][b * n + j] = c;
                tc_[t][b * n + j] = std::tanh(c);
                h_[t][b * n + j] = og * tc_[t][b * n + j];
            }
        }
    }
    if (!sequences_) return Tensor<T>({N, n}, h_[steps - 1]);
    Tensor<T> y({N, steps, n});
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t b = 0; b < N; ++b)
            std::copy_n(h_[t].data() + b * n, n, y.ptr() + (b * steps + t) * n);
    return y;
}

template <class T>
Tensor<T> LSTM<T>::backward(const Tensor<T>& dy) {
    const std::size_t N = x_.dim(0), steps = x_.dim(1), n = n_, n4 = 4 * n_;
    if (dy.size() != (sequences_ ? N * steps * n : N * n)) throw ShapeError(name_ + ": gradient shape mismatch");
    Tensor<T> dx(x_.shape);
    std::vector<T> dh(N * n, T(0)), dc(N * n, T(0)), dz(N * n4);
    detail::RowMat<T> xt(N, in_), dxt(N, in_);
    for (std::size_t tt = steps; tt-- > 0;) {
        for (std::size_t b = 0; b < N; ++b)
            for (std::size_t j = 0; j < n; ++j) {
                if (sequences_)
                    dh[b * n + j] += dy[(b * steps + tt) * n + j];
                else if (tt == steps - 1)
                    dh[b * n + j] += dy[b * n + j];
            }
        for (std::size_t b = 0; b < N; ++b) {
            const T* g = gates_[tt].data() + b * n4;
            T* d = dz.data() + b * n4;
            for (std::size_t j = 0; j < n; ++j) {
                const T ig = g[j], fg = g[n + j], gg = g[2 * n + j], og = g[3 * n + j];
                const T tc = tc_[tt][b * n + j];
                const T cprev = tt > 0 ? c_[tt - 1][b * n + j] : T(0);
                const T dH = dh[b * n + j];
                const T dC = dc[b * n + j] + dH * og * (T(1) - tc * tc);
                d[j] = dC * gg * ig * (T(1) - ig);
                d[n + j] = dC * cprev * fg * (T(1) - fg);
                d[2 * n + j] = dC * ig * (T(1) - gg * gg);
                d[3 * n + j] = dH * tc * og * (T(1) - og);
                dc[b * n + j] = dC * fg;
            }
        }
        const auto dZ = mat(static_cast<const T*>(dz.data()), N, n4);
        for (std::size_t b = 0; b < N; ++b)
            for (std::size_t i = 0; i < in_; ++i) xt(b, i) = x_[(b * steps + tt) * in_ + i];
        mat(K_->grad.ptr(), in_, n4).noalias() += xt.transpose() * dZ;
        mat(b_->grad.ptr(), 1, n4) += dZ.colwise().sum();
        dxt.noalias() = dZ * mat(K_->value.ptr(), in_, n4).transpose();
        for (std::size_t b = 0; b < N; ++b)
            for (std::size_t i = 0; i < in_; ++i) dx[(b * steps + tt) * in_ + i] = dxt(b, i);
        if (tt > 0) {
            const auto Hprev = mat(static_cast<const T*>(h_[tt - 1].data()), N, n);
            mat(U_->grad.ptr(), n, n4).noalias() += Hprev.transpose() * dZ;
            mat(dh.data(), N, n).noalias() = dZ * mat(U_->value.ptr(), n, n4).transpose();
        }
    }
    return dx;
}

template class LSTM<float>;
template class LSTM<double>;

}  // namespace ditchkit::nn
