#include "ditchkit/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "ditchkit/nn/init.hpp"
#include "eigen_maps.hpp"

namespace ditchkit::nn {

using detail::mat;

template <class T>
T sigmoid(T x) {
    return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

template <class T>
void softmax_rows(T* data, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        T* row = data + r * cols;
        const T mx = *std::max_element(row, row + cols);
        T sum = 0;
        for (std::size_t c = 0; c < cols; ++c) sum += (row[c] = std::exp(row[c] - mx));
        for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
    }
}

// ---- Dense ----

template <class T>
Dense<T>::Dense(ParamStore<T>& store, std::string name, std::size_t in, std::size_t out, bool bias)
    : name_(std::move(name)), in_(in), out_(out) {
    W_ = &store.add(name_ + ".kernel", {out, in});
    if (bias) b_ = &store.add(name_ + ".bias", {out});
}

template <class T>
void Dense<T>::initialize(Rng& rng) {
    glorot_uniform<T>(W_->value.data, in_, out_, rng);
    if (b_) b_->value.fill(T(0));
}

template <class T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x) {
    if (x.rank() == 0 || x.shape.back() != in_)
        throw ShapeError(name_ + ": expected last axis " + std::to_string(in_) + ", got " + shape_str(x.shape));
    x_ = x;
    const std::size_t N = x.size() / in_;
    Shape s = x.shape;
    s.back() = out_;
    Tensor<T> y(s);
    auto Y = mat(y.ptr(), N, out_);
    Y.noalias() = mat(x.ptr(), N, in_) * mat(W_->value.ptr(), out_, in_).transpose();
    if (b_) Y.rowwise() += mat(b_->value.ptr(), 1, out_).row(0);
    return y;
}

template <class T>
Tensor<T> Dense<T>::backward(const Tensor<T>& dy) {
    const std::size_t N = x_.size() / in_;
    if (dy.size() != N * out_) throw ShapeError(name_ + ": gradient shape mismatch");
    auto dY = mat(dy.ptr(), N, out_);
    mat(W_->grad.ptr(), out_, in_).noalias() += dY.transpose() * mat(x_.ptr(), N, in_);
    if (b_) mat(b_->grad.ptr(), 1, out_) += dY.colwise().sum();
    Tensor<T> dx(x_.shape);
    mat(dx.ptr(), N, in_).noalias() = dY * mat(W_->value.ptr(), out_, in_);
    return dx;
}

// ---- convolution helpers ----

namespace {

struct ConvGeom {
    std::size_t N, H, W, C;  // input grid
    std::size_t Ho, Wo;      // output grid
    std::size_t k, s;
    std::size_t pad_top, pad_left;
};

ConvGeom same_geometry(std::size_t N, std::size_t H, std::size_t W, std::size_t C, std::size_t k, std::size_t s) {
    ConvGeom g{N, H, W, C, (H + s - 1) / s, (W + s - 1) / s, k, s, 0, 0};
    const auto pad = [&](std::size_t out, std::size_t in) {
        const std::ptrdiff_t p = static_cast<std::ptrdiff_t>((out - 1) * s + k) - static_cast<std::ptrdiff_t>(in);
        return static_cast<std::size_t>(std::max<std::ptrdiff_t>(p, 0));
    };
    g.pad_top = pad(g.Ho, H) / 2;
    g.pad_left = pad(g.Wo, W) / 2;
    return g;
}

// cols: (N Ho Wo) x (k k C), column order (kh, kw, c)
template <class T>
void im2col(const T* x, const ConvGeom& g, T* cols) {
    const std::size_t kkc = g.k * g.k * g.C;
    for (std::size_t n = 0; n < g.N; ++n)
        for (std::size_t oy = 0; oy < g.Ho; ++oy)
            for (std::size_t ox = 0; ox < g.Wo; ++ox) {
                T* row = cols + ((n * g.Ho + oy) * g.Wo + ox) * kkc;
                for (std::size_t ky = 0; ky < g.k; ++ky) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.s + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
                    for (std::size_t kx = 0; kx < g.k; ++kx) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.s + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
                        T* dst = row + (ky * g.k + kx) * g.C;
                        if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.H) || ix >= static_cast<std::ptrdiff_t>(g.W)) {
                            std::fill(dst, dst + g.C, T(0));
                        } else {
                            const T* src = x + ((n * g.H + iy) * g.W + ix) * g.C;
                            std::copy(src, src + g.C, dst);
                        }
                    }
                }
            }
}

template <class T>
void col2im(const T* cols, const ConvGeom& g, T* x) {
    const std::size_t kkc = g.k * g.k * g.C;
    for (std::size_t n = 0; n < g.N; ++n)
        for (std::size_t oy = 0; oy < g.Ho; ++oy)
            for (std::size_t ox = 0; ox < g.Wo; ++ox) {
                const T* row = cols + ((n * g.Ho + oy) * g.Wo + ox) * kkc;
                for (std::size_t ky = 0; ky < g.k; ++ky) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.s + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.H)) continue;
                    for (std::size_t kx = 0; kx < g.k; ++kx) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.s + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.W)) continue;
                        const T* src = row + (ky * g.k + kx) * g.C;
                        T* dst = x + ((n * g.H + iy) * g.W + ix) * g.C;
                        for (std::size_t c = 0; c < g.C; ++c) dst[c] += src[c];
                    }
                }
            }
}

template <class T>
void check_image(const Tensor<T>& x, std::size_t C, const std::string& name) {
    if (x.rank() != 4 || x.dim(3) != C)
        throw ShapeError(name + ": expected (N, H, W, " + std::to_string(C) + "), got " + shape_str(x.shape));
}

}  // namespace

// ---- Conv2D ----

template <class T>
Conv2D<T>::Conv2D(ParamStore<T>& store, std::string name, std::size_t cin, std::size_t cout, std::size_t k,
                  std::size_t stride, bool bias)
    : name_(std::move(name)), cin_(cin), cout_(cout), k_(k), s_(stride) {
    if (k == 0 || stride == 0) throw ConfigError(name_ + ": kernel and stride must be positive");
    K_ = &store.add(name_ + ".kernel", {k, k, cin, cout});
    if (bias) b_ = &store.add(name_ + ".bias", {cout});
}

template <class T>
void Conv2D<T>::initialize(Rng& rng) {
    glorot_uniform<T>(K_->value.data, k_ * k_ * cin_, k_ * k_ * cout_, rng);
    if (b_) b_->value.fill(T(0));
}

template <class T>
Tensor<T> Conv2D<T>::forward(const Tensor<T>& x) {
    check_image(x, cin_, name_);
    in_shape_ = x.shape;
    const ConvGeom g = same_geometry(x.dim(0), x.dim(1), x.dim(2), cin_, k_, s_);
    const std::size_t rows = g.N * g.Ho * g.Wo, kkc = k_ * k_ * cin_;
    cols_.resize(rows * kkc);
    im2col(x.ptr(), g, cols_.data());
    Tensor<T> y({g.N, g.Ho, g.Wo, cout_});
    auto Y = mat(y.ptr(), rows, cout_);
    Y.noalias() = mat(static_cast<const T*>(cols_.data()), rows, kkc) * mat(K_->value.ptr(), kkc, cout_);
    if (b_) Y.rowwise() += mat(b_->value.ptr(), 1, cout_).row(0);
    return y;
}

template <class T>
Tensor<T> Conv2D<T>::backward(const Tensor<T>& dy) {
    const ConvGeom g = same_geometry(in_shape_[0], in_shape_[1], in_shape_[2], cin_, k_, s_);
    const std::size_t rows = g.N * g.Ho * g.Wo, kkc = k_ * k_ * cin_;
    if (dy.size() != rows * cout_) throw ShapeError(name_ + ": gradient shape mismatch");
    auto dY = mat(dy.ptr(), rows, cout_);
    const auto cols = mat(static_cast<const T*>(cols_.data()), rows, kkc);
    mat(K_->grad.ptr(), kkc, cout_).noalias() += cols.transpose() * dY;
    if (b_) mat(b_->grad.ptr(), 1, cout_) += dY.colwise().sum();
    std::vector<T> dcols(rows * kkc);
    mat(dcols.data(), rows, kkc).noalias() = dY * mat(K_->value.ptr(), kkc, cout_).transpose();
    Tensor<T> dx(in_shape_);
    col2im(static_cast<const T*>(dcols.data()), g, dx.ptr());
    return dx;
}

// ---- Conv2DTranspose ----

template <class T>
Conv2DTranspose<T>::Conv2DTranspose(ParamStore<T>& store, std::string name, std::size_t cin, std::size_t cout,
                                    std::size_t k, std::size_t stride, bool bias)
    : name_(std::move(name)), cin_(cin), cout_(cout), k_(k), s_(stride) {
    if (k == 0 || stride == 0) throw ConfigError(name_ + ": kernel and stride must be positive");
    K_ = &store.add(name_ + ".kernel", {k, k, cout, cin});
    if (bias) b_ = &store.add(name_ + ".bias", {cout});
}

template <class T>
void Conv2DTranspose<T>::initialize(Rng& rng) {
    glorot_uniform<T>(K_->value.data, k_ * k_ * cin_, k_ * k_ * cout_, rng);
    if (b_) b_->value.fill(T(0));
}

template <class T>
Tensor<T> Conv2DTranspose<T>::forward(const Tensor<T>& x) {
    check_image(x, cin_, name_);
    x_ = x;
    const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2);
    const ConvGeom g = same_geometry(N, H * s_, W * s_, cout_, k_, s_);
    const std::size_t rows = N * H * W, kkc = k_ * k_ * cout_;
    std::vector<T> cols(rows * kkc);
    mat(cols.data(), rows, kkc).noalias() = mat(x.ptr(), rows, cin_) * mat(K_->value.ptr(), kkc, cin_).transpose();
    Tensor<T> y({N, H * s_, W * s_, cout_});
    col2im(static_cast<const T*>(cols.data()), g, y.ptr());
    if (b_) mat(y.ptr(), y.size() / cout_, cout_).rowwise() += mat(b_->value.ptr(), 1, cout_).row(0);
    return y;
}

template <class T>
Tensor<T> Conv2DTranspose<T>::backward(const Tensor<T>& dy) {
    const std::size_t N = x_.dim(0), H = x_.dim(1), W = x_.dim(2);
    const ConvGeom g = same_geometry(N, H * s_, W * s_, cout_, k_, s_);
    if (dy.size() != N * H * s_ * W * s_ * cout_) throw ShapeError(name_ + ": gradient shape mismatch");
    const std::size_t rows = N * H * W, kkc = k_ * k_ * cout_;
    std::vector<T> dcols(rows * kkc);
    im2col(dy.ptr(), g, dcols.data());
    const auto dC = mat(static_cast<const T*>(dcols.data()), rows, kkc);
    mat(K_->grad.ptr(), kkc, cin_).noalias() += dC.transpose() * mat(x_.ptr(), rows, cin_);
    if (b_) mat(b_->grad.ptr(), 1, cout_) += mat(dy.ptr(), dy.size() / cout_, cout_).colwise().sum();
    Tensor<T> dx(x_.shape);
    mat(dx.ptr(), rows, cin_).noalias() = dC * mat(K_->value.ptr(), kkc, cin_);
    return dx;
}

// ---- pointwise activations ----

template <class T>
std::string Pointwise<T>::name() const {
    switch (act_) {
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    return "activation";
}

template <class T>
Tensor<T> Pointwise<T>::forward(const Tensor<T>& x) {
    x_ = x;
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
        switch (act_) {
            case Activation::leaky_relu: y[i] = leaky_relu(x[i]); break;
            case Activation::tanh: y[i] = std::tanh(x[i]); break;
            case Activation::sigmoid: y[i] = sigmoid(x[i]); break;
        }
    }
    y_ = y;
    return y;
}

template <class T>
Tensor<T> Pointwise<T>::backward(const Tensor<T>& dy) {
    Tensor<T> dx(x_.shape);
    for (std::size_t i = 0; i < dx.size(); ++i) {
        T d = 0;
        switch (act_) {
            case Activation::leaky_relu: d = x_[i] > T(0) ? T(1) : T(kLeakySlope); break;
            case Activation::tanh: d = T(1) - y_[i] * y_[i]; break;
            case Activation::sigmoid: d = y_[i] * (T(1) - y_[i]); break;
        }
        dx[i] = dy[i] * d;
    }
    return dx;
}

// ---- reshape / sequential ----

template <class T>
Tensor<T> Reshape<T>::forward(const Tensor<T>& x) {
    in_shape_ = x.shape;
    Shape s = target_;
    std::size_t known = 1, hole = s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == 0) {
            if (hole != s.size()) throw ConfigError("reshape: at most one inferred axis");
            hole = i;
        } else {
            known *= s[i];
        }
    }
    if (hole != s.size()) {
        if (known == 0 || x.size() % known != 0)
            throw ShapeError("reshape: " + shape_str(x.shape) + " does not fit " + shape_str(target_));
        s[hole] = x.size() / known;
    }
    return x.reshaped(std::move(s));
}

template <class T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x) {
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h);
    return h;
}

template <class T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& dy) {
    Tensor<T> g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

#define DITCHKIT_INSTANTIATE(T)                            \
    template T sigmoid(T);                                 \
    template void softmax_rows(T*, std::size_t, std::size_t); \
    template class Dense<T>;                               \
    template class Conv2D<T>;                              \
    template class Conv2DTranspose<T>;                     \
    template class Pointwise<T>;                           \
    template class Reshape<T>;                             \
    template class Sequential<T>;

DITCHKIT_INSTANTIATE(float)
DITCHKIT_INSTANTIATE(double)

}  // namespace ditchkit::nn
