#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ditchkit/nn/rng.hpp"
#include "ditchkit/nn/tensor.hpp"

namespace ditchkit::nn {

/// A differentiable stage. forward() caches what backward() needs; backward()
/// adds parameter gradients into the store and returns the input gradient.
template <class T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<T> forward(const Tensor<T>& x) = 0;
    virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
    virtual void initialize(Rng&) {}
    virtual std::string name() const = 0;
};

template <class T>
using LayerPtr = std::unique_ptr<Layer<T>>;

/// y = x W^T + b over the last axis; W is (out, in).
template <class T>
class Dense : public Layer<T> {
public:
    Dense(ParamStore<T>& store, std::string name, std::size_t in, std::size_t out, bool bias = true);
    Tensor<T> forward(const Tensor<T>& x) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void initialize(Rng& rng) override;
    std::string name() const override { return name_; }

    Param<T>& weight() { return *W_; }

private:
    std::string name_;
    std::size_t in_, out_;
    Param<T>* W_;
    Param<T>* b_ = nullptr;
    Tensor<T> x_;
};

/// SAME-padded cross-correlation on (N, H, W, Cin); kernel (k, k, Cin, Cout).
/// Output is ceil(H/s) x ceil(W/s); the total pad max((out-1)s + k - H, 0) is
/// split with the smaller half on the top/left.
template <class T>
class Conv2D : public Layer<T> {
public:
    Conv2D(ParamStore<T>& store, std::string name, std::size_t cin, std::size_t cout, std::size_t k,
           std::size_t stride, bool bias = true);
    Tensor<T> forward(const Tensor<T>& x) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void initialize(Rng& rng) override;
    std::string name() const override { return name_; }

    Param<T>& kernel() { return *K_; }

private:
    std::string name_;
    std::size_t cin_, cout_, k_, s_;
    Param<T>* K_;
    Param<T>* b_ = nullptr;
    Shape in_shape_;
    std::vector<T> cols_;
};

/// Adjoint of the stride-s SAME convolution from an (H s) x (W s) grid:
/// (N, H, W, Cin) -> (N, H s, W s, Cout); kernel stored (k, k, Cout, Cin).
template <class T>
class Conv2DTranspose : public Layer<T> {
public:
    Conv2DTranspose(ParamStore<T>& store, std::string name, std::size_t cin, std::size_t cout, std::size_t k,
                    std::size_t stride, bool bias = true);
    Tensor<T> forward(const Tensor<T>& x) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void initialize(Rng& rng) override;
    std::string name() const override { return name_; }

    Param<T>& kernel() { return *K_; }

private:
    std::string name_;
    std::size_t cin_, cout_, k_, s_;
    Param<T>* K_;
    Param<T>* b_ = nullptr;
    Tensor<T> x_;
};

enum class Activation { leaky_relu, tanh, sigmoid };

inline constexpr double kLeakySlope = 0.01;

template <class T>
class Pointwise : public Layer<T> {
public:
    explicit Pointwise(Activation a) : act_(a) {}
    Tensor<T> forward(const Tensor<T>& x) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    std::string name() const override;

private:
    Activation act_;
    Tensor<T> x_, y_;
};

/// Reshape keeping the element order; a zero entry in the target is inferred.
template <class T>
class Reshape : public Layer<T> {
public:
    explicit Reshape(Shape target) : target_(std::move(target)) {}
    Tensor<T> forward(const Tensor<T>& x) override;
    Tensor<T> backward(const Tensor<T>& dy) override { return dy.reshaped(in_shape_); }
    std::string name() const override { return "reshape"; }

private:
    Shape target_;
    Shape in_shape_;
};

template <class T>
class Sequential : public Layer<T> {
public:
    explicit Sequential(std::string name = "sequential") : name_(std::move(name)) {}
    Layer<T>& add(LayerPtr<T> layer) {
        layers_.push_back(std::move(layer));
        return *layers_.back();
    }
    Tensor<T> forward(const Tensor<T>& x) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void initialize(Rng& rng) override {
        for (auto& l : layers_) l->initialize(rng);
    }
    std::string name() const override { return name_; }
    std::size_t size() const noexcept { return layers_.size(); }
    Layer<T>& operator[](std::size_t i) { return *layers_[i]; }

private:
    std::string name_;
    std::vector<LayerPtr<T>> layers_;
};

/// Single LSTM layer on (N, steps, in); gate order i, f, c, o with one 4n bias.
/// Returns (N, steps, n) with `sequences`, otherwise the last state (N, n).
template <class T>
class LSTM : public Layer<T> {
public:
    LSTM(ParamStore<T>& store, std::string name, std::size_t in, std::size_t units, bool sequences);
    Tensor<T> forward(const Tensor<T>& x) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void initialize(Rng& rng) override;
    std::string name() const override { return name_; }

private:
    std::string name_;
    std::size_t in_, n_;
    bool sequences_;
    Param<T>* K_;  ///< (in, 4n)
    Param<T>* U_;  ///< (n, 4n)
    Param<T>* b_;  ///< (4n)
    Tensor<T> x_;
    std::vector<std::vector<T>> gates_, c_, tc_, h_;  ///< per step, N x 4n / N x n
};

/// Residual embedded-Gaussian non-local block on (N, H, W, C):
/// z = W_w softmax(theta phi^T) g + x, all embeddings bias-free 1x1 maps to C/2.
template <class T>
class NonLocal : public Layer<T> {
public:
    NonLocal(ParamStore<T>& store, std::string name, std::size_t channels);
    Tensor<T> forward(const Tensor<T>& x) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void initialize(Rng& rng) override;
    std::string name() const override { return name_; }

    Param<T>& out_weight() { return *Ww_; }

private:
    std::string name_;
    std::size_t C_;
    Param<T>* Wt_;
    Param<T>* Wp_;
    Param<T>* Wg_;
    Param<T>* Ww_;
    Tensor<T> x_;
    std::vector<T> theta_, phi_, g_, attn_, y_;
};

template <class T>
T leaky_relu(T x) {
    return x > T(0) ? x : T(kLeakySlope) * x;
}
template <class T>
T sigmoid(T x);

/// Row-wise softmax over the last axis of a (rows, cols) buffer, in place.
template <class T>
void softmax_rows(T* data, std::size_t rows, std::size_t cols);

}  // namespace ditchkit::nn
