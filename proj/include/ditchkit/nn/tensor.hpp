#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ditchkit/error.hpp"

namespace ditchkit::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& s);

/// Dense row-major array; image data is channels-last (N, H, W, C).
template <class T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), data(shape_size(shape), fill) {}
    Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != shape_size(shape)) throw ShapeError("tensor data does not match shape " + shape_str(shape));
    }

    std::size_t size() const noexcept { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const noexcept { return shape.size(); }
    T* ptr() noexcept { return data.data(); }
    const T* ptr() const noexcept { return data.data(); }
    T& operator[](std::size_t i) { return data[i]; }
    T operator[](std::size_t i) const { return data[i]; }

    Tensor reshaped(Shape s) const& {
        if (shape_size(s) != size()) throw ShapeError("cannot reshape " + shape_str(shape) + " to " + shape_str(s));
        return Tensor(std::move(s), data);
    }
    Tensor reshaped(Shape s) && {
        if (shape_size(s) != size()) throw ShapeError("cannot reshape " + shape_str(shape) + " to " + shape_str(s));
        shape = std::move(s);
        return std::move(*this);
    }
    void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

/// Throws SolverError if any entry is NaN or infinite.
template <class T>
void check_finite(const Tensor<T>& t, const std::string& where);

template <class T>
struct Param {
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m;  ///< Adam first moment
    Tensor<T> v;  ///< Adam second moment
};

/// Named parameters, iterated in name order.
template <class T>
class ParamStore {
public:
    Param<T>& add(const std::string& name, const Shape& shape);
    Param<T>& at(const std::string& name);
    const Param<T>& at(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    std::size_t count() const;  ///< total number of scalar parameters
    void zero_grad();

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    std::size_t size() const noexcept { return params_.size(); }

    long step = 0;  ///< optimizer step counter

private:
    std::map<std::string, Param<T>> params_;
};

}  // namespace ditchkit::nn
