#include "ditchkit/nn/tensor.hpp"

#include <cmath>

namespace ditchkit::nn {

std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
    return out + ")";
}

template <class T>
void check_finite(const Tensor<T>& t, const std::string& where) {
    for (T v : t.data)
        if (!std::isfinite(v)) throw SolverError("non-finite value in " + where);
}

template <class T>
Param<T>& ParamStore<T>::add(const std::string& name, const Shape& shape) {
    if (params_.count(name)) throw ConfigError("duplicate parameter name " + name);
    Param<T>& p = params_[name];
    p.value = Tensor<T>(shape);
    p.grad = Tensor<T>(shape);
    p.m = Tensor<T>(shape);
    p.v = Tensor<T>(shape);
    return p;
}

template <class T>
Param<T>& ParamStore<T>::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter " + name);
    return it->second;
}

template <class T>
const Param<T>& ParamStore<T>::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter " + name);
    return it->second;
}

template <class T>
std::size_t ParamStore<T>::count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
}

template <class T>
void ParamStore<T>::zero_grad() {
    for (auto& [_, p] : params_) p.grad.fill(T(0));
}

template void check_finite(const Tensor<float>&, const std::string&);
template void check_finite(const Tensor<double>&, const std::string&);
template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace ditchkit::nn
