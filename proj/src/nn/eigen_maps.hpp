#pragma once

#include <Eigen/Dense>

namespace ditchkit::nn::detail {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using CMapMat = Eigen::Map<const RowMat<T>>;
template <class T>
using MapVec = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;

template <class T>
MapMat<T> mat(T* p, Eigen::Index r, Eigen::Index c) {
    return MapMat<T>(p, r, c);
}
template <class T>
CMapMat<T> mat(const T* p, Eigen::Index r, Eigen::Index c) {
    return CMapMat<T>(p, r, c);
}

}  // namespace ditchkit::nn::detail
