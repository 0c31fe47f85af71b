#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ditchkit/nn/rng.hpp"

namespace ditchkit::nn {

/// Fills with U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
template <class T>
void glorot_uniform(std::span<T> out, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// rows x cols matrix (row-major) with orthonormal columns (rows >= cols) or
/// rows (rows < cols): QR of a standard-normal matrix with R's diagonal made positive.
std::vector<double> orthogonal(std::size_t rows, std::size_t cols, Rng& rng);

/// Angles (2j - 1) pi / m, j = 1..m/2: conjugate pairs equidistant on the unit circle.
std::vector<double> rotation_angles(std::size_t m);

/// Block-diagonal m x m matrix of 2x2 rotations [cos -sin; sin cos] (row-major).
std::vector<double> koopman_rotation_blocks(std::size_t m, std::span<const double> angles);

}  // namespace ditchkit::nn
