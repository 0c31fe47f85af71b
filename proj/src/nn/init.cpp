#include "ditchkit/nn/init.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "ditchkit/error.hpp"

namespace ditchkit::nn {

template <class T>
void glorot_uniform(std::span<T> out, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (T& v : out) v = static_cast<T>(rng.uniform(-a, a));
}

template void glorot_uniform(std::span<float>, std::size_t, std::size_t, Rng&);
template void glorot_uniform(std::span<double>, std::size_t, std::size_t, Rng&);

std::vector<double> orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
    const std::size_t tall = std::max(rows, cols), wide = std::min(rows, cols);
    Eigen::MatrixXd a(tall, wide);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
    const Eigen::MatrixXd r = qr.matrixQR();
    for (Eigen::Index j = 0; j < q.cols(); ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    if (rows < cols) q.transposeInPlace();
    std::vector<double> out(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = q(i, j);
    return out;
}

std::vector<double> rotation_angles(std::size_t m) {
    if (m % 2 != 0) throw ConfigError("rotation blocks need an even dimension, got " + std::to_string(m));
    std::vector<double> phi(m / 2);
    for (std::size_t j = 1; j <= m / 2; ++j)
        phi[j - 1] = static_cast<double>(2 * j - 1) * std::numbers::pi / static_cast<double>(m);
    return phi;
}

std::vector<double> koopman_rotation_blocks(std::size_t m, std::span<const double> angles) {
    if (m % 2 != 0) throw ConfigError("rotation blocks need an even dimension, got " + std::to_string(m));
    if (angles.size() != m / 2) throw ConfigError("expected one angle per 2x2 block");
    std::vector<double> K(m * m, 0.0);
    for (std::size_t b = 0; b < m / 2; ++b) {
        const double c = std::cos(angles[b]), s = std::sin(angles[b]);
        const std::size_t i = 2 * b;
        K[i * m + i] = c;
        K[i * m + i + 1] = -s;
        K[(i + 1) * m + i] = s;
        K[(i + 1) * m + i + 1] = c;
    }
    return K;
}

}  // namespace ditchkit::nn
