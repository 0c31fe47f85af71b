#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

namespace ditchkit::rom {

/// Leading left singular vectors of a snapshot matrix (columns = flattened frames).
struct PodBasis {
    Eigen::MatrixXd basis;            ///< dim x rank, orthonormal columns
    Eigen::VectorXd singular_values;  ///< all singular values, non-increasing
};

PodBasis pod_fit(const Eigen::MatrixXd& X, std::size_t rank);

/// Orthogonal projection basis * basis^T * x (columns of x projected independently).
Eigen::MatrixXd pod_reconstruct(const PodBasis& pod, const Eigen::MatrixXd& x);

/// Exact DMD model x_t = Phi diag(lambda)^t b.
struct DmdModel {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd modes;  ///< dim x rank
    Eigen::VectorXcd amplitudes;
    Eigen::VectorXd singular_values;  ///< of X, all of them
    double eig_residual = 0.0;        ///< ||A_tilde W - W Lambda||_F

    std::size_t rank() const { return static_cast<std::size_t>(eigenvalues.size()); }
    std::size_t dim() const { return static_cast<std::size_t>(modes.rows()); }
};

inline constexpr double kRankTolerance = 1e-12;

/// Truncated SVD of X, reduced operator U^T X' V S^-1, its eigen-decomposition,
/// exact modes X' V S^-1 W and least-squares amplitudes against x0 = X.col(0).
/// Throws ConfigError if a retained singular value is below kRankTolerance * s_max.
DmdModel dmd_fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xnext, std::size_t rank);

/// Pairs consecutive columns of a snapshot sequence.
DmdModel dmd_fit(const Eigen::MatrixXd& snapshots, std::size_t rank);

/// Columns t = 0 .. n_steps-1 of Re(Phi Lambda^t b).
Eigen::MatrixXd dmd_predict(const DmdModel& m, std::size_t n_steps);

inline constexpr std::uint32_t kDromVersion = 1;

void write_drom(const std::filesystem::path& path, const DmdModel& m);
void write_drom(const std::filesystem::path& path, const PodBasis& p);
/// Returns the stored kind: 0 for DMD (filled into `dmd`), 1 for POD (into `pod`).
std::uint32_t read_drom(const std::filesystem::path& path, DmdModel* dmd, PodBasis* pod);

}  // namespace ditchkit::rom
