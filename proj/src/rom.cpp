#include "ditchkit/rom.hpp"

#include <string>
#include <vector>

#include "ditchkit/binary_io.hpp"
#include "ditchkit/error.hpp"

namespace ditchkit::rom {

PodBasis pod_fit(const Eigen::MatrixXd& X, std::size_t rank) {
    const auto max_rank = static_cast<std::size_t>(std::min(X.rows(), X.cols()));
    if (rank == 0 || rank > max_rank)
        throw ConfigError("POD rank " + std::to_string(rank) + " outside [1, " + std::to_string(max_rank) + "]");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
    PodBasis p;
    p.basis = svd.matrixU().leftCols(static_cast<Eigen::Index>(rank));
    p.singular_values = svd.singularValues();
    return p;
}

Eigen::MatrixXd pod_reconstruct(const PodBasis& pod, const Eigen::MatrixXd& x) {
    if (x.rows() != pod.basis.rows())
        throw ShapeError("pod_reconstruct: snapshot length " + std::to_string(x.rows()) + ", basis has " +
                         std::to_string(pod.basis.rows()));
    return pod.basis * (pod.basis.transpose() * x);
}

DmdModel dmd_fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xnext, std::size_t rank) {
    if (X.rows() != Xnext.rows() || X.cols() != Xnext.cols())
        throw ShapeError("dmd_fit: X and X' must have the same shape");
    const auto max_rank = static_cast<std::size_t>(std::min(X.rows(), X.cols()));
    if (rank == 0 || rank > max_rank)
        throw ConfigError("DMD rank " + std::to_string(rank) + " outside [1, " + std::to_string(max_rank) + "]");
    const auto r = static_cast<Eigen::Index>(rank);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s(r - 1) <= kRankTolerance * s(0))
        throw ConfigError("DMD rank " + std::to_string(rank) + " exceeds the numerical rank of the data; use a smaller rank");

    const Eigen::MatrixXd U = svd.matrixU().leftCols(r);
    const Eigen::MatrixXd V = svd.matrixV().leftCols(r);
    const Eigen::VectorXd inv_s = s.head(r).cwiseInverse();
    const Eigen::MatrixXd XVSinv = Xnext * V * inv_s.asDiagonal();
    const Eigen::MatrixXd Atilde = U.transpose() * XVSinv;

    Eigen::EigenSolver<Eigen::MatrixXd> es(Atilde);
    if (es.info() != Eigen::Success) throw SolverError("DMD eigen-decomposition failed");
    DmdModel m;
    m.eigenvalues = es.eigenvalues();
    const Eigen::MatrixXcd W = es.eigenvectors();
    m.eig_residual = (Atilde.cast<std::complex<double>>() * W - W * m.eigenvalues.asDiagonal()).norm();
    m.modes = XVSinv.cast<std::complex<double>>() * W;
    const Eigen::VectorXcd x0 = X.col(0).cast<std::complex<double>>();
    m.amplitudes = m.modes.colPivHouseholderQr().solve(x0);
    m.singular_values = s;
    return m;
}

DmdModel dmd_fit(const Eigen::MatrixXd& snapshots, std::size_t rank) {
    if (snapshots.cols() < 2) throw ConfigError("DMD needs at least two snapshots");
    const Eigen::Index n = snapshots.cols() - 1;
    return dmd_fit(snapshots.leftCols(n), snapshots.rightCols(n), rank);
}

Eigen::MatrixXd dmd_predict(const DmdModel& m, std::size_t n_steps) {
    Eigen::MatrixXd out(m.modes.rows(), static_cast<Eigen::Index>(n_steps));
    Eigen::VectorXcd coeff = m.amplitudes;
    for (std::size_t t = 0; t < n_steps; ++t) {
        out.col(static_cast<Eigen::Index>(t)) = (m.modes * coeff).real();
        coeff = m.eigenvalues.cwiseProduct(coeff);
    }
    return out;
}

namespace {

void put_real(io::ByteWriter& w, const Eigen::MatrixXd& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) w.f64(a(i, j));
}

void put_complex(io::ByteWriter& w, const Eigen::MatrixXcd& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            w.f64(a(i, j).real());
            w.f64(a(i, j).imag());
        }
}

Eigen::MatrixXd get_real(io::ByteReader& r, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = r.f64();
    return a;
}

Eigen::MatrixXcd get_complex(io::ByteReader& r, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXcd a(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = r.f64();
            a(i, j) = {re, r.f64()};
        }
    return a;
}

void finish(io::ByteWriter& w, const std::filesystem::path& path) {
    w.u32(io::crc32(w.buffer()));
    io::write_file(path, w.buffer());
}

}  // namespace

void write_drom(const std::filesystem::path& path, const DmdModel& m) {
    io::ByteWriter w;
    w.bytes("DROM");
    w.u32(kDromVersion);
    w.u32(0);
    w.u32(static_cast<std::uint32_t>(m.rank()));
    w.u32(static_cast<std::uint32_t>(m.dim()));
    w.u32(static_cast<std::uint32_t>(m.singular_values.size()));
    put_complex(w, m.eigenvalues);
    put_complex(w, m.modes);
    put_complex(w, m.amplitudes);
    put_real(w, m.singular_values);
    finish(w, path);
}

void write_drom(const std::filesystem::path& path, const PodBasis& p) {
    io::ByteWriter w;
    w.bytes("DROM");
    w.u32(kDromVersion);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(p.basis.cols()));
    w.u32(static_cast<std::uint32_t>(p.basis.rows()));
    w.u32(static_cast<std::uint32_t>(p.singular_values.size()));
    put_real(w, p.basis);
    put_real(w, p.singular_values);
    finish(w, path);
}

std::uint32_t read_drom(const std::filesystem::path& path, DmdModel* dmd, PodBasis* pod) {
    io::ByteReader r(io::read_file(path));
    io::expect_header(r, "DROM", kDromVersion);
    const std::uint32_t kind = r.u32();
    const auto rank = static_cast<Eigen::Index>(r.u32());
    const auto dim = static_cast<Eigen::Index>(r.u32());
    const auto n_sv = static_cast<Eigen::Index>(r.u32());
    const std::size_t need = kind == 0 ? static_cast<std::size_t>((rank * 2 + dim * rank * 2) * 8 + n_sv * 8)
                                       : static_cast<std::size_t>((dim * rank + n_sv) * 8);
    if (need > r.remaining()) throw FormatError(FormatErrc::truncated, "DROM payload is truncated");
    if (kind == 0) {
        DmdModel m;
        m.eigenvalues = get_complex(r, rank, 1);
        m.modes = get_complex(r, dim, rank);
        m.amplitudes = get_complex(r, rank, 1);
        m.singular_values = get_real(r, n_sv, 1);
        if (dmd) *dmd = std::move(m);
    } else if (kind == 1) {
        PodBasis p;
        p.basis = get_real(r, dim, rank);
        p.singular_values = get_real(r, n_sv, 1);
        if (pod) *pod = std::move(p);
    } else {
        throw FormatError(FormatErrc::bad_magic, "unknown DROM model kind " + std::to_string(kind));
    }
    const std::uint32_t expect = io::crc32(r.consumed());
    if (r.u32() != expect) throw FormatError(FormatErrc::checksum_mismatch, "DROM checksum mismatch: " + path.string());
    return kind;
}

}  // namespace ditchkit::rom
