#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace mtmse::linalg {

/// Kronecker product A ⊗ B.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Column-stacking vectorization (Eigen storage is already column-major).
inline Eigen::VectorXd vec(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) throw std::invalid_argument("unvec: size mismatch");
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(sym), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double spectral_radius(const Eigen::MatrixXd& m) {
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

/// Symmetric PSD square root; negative eigenvalues are clamped to zero.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(m));
    Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& a, int p) {
    if (p < 0) throw std::invalid_argument("matrix_power: negative exponent");
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    for (int i = 0; i < p; ++i) out = out * a;
    return out;
}

/// Rank with a relative singular-value threshold (tol × largest singular value).
inline Eigen::Index rank_with_tolerance(const Eigen::MatrixXcd& m, double rel_tol) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    double cut = rel_tol * sv(0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++r;
    return r;
}

/// Assemble an n×n table of blocks into one dense matrix.
inline Eigen::MatrixXd assemble_blocks(const std::vector<std::vector<Eigen::MatrixXd>>& blocks) {
    const std::size_t n = blocks.size();
    std::vector<Eigen::Index> row_dim(n), col_dim(n);
    for (std::size_t i = 0; i < n; ++i) {
        row_dim[i] = blocks[i][i].rows();
        col_dim[i] = blocks[i][i].cols();
    }
    Eigen::Index rows = 0, cols = 0;
    for (std::size_t i = 0; i < n; ++i) { rows += row_dim[i]; cols += col_dim[i]; }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index c = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (blocks[i][j].size() > 0) out.block(r, c, row_dim[i], col_dim[j]) = blocks[i][j];
            c += col_dim[j];
        }
        r += row_dim[i];
    }
    return out;
}

/// Stack matrices with equal column counts on top of each other.
inline Eigen::MatrixXd vstack(const std::vector<Eigen::MatrixXd>& parts) {
    if (parts.empty()) return {};
    Eigen::Index rows = 0;
    for (const auto& p : parts) rows += p.rows();
    Eigen::MatrixXd out(rows, parts.front().cols());
    Eigen::Index r = 0;
    for (const auto& p : parts) {
        out.middleRows(r, p.rows()) = p;
        r += p.rows();
    }
    return out;
}

inline Eigen::VectorXd vcat(const std::vector<Eigen::VectorXd>& parts) {
    Eigen::Index size = 0;
    for (const auto& p : parts) size += p.size();
    Eigen::VectorXd out(size);
    Eigen::Index r = 0;
    for (const auto& p : parts) {
        out.segment(r, p.size()) = p;
        r += p.size();
    }
    return out;
}

}  // namespace mtmse::linalg
