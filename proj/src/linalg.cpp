#include "sievebias/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace sievebias {

namespace {

double svd_norm(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()[0];
}

// power iteration on M^T M; returns -1 when it fails to lock on
double power_iteration_norm(const Matrix& m) {
    const Eigen::Index n = m.cols();
    Vector v = Vector::Ones(n);
    // deterministic symmetry-breaking perturbation
    for (Eigen::Index i = 0; i < n; ++i) v[i] += 1e-3 * static_cast<double>(i % 7);
    v.normalize();
    double sigma_sq = 0.0;
    constexpr int kMaxIter = 20000;
    for (int it = 0; it < kMaxIter; ++it) {
        Vector w = m.transpose() * (m * v);
        const double norm_w = w.norm();
        if (norm_w == 0.0) return 0.0;
        w /= norm_w;
        const double next = (m * w).squaredNorm();
        const bool converged = std::abs(next - sigma_sq) <= 1e-14 * std::max(next, 1.0);
        sigma_sq = next;
        v = std::move(w);
        if (converged && it > 2) return std::sqrt(sigma_sq);
    }
    return -1.0;
}

}  // namespace

double spectral_norm(const Matrix& m) {
    if (!m.allFinite()) throw std::invalid_argument("spectral_norm: non-finite entries");
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    if (m.rows() < 32 && m.cols() < 32) return svd_norm(m);
    const double by_power = power_iteration_norm(m);
    if (by_power >= 0.0) return by_power;
    // slow-converging spectrum (near-degenerate top singular pair)
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues()[0];
}

bool is_symmetric(const Matrix& m, double rel_tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
    return ((m - m.transpose()).cwiseAbs().maxCoeff()) <= rel_tol * scale;
}

void require_spd(const Matrix& m, const char* context) {
    if (m.rows() != m.cols())
        throw std::invalid_argument(std::string(context) + ": matrix not square");
    if (!m.allFinite())
        throw std::invalid_argument(std::string(context) + ": non-finite entries");
    if (!is_symmetric(m))
        throw std::invalid_argument(std::string(context) + ": matrix not symmetric");
    Matrix sym = 0.5 * (m + m.transpose());
    // rounding-level indefiniteness is forgiven up to 1e-12 * trace
    const double tol = 1e-12 * std::abs(sym.trace());
    sym.diagonal().array() += tol;
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success)
        throw singular_error(std::string(context) + ": matrix not positive definite");
}

namespace {

Matrix sym_eig_power(const Matrix& m, double exponent, const char* context) {
    if (!is_symmetric(m))
        throw std::invalid_argument(std::string(context) + ": matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
    if (eig.info() != Eigen::Success)
        throw singular_error(std::string(context) + ": eigendecomposition failed");
    Vector lambda = eig.eigenvalues();
    const double lmax = lambda.size() ? std::max(lambda.maxCoeff(), 0.0) : 0.0;
    const double floor = 1e-14 * std::max(lmax, 1.0);
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < floor) {
            if (exponent < 0.0)
                throw singular_error(std::string(context) +
                                     ": eigenvalue below floor, inverse root undefined");
            lambda[i] = floor;
        }
        lambda[i] = std::pow(lambda[i], exponent);
    }
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

Matrix sym_sqrt(const Matrix& m) { return sym_eig_power(m, 0.5, "sym_sqrt"); }

Matrix sym_inv_sqrt(const Matrix& m) { return sym_eig_power(m, -0.5, "sym_inv_sqrt"); }

Matrix spd_solve(const Matrix& a, const Matrix& rhs) {
    Eigen::LLT<Matrix> llt(0.5 * (a + a.transpose()));
    if (llt.info() != Eigen::Success) throw singular_error("spd_solve: factorization failed");
    return llt.solve(rhs);
}

Vector spd_solve(const Matrix& a, const Vector& rhs) {
    Eigen::LLT<Matrix> llt(0.5 * (a + a.transpose()));
    if (llt.info() != Eigen::Success) throw singular_error("spd_solve: factorization failed");
    return llt.solve(rhs);
}

PartitionedOperator::PartitionedOperator(Matrix full_matrix, Eigen::Index split_index)
    : full(std::move(full_matrix)), split(split_index) {
    if (split <= 0 || split >= full.rows())
        throw std::invalid_argument("PartitionedOperator: split must satisfy 0 < s < N");
    require_spd(full, "PartitionedOperator");
}

SieveFrame::SieveFrame(Eigen::Index p_, Eigen::Index p1_, Eigen::Index p_max_)
    : p(p_), p1(p1_), p_max(p_max_) {
    // p_max == p + p1 is the degenerate no-tail frame; sweeps use it as the
    // truncation-free reference point
    if (p < 1 || p1 < 1 || p_max < p + p1)
        throw std::invalid_argument("SieveFrame: need p >= 1, p1 >= 1, P_max >= p + p1");
}

Matrix profile_matrix(const PartitionedOperator& op, ProfileRoute route) {
    const Eigen::Index s = op.split;
    if (route == ProfileRoute::schur) {
        const Matrix cross = op.cross();
        Eigen::LLT<Matrix> llt(Matrix(op.bottom()));
        if (llt.info() != Eigen::Success)
            throw singular_error("profile_matrix: bottom block not positive definite");
        Matrix result = Matrix(op.top()) - cross * llt.solve(cross.transpose());
        return 0.5 * (result + result.transpose());
    }
    Eigen::LLT<Matrix> llt(op.full);
    if (llt.info() != Eigen::Success)
        throw singular_error("profile_matrix: operator not positive definite");
    const Matrix inv = llt.solve(Matrix::Identity(op.size(), op.size()));
    Eigen::LLT<Matrix> top_llt(Matrix(inv.topLeftCorner(s, s)));
    if (top_llt.info() != Eigen::Success)
        throw singular_error("profile_matrix: leading block of inverse not positive definite");
    Matrix result = top_llt.solve(Matrix::Identity(s, s));
    return 0.5 * (result + result.transpose());
}

Identifiability identifiability_nu(const PartitionedOperator& op) {
    Identifiability out;
    const Matrix d_inv = sym_inv_sqrt(op.top());
    const Matrix h_inv = sym_inv_sqrt(op.bottom());
    const Matrix coupling = h_inv * op.cross().transpose() * d_inv;
    out.rho = spectral_norm(coupling);
    out.rho_squared = out.rho * out.rho;
    out.violated = out.rho >= 1.0;
    return out;
}

double matrix_closeness(const Matrix& ma, const Matrix& mb) {
    if (ma.rows() != mb.rows() || ma.cols() != mb.cols())
        throw std::invalid_argument("matrix_closeness: size mismatch");
    require_spd(ma, "matrix_closeness (first argument)");
    if (!is_symmetric(mb))
        throw std::invalid_argument("matrix_closeness: second argument not symmetric");
    Eigen::LLT<Matrix> llt(0.5 * (ma + ma.transpose()));
    if (llt.info() != Eigen::Success) throw singular_error("matrix_closeness: singular Ma");
    const Matrix mb2 = mb * mb;
    // Ma^{-1} Mb^2 Ma^{-1} via two solves
    const Matrix x = llt.solve(llt.solve(mb2).transpose());
    Matrix gap = Matrix::Identity(ma.rows(), ma.cols()) - x;
    gap = 0.5 * (gap + gap.transpose());
    return spectral_norm(gap);
}

}  // namespace sievebias
