#pragma once

#include <Eigen/Core>

#include "sievebias/errors.hpp"

namespace sievebias {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Largest singular value. Dense SVD below size 32, power iteration on M^T M
// above, with an SVD fallback when the iteration stalls. Relative accuracy
// 1e-10 or better.
double spectral_norm(const Matrix& m);

// True if m is symmetric within `rel_tol` relative to its largest entry.
bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

// Throws singular_error unless m is symmetric positive definite
// (attempted Cholesky factorization; tolerance 1e-12 * trace).
void require_spd(const Matrix& m, const char* context);

// Symmetric square root / inverse square root via eigendecomposition.
// Eigenvalues are floored at 1e-14 (relative to the largest) before the
// root is taken; inverse roots throw on a floored eigenvalue.
Matrix sym_sqrt(const Matrix& m);
Matrix sym_inv_sqrt(const Matrix& m);

// Solve with a symmetric positive definite matrix; throws singular_error.
Matrix spd_solve(const Matrix& a, const Matrix& rhs);
Vector spd_solve(const Matrix& a, const Vector& rhs);

// A symmetric positive definite operator with a declared block split:
//
//     full = [ top    cross  ]      top    : s x s
//            [ cross^T bottom]      bottom : (N-s) x (N-s)
//
// Houses both hessian splits used downstream: the sieve split at p* and the
// parameter/nuisance split at p.
struct PartitionedOperator {
    Matrix full;
    Eigen::Index split;

    PartitionedOperator(Matrix full_matrix, Eigen::Index split_index);

    Eigen::Index size() const { return full.rows(); }
    auto top() const { return full.topLeftCorner(split, split); }
    auto cross() const { return full.topRightCorner(split, full.cols() - split); }
    auto bottom() const {
        return full.bottomRightCorner(full.rows() - split, full.cols() - split);
    }
};

// Dimensions of the sieve approximation: p model parameters, p1 sieve
// coordinates, and the truncated ambient dimension P_max. The projections
// and embeddings of the construction are index-range selections on vectors
// of length P_max.
struct SieveFrame {
    Eigen::Index p = 0;
    Eigen::Index p1 = 0;
    Eigen::Index p_max = 0;

    SieveFrame() = default;
    SieveFrame(Eigen::Index p_, Eigen::Index p1_, Eigen::Index p_max_);

    Eigen::Index p_star() const { return p + p1; }
    Eigen::Index tail_dim() const { return p_max - p_star(); }
};

enum class ProfileRoute {
    schur,         // top - cross * bottom^{-1} * cross^T
    inverse_block  // ((full^{-1})_{top-left})^{-1}
};

// Profile (effective information) matrix for the leading block:
// (Pi full^{-1} Pi^T)^{-1}, equal to the Schur complement of the bottom
// block. Returns an s x s symmetric positive definite matrix.
Matrix profile_matrix(const PartitionedOperator& op, ProfileRoute route = ProfileRoute::schur);

// Coupling strength between the leading and trailing blocks:
// rho = || bottom^{-1/2} cross^T top^{-1/2} || with the blocks read as
// squared operators (top = D0^2, cross = A0, bottom = H0^2).
struct Identifiability {
    double rho = 0.0;
    double rho_squared = 0.0;
    bool violated = false;  // rho >= 1; non-fatal
};

Identifiability identifiability_nu(const PartitionedOperator& op);

// || I - Ma^{-1} Mb^2 Ma^{-1} || for square-root-type inputs Ma (SPD) and
// Mb (symmetric PSD); the squaring of Mb happens internally.
double matrix_closeness(const Matrix& ma, const Matrix& mb);

}  // namespace sievebias
