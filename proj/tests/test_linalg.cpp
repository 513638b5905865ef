#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "sievebias/linalg.hpp"
#include "sievebias/oracle.hpp"
#include "sievebias/rng.hpp"

using namespace sievebias;

namespace {

// independent spectral-norm oracle: sqrt of the top eigenvalue of M^T M
double svd_oracle(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig{Matrix(m.transpose() * m)};
    return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

}  // namespace

TEST_CASE("spectral_norm: identity and diagonal") {
    CHECK(spectral_norm(Matrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-12));
    Vector d(3);
    d << 3.0, -5.0, 2.0;
    CHECK(spectral_norm(Matrix(d.asDiagonal())) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("spectral_norm matches an independent dense oracle") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const Matrix m = random_matrix(8, 8, seed);
        CHECK(spectral_norm(m) == doctest::Approx(svd_oracle(m)).epsilon(1e-10));
    }
    // sizes above the dense cutoff exercise the power iteration
    const Matrix big = random_matrix(40, 40, 9);
    CHECK(spectral_norm(big) == doctest::Approx(svd_oracle(big)).epsilon(1e-10));
    const Matrix rect = random_matrix(48, 33, 10);
    CHECK(spectral_norm(rect) == doctest::Approx(svd_oracle(rect)).epsilon(1e-10));
}

TEST_CASE("spectral_norm basic identities") {
    for (std::uint64_t seed : {4, 5}) {
        const Matrix m = random_matrix(7, 5, seed);
        CHECK(spectral_norm(m) ==
              doctest::Approx(spectral_norm(Matrix(m.transpose()))).epsilon(1e-10));
        CHECK(spectral_norm(Matrix(-2.5 * m)) ==
              doctest::Approx(2.5 * spectral_norm(m)).epsilon(1e-10));
    }
}

TEST_CASE("spectral_norm rejects non-finite input") {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(spectral_norm(m), std::invalid_argument);
}

TEST_CASE("PartitionedOperator validates its invariants") {
    Matrix asym(2, 2);
    asym << 1.0, 0.5, 0.3, 1.0;
    CHECK_THROWS_AS(PartitionedOperator(asym, 1), std::invalid_argument);

    Matrix indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(PartitionedOperator(indefinite, 1), singular_error);

    CHECK_THROWS_AS(PartitionedOperator(Matrix::Identity(3, 3), 0), std::invalid_argument);
    CHECK_THROWS_AS(PartitionedOperator(Matrix::Identity(3, 3), 3), std::invalid_argument);
}

TEST_CASE("profile_matrix 2x2 hand instance") {
    Matrix full(2, 2);
    full << 2.0, 1.0, 1.0, 2.0;
    // oracle: invert the full matrix, take the reciprocal of the leading
    // entry of the inverse
    const Matrix inv = full.inverse();
    const double expected = 1.0 / inv(0, 0);
    CHECK(expected == doctest::Approx(1.5).epsilon(1e-14));
    const Matrix prof = profile_matrix(PartitionedOperator(full, 1));
    REQUIRE(prof.rows() == 1);
    CHECK(prof(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("profile_matrix leaves a decoupled top block unchanged") {
    Matrix full = Matrix::Zero(5, 5);
    full.topLeftCorner(2, 2) = random_spd(2, 21);
    full.bottomRightCorner(3, 3) = random_spd(3, 22);
    const Matrix prof = profile_matrix(PartitionedOperator(full, 2));
    CHECK((prof - full.topLeftCorner(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("profile_matrix: the two routes agree and preserve definiteness") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Eigen::Index n = 3 + static_cast<Eigen::Index>(seed % 14);
        const Eigen::Index split = 1 + static_cast<Eigen::Index>(seed % (n - 1));
        const PartitionedOperator op(random_spd(n, 1000 + seed), split);
        const Matrix a = profile_matrix(op, ProfileRoute::schur);
        const Matrix b = profile_matrix(op, ProfileRoute::inverse_block);
        const double scale = a.cwiseAbs().maxCoeff();
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10 * scale);
        CHECK_NOTHROW(require_spd(a, "profile output"));
    }
}

TEST_CASE("identifiability_nu scalar blocks") {
    Matrix full(2, 2);
    full << 4.0, 1.0, 1.0, 1.0;  // D0^2 = 4, A0 = 1, H0^2 = 1
    const Identifiability ident = identifiability_nu(PartitionedOperator(full, 1));
    CHECK(ident.rho == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ident.rho_squared == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_FALSE(ident.violated);
}

TEST_CASE("identifiability_nu decoupled blocks") {
    Matrix full = Matrix::Zero(6, 6);
    full.topLeftCorner(2, 2) = random_spd(2, 31);
    full.bottomRightCorner(4, 4) = random_spd(4, 32);
    const Identifiability ident = identifiability_nu(PartitionedOperator(full, 2));
    CHECK(ident.rho <= 1e-12);
}

TEST_CASE("identifiability_nu matches a generalized-eigenvalue oracle") {
    for (std::uint64_t seed = 50; seed < 56; ++seed) {
        const Eigen::Index n = 7;
        Matrix full = random_spd(n, seed);
        // shrink the coupling so rho stays comfortably below one
        full.topRightCorner(3, 4) *= 0.6;
        full.bottomLeftCorner(4, 3) *= 0.6;
        const PartitionedOperator op(full, 3);
        const Identifiability ident = identifiability_nu(op);
        // rho^2 = top generalized eigenvalue of (A0 H0^{-2} A0^T, D0^2)
        const Matrix a0 = op.cross();
        const Matrix mid = a0 * Matrix(op.bottom()).inverse() * a0.transpose();
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gev(mid, Matrix(op.top()));
        const double rho_sq = gev.eigenvalues().maxCoeff();
        CHECK(ident.rho == doctest::Approx(std::sqrt(rho_sq)).epsilon(1e-10));
        CHECK(ident.rho < 1.0);  // implied by positive definiteness
    }
}

TEST_CASE("identifiability_nu is invariant under block-orthogonal basis changes") {
    const Eigen::Index n = 9, s = 4;
    const PartitionedOperator op(random_spd(n, 77), s);
    const double rho = identifiability_nu(op).rho;

    auto orthogonal = [](Eigen::Index k, std::uint64_t seed) {
        return Matrix(Eigen::HouseholderQR<Matrix>(random_matrix(k, k, seed)).householderQ());
    };
    Matrix q = Matrix::Zero(n, n);
    q.topLeftCorner(s, s) = orthogonal(s, 78);
    q.bottomRightCorner(n - s, n - s) = orthogonal(n - s, 79);
    const PartitionedOperator rotated(Matrix(q.transpose() * op.full * q), s);
    CHECK(identifiability_nu(rotated).rho == doctest::Approx(rho).epsilon(1e-10));
}

TEST_CASE("matrix_closeness basics") {
    const Matrix ma = random_spd(4, 91);
    CHECK(matrix_closeness(ma, ma) <= 1e-12);

    const Matrix i3 = Matrix::Identity(3, 3);
    CHECK(matrix_closeness(i3, Matrix(1.1 * i3)) == doctest::Approx(0.21).epsilon(1e-12));

    CHECK_THROWS_AS(matrix_closeness(i3, Matrix::Identity(2, 2)), std::invalid_argument);
    Matrix indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(matrix_closeness(indefinite, Matrix::Identity(2, 2)), singular_error);
}

TEST_CASE("matrix_closeness matches an eigendecomposition oracle") {
    for (std::uint64_t seed = 60; seed < 64; ++seed) {
        const Matrix ma = random_spd(5, seed);
        const Matrix mb = random_spd(5, seed + 1000);
        // eigenvalues of Ma^{-1} Mb^2 Ma^{-1} are the generalized
        // eigenvalues of (Mb^2, Ma^2)
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gev(Matrix(mb * mb), Matrix(ma * ma));
        double expected = 0.0;
        for (Eigen::Index i = 0; i < 5; ++i)
            expected = std::max(expected, std::abs(1.0 - gev.eigenvalues()[i]));
        CHECK(matrix_closeness(ma, mb) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("sym_sqrt and sym_inv_sqrt invert each other") {
    const Matrix m = random_spd(6, 71);
    const Matrix root = sym_sqrt(m);
    CHECK((root * root - m).cwiseAbs().maxCoeff() < 1e-10);
    const Matrix inv_root = sym_inv_sqrt(m);
    CHECK((root * inv_root - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("SieveFrame validates dimensions") {
    CHECK_THROWS_AS(SieveFrame(0, 1, 4), std::invalid_argument);
    CHECK_THROWS_AS(SieveFrame(1, 0, 4), std::invalid_argument);
    CHECK_THROWS_AS(SieveFrame(2, 3, 4), std::invalid_argument);
    const SieveFrame no_tail(2, 2, 4);  // degenerate no-tail frame is allowed
    CHECK(no_tail.tail_dim() == 0);
    const SieveFrame frame(2, 3, 10);
    CHECK(frame.p_star() == 5);
    CHECK(frame.tail_dim() == 5);
}
