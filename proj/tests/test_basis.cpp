#include <doctest.h>

#include <cmath>

#include "sievebias/basis.hpp"

using namespace sievebias;

TEST_CASE("cosine family: normalization and endpoints") {
    const Basis basis({BasisFamily::cosine, 8, 1.0});
    CHECK(basis.eval(0, 0.37) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(basis.eval(0, -0.9) == doctest::Approx(0.7071068).epsilon(1e-6));
    // k = 1 at the left endpoint: cos(0)/sqrt(s) = 1
    CHECK(basis.eval(1, -1.0) == doctest::Approx(1.0).epsilon(1e-12));

    const Basis scaled({BasisFamily::cosine, 4, 2.5});
    CHECK(scaled.eval(1, -2.5) == doctest::Approx(1.0 / std::sqrt(2.5)).epsilon(1e-12));
}

TEST_CASE("cosine Gram by 512-point quadrature is the identity") {
    const Basis basis({BasisFamily::cosine, 16, 1.0});
    const Matrix gram = gram_matrix(basis, 16, 512);
    CHECK((gram - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("basis_eval validates domain and index") {
    const BasisSpec spec{BasisFamily::cosine, 4, 1.0};
    CHECK_THROWS_AS(basis_eval(spec, 0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(basis_eval(spec, 4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(basis_eval(spec, -1, 0.0), std::invalid_argument);
    CHECK_NOTHROW(basis_eval(spec, 3, 1.0));
}

TEST_CASE("recurrence rows match the direct evaluations") {
    const Basis basis({BasisFamily::cosine, 24, 1.3});
    Vector values(24), derivs(24), derivs2(24);
    for (double t : {-1.3, -0.7, 0.0, 0.4, 1.29}) {
        basis.rows_all(t, 24, values.data(), derivs.data());
        basis.deriv2_all(t, 24, derivs2.data());
        for (Eigen::Index k = 0; k < 24; ++k) {
            CHECK(values[k] ==
                  doctest::Approx(basis.eval_unchecked(k, t)).epsilon(1e-11));
            CHECK(derivs[k] ==
                  doctest::Approx(basis.deriv_unchecked(k, t)).epsilon(1e-11));
            CHECK(derivs2[k] ==
                  doctest::Approx(basis.deriv2_unchecked(k, t)).epsilon(1e-11));
        }
    }
}

TEST_CASE("cosine derivatives agree with finite differences") {
    const Basis basis({BasisFamily::cosine, 12, 1.0});
    const double h = 1e-6;
    for (double t : {-0.8, 0.1, 0.6}) {
        for (Eigen::Index k = 0; k < 12; ++k) {
            const double fd =
                (basis.eval_unchecked(k, t + h) - basis.eval_unchecked(k, t - h)) / (2 * h);
            CHECK(basis.deriv_unchecked(k, t) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("daubechies filter: orthonormality and moments") {
    const auto h = daubechies_filter(6);
    REQUIRE(h.size() == 12);
    double sum = 0.0, sum_sq = 0.0;
    for (double v : h) {
        sum += v;
        sum_sq += v * v;
    }
    CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(sum_sq == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t shift = 2; shift < h.size(); shift += 2) {
        double dot = 0.0;
        for (std::size_t k = 0; k + shift < h.size(); ++k) dot += h[k] * h[k + shift];
        CHECK(std::abs(dot) <= 1e-12);
    }
}

TEST_CASE("daubechies filter: order 2 matches the closed form") {
    // construction check against the textbook coefficients (up to the
    // equally valid index reversal)
    const auto h = daubechies_filter(2);
    REQUIRE(h.size() == 4);
    const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
    const double ref[4] = {(1 + s3) / (4 * s2), (3 + s3) / (4 * s2), (3 - s3) / (4 * s2),
                           (1 - s3) / (4 * s2)};
    double forward = 0.0, reversed = 0.0;
    for (int i = 0; i < 4; ++i) {
        forward = std::max(forward, std::abs(h[i] - ref[i]));
        reversed = std::max(reversed, std::abs(h[i] - ref[3 - i]));
    }
    CHECK(std::min(forward, reversed) <= 1e-12);
}

TEST_CASE("daubechies basis: constant mode and orthonormality") {
    const Basis basis({BasisFamily::daubechies, 16, 1.0});
    // periodized level-0 scaling function is the constant
    for (double t : {-0.9, 0.0, 0.77})
        CHECK(basis.eval(0, t) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    const Matrix gram = gram_matrix(basis, 16, 1 << 16);
    CHECK((gram - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("daubechies wavelets integrate to zero") {
    const Basis basis({BasisFamily::daubechies, 8, 1.0});
    const Eigen::Index quad = 1 << 15;
    const double h = 2.0 / static_cast<double>(quad);
    for (Eigen::Index k = 1; k < 8; ++k) {
        double integral = 0.0;
        for (Eigen::Index i = 0; i < quad; ++i)
            integral += h * basis.eval_unchecked(k, -1.0 + (i + 0.5) * h);
        CHECK(std::abs(integral) <= 1e-6);
    }
}

TEST_CASE("daubechies derivative tables track finite differences") {
    const Basis basis({BasisFamily::daubechies, 8, 1.0});
    const double h = 1e-4;
    for (double t : {-0.41, 0.13, 0.52}) {
        for (Eigen::Index k = 1; k < 8; ++k) {
            const double fd =
                (basis.eval_unchecked(k, t + h) - basis.eval_unchecked(k, t - h)) / (2 * h);
            const double direct = basis.deriv_unchecked(k, t);
            CHECK(std::abs(fd - direct) <= 1e-2 * (1.0 + std::abs(direct)));
        }
    }
}
