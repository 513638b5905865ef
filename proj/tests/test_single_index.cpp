#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "sievebias/rng.hpp"
#include "sievebias/single_index.hpp"

using namespace sievebias;

namespace {

SingleIndexTruth small_truth(double sigma) {
    SingleIndexTruth truth;
    truth.theta_star = Vector(2);
    truth.theta_star << 0.8, 0.6;
    truth.f_coeffs = Vector(6);
    truth.f_coeffs << 0.4, 1.0, 0.6, 0.25, 0.1, 0.04;
    truth.sigma = sigma;
    truth.smoothness_a = 3.0;
    return truth;
}

}  // namespace

TEST_CASE("SingleIndexTruth validation") {
    SingleIndexTruth truth = small_truth(0.1);
    CHECK_NOTHROW(truth.validate());
    truth.theta_star << -0.8, 0.6;
    CHECK_THROWS_AS(truth.validate(), std::invalid_argument);
    truth.theta_star << 0.8, 0.7;
    CHECK_THROWS_AS(truth.validate(), std::invalid_argument);
    truth = small_truth(0.1);
    truth.smoothness_a = 1.5;
    CHECK_THROWS_AS(truth.validate(), std::invalid_argument);
}

TEST_CASE("make_rate_truth builds the near-tight link") {
    const SingleIndexTruth truth = make_rate_truth(3.0, 2, 40);
    CHECK(truth.theta_star.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(truth.theta_star[0] > 0.0);
    for (Eigen::Index l = 0; l < 40; ++l)
        CHECK(truth.f_coeffs[l] ==
              doctest::Approx(std::pow(static_cast<double>(l + 1), -3.6)).epsilon(1e-12));
    // smoothness margin: sum l^{2a} f_l^2 converges with exponent -1.2
    double weighted = 0.0;
    for (Eigen::Index l = 1; l < 40; ++l)
        weighted += std::pow(static_cast<double>(l), 6.0) * truth.f_coeffs[l] *
                    truth.f_coeffs[l];
    CHECK(weighted < 2.0);
}

TEST_CASE("sample_dataset: support, determinism, noiseless case") {
    const SingleIndexTruth truth = small_truth(0.0);
    const Dataset data = sample_dataset(truth, 500, 99);
    REQUIRE(data.n() == 500);
    const Basis basis(truth.basis_spec(truth.f_coeffs.size()));
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        CHECK(data.x.row(i).norm() <= truth.s_x + 1e-12);
        const double link = truth.link(basis, data.x.row(i).dot(truth.theta_star));
        CHECK(data.y[i] == doctest::Approx(link).epsilon(1e-14));
    }
    const Dataset again = sample_dataset(truth, 500, 99);
    CHECK((data.x - again.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((data.y - again.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_dataset noise variance passes a moment check") {
    const SingleIndexTruth truth = small_truth(0.3);
    const Eigen::Index n = 100000;
    const Dataset data = sample_dataset(truth, n, 7);
    const Basis basis(truth.basis_spec(truth.f_coeffs.size()));
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double noise = data.y[i] - truth.link(basis, data.x.row(i).dot(truth.theta_star));
        ss += noise * noise;
    }
    const double sample_var = ss / static_cast<double>(n);
    const double target = truth.sigma * truth.sigma;
    // sample variance of Gaussian noise: sd ~ sigma^2 sqrt(2/n)
    const double three_se = 3.0 * target * std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::abs(sample_var - target) <= three_se);
}

TEST_CASE("contrast_value basics and the double-loop oracle") {
    const SingleIndexTruth truth = small_truth(0.2);
    const Dataset data = sample_dataset(truth, 200, 5);
    const BasisSpec spec = truth.basis_spec(5);
    Vector theta(2);
    theta << 0.6, 0.8;

    SUBCASE("eta = 0") {
        CHECK(contrast_value(data, spec, theta, Vector::Zero(5)) ==
              doctest::Approx(-0.5 * data.y.squaredNorm()).epsilon(1e-12));
    }
    SUBCASE("independent summation oracle") {
        Rng rng(17);
        Vector eta(5);
        for (int k = 0; k < 5; ++k) eta[k] = rng.normal();
        const Basis basis(spec);
        // reversed-order accumulation
        double acc = 0.0;
        for (Eigen::Index i = data.n() - 1; i >= 0; --i) {
            double fit = 0.0;
            for (Eigen::Index k = spec.m - 1; k >= 0; --k)
                fit += eta[k] * basis.eval_unchecked(k, data.x.row(i).dot(theta));
            const double res = data.y[i] - fit;
            acc -= 0.5 * res * res;
        }
        CHECK(contrast_value(data, spec, theta, eta) == doctest::Approx(acc).epsilon(1e-10));
    }
    SUBCASE("perfect interpolation") {
        SingleIndexTruth clean = small_truth(0.0);
        clean.f_coeffs = Vector(4);
        clean.f_coeffs << 0.5, 0.8, 0.3, 0.1;
        const Dataset noiseless = sample_dataset(clean, 100, 6);
        const BasisSpec wide = clean.basis_spec(4);
        CHECK(std::abs(contrast_value(noiseless, wide, clean.theta_star, clean.f_coeffs)) <=
              1e-16 * static_cast<double>(noiseless.n()));
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(contrast_value(data, spec, Vector(2 * theta), Vector::Zero(5)),
                        std::invalid_argument);
        CHECK_THROWS_AS(contrast_value(data, spec, theta, Vector::Zero(3)),
                        std::invalid_argument);
    }
}

TEST_CASE("profile_fit recovers the direction on noiseless data") {
    SingleIndexTruth truth = small_truth(0.0);
    truth.f_coeffs = Vector(6);
    truth.f_coeffs << 0.4, 1.0, 0.6, 0.25, 0.1, 0.04;  // inside the fitted span
    const Dataset data = sample_dataset(truth, 1500, 31);
    const BasisSpec spec = truth.basis_spec(6);

    Vector init(2);
    init << 0.9, std::sqrt(1.0 - 0.81);
    const ProfileFit fit = profile_fit(data, spec, init);
    CHECK((fit.theta - truth.theta_star).norm() <= 1e-6);
    CHECK(fit.theta.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.theta[0] > 0.0);
    for (std::size_t i = 1; i < fit.trace.contrast_path.size(); ++i)
        CHECK(fit.trace.contrast_path[i] >= fit.trace.contrast_path[i - 1]);

    // cross-check against a fine half-circle grid on the profiled contrast
    double best_angle = 0.0, best_value = -std::numeric_limits<double>::infinity();
    const int grid_n = 8000;
    for (int i = 0; i < grid_n; ++i) {
        const double angle = -M_PI / 2 + M_PI * (i + 0.5) / grid_n;
        Vector theta(2);
        theta << std::cos(angle), std::sin(angle);
        Matrix design(data.n(), spec.m);
        const Basis basis(spec);
        Vector row(spec.m);
        for (Eigen::Index r = 0; r < data.n(); ++r) {
            basis.eval_all(data.x.row(r).dot(theta), spec.m, row.data());
            design.row(r) = row.transpose();
        }
        Matrix gram = design.transpose() * design;
        gram.diagonal().array() += 1e-10;
        const Vector eta = gram.llt().solve(design.transpose() * data.y);
        const double value = -0.5 * (data.y - design * eta).squaredNorm();
        if (value > best_value) {
            best_value = value;
            best_angle = angle;
        }
    }
    Vector grid_theta(2);
    grid_theta << std::cos(best_angle), std::sin(best_angle);
    CHECK((fit.theta - grid_theta).norm() <= 1e-3);  // grid resolution limit
}

TEST_CASE("profile_fit is equivariant under rotation at p = 2") {
    SingleIndexTruth truth = small_truth(0.05);
    const Dataset data = sample_dataset(truth, 800, 41);
    const BasisSpec spec = truth.basis_spec(6);
    Vector init(2);
    init << 0.85, std::sqrt(1.0 - 0.85 * 0.85);
    const ProfileFit base = profile_fit(data, spec, init);

    // small rotation keeping everything in the half sphere
    const double angle = 0.15;
    Matrix rot(2, 2);
    rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    Dataset rotated = data;
    rotated.x = data.x * rot.transpose();
    const ProfileFit turned = profile_fit(rotated, spec, Vector(rot * init));
    CHECK((turned.theta - rot * base.theta).norm() <= 1e-6);
}

TEST_CASE("dataset CSV export/import round trip") {
    const SingleIndexTruth truth = small_truth(0.2);
    const Dataset data = sample_dataset(truth, 64, 77);
    const auto path = std::filesystem::temp_directory_path() / "sievebias_dataset.csv";
    write_dataset_csv(path, data);
    const Dataset back = read_dataset_csv(path);
    REQUIRE(back.n() == data.n());
    REQUIRE(back.p() == data.p());
    CHECK((back.x - data.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.y - data.y).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("coarse_angle_init lands near the truth direction") {
    SingleIndexTruth truth = small_truth(0.1);
    const Dataset data = sample_dataset(truth, 1000, 51);
    const Vector init = coarse_angle_init(data, truth.basis_spec(6), 32);
    CHECK(init.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((init - truth.theta_star).norm() <= 0.2);
}
