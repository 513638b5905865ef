#include <doctest.h>

#include <cmath>

#include "sievebias/population.hpp"
#include "sievebias/rng.hpp"

using namespace sievebias;

namespace {

PopulationConfig small_config() {
    PopulationConfig pc;
    pc.quad_radial = 96;
    pc.quad_angular = 192;
    return pc;
}

}  // namespace

TEST_CASE("population model: truth point is stationary and consistent") {
    const SingleIndexTruth truth = make_rate_truth(3.0, 2, 30);
    const PopulationModel pop = population_operator(truth, truth.basis_spec(8), 32,
                                                    small_config());
    REQUIRE(pop.ups_star.size() == 32);
    CHECK(pop.model.gradient(pop.ups_star).norm() == 0.0);

    // tangent basis is orthonormal and orthogonal to the direction
    CHECK((pop.tangent_basis.transpose() * pop.tangent_basis -
           Matrix::Identity(1, 1))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
    CHECK(std::abs(pop.tangent_basis.col(0).dot(truth.theta_star)) <= 1e-12);
}

TEST_CASE("population model: derivative consistency at perturbed points") {
    const SingleIndexTruth truth = make_rate_truth(3.0, 2, 24);
    const PopulationModel pop = population_operator(truth, truth.basis_spec(6), 26,
                                                    small_config());
    Rng rng(5);
    for (int trial = 0; trial < 3; ++trial) {
        Vector u = pop.ups_star;
        for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += 0.05 * rng.normal();

        const Vector grad = pop.model.gradient(u);
        const Matrix hess = pop.model.hessian(u);
        CHECK(is_symmetric(hess, 1e-10));
        const double h = 1e-6;
        for (Eigen::Index i : {0, 1, 5, 25}) {
            Vector up = u, dn = u;
            up[i] += h;
            dn[i] -= h;
            const double fd = (pop.model.value(up) - pop.model.value(dn)) / (2 * h);
            CHECK(std::abs(fd - grad[i]) <= 1e-5 * (1.0 + std::abs(grad[i])));
            const Vector fd_col = -(pop.model.gradient(up) - pop.model.gradient(dn)) / (2 * h);
            CHECK((fd_col - hess.col(i)).norm() <= 1e-4 * (1.0 + hess.col(i).norm()));
        }

        // matvec route equals the assembled operator
        const Vector w = rng.normal_vector(u.size());
        CHECK((pop.model.hessian_apply(u, w) - hess * w).norm() <=
              1e-12 * (1.0 + (hess * w).norm()));
    }
}

TEST_CASE("population model: zero link gives a zero tail everywhere") {
    SingleIndexTruth truth = make_rate_truth(3.0, 2, 10);
    truth.f_coeffs.setZero();
    const PopulationModel pop = population_operator(truth, truth.basis_spec(4), 16,
                                                    small_config());
    CHECK(kappa_star(pop.model.frame, pop.ups_star).norm() == 0.0);
    const Matrix hess = pop.model.hessian(pop.ups_star);
    for (Eigen::Index m : {4, 6}) {
        ContrastModel model_m = pop.model;
        model_m.frame = SieveFrame(1, m, 16);
        CHECK(alpha_of_m(model_m, pop.ups_star, &hess) == 0.0);
    }
}

TEST_CASE("population quadrature matches a Monte Carlo oracle") {
    const SingleIndexTruth truth = make_rate_truth(3.0, 2, 12);
    const PopulationModel pop = population_operator(truth, truth.basis_spec(4), 14,
                                                    small_config());
    const Matrix hess = pop.model.hessian(pop.ups_star);

    // one curvature entry, re-estimated by brute-force sampling: the
    // coefficient block at the truth is E[e_j(T) e_k(T)]
    const Basis basis({truth.basis_family, 13, truth.s_x});
    Rng rng(1234);
    const Eigen::Index draws = 400000;
    double sum = 0.0, sum_sq = 0.0;
    for (Eigen::Index i = 0; i < draws; ++i) {
        Vector x(2);
        for (;;) {
            const Vector dir = rng.unit_vector(2);
            const double radius = truth.s_x * std::sqrt(rng.uniform());
            x = radius * dir;
            if (rng.uniform() < 1.0 - radius * radius / (truth.s_x * truth.s_x)) break;
        }
        const double t = x.dot(truth.theta_star);
        const double value = basis.eval_unchecked(1, t) * basis.eval_unchecked(2, t);
        sum += value;
        sum_sq += value * value;
    }
    const double mc_mean = sum / static_cast<double>(draws);
    const double mc_var = (sum_sq / static_cast<double>(draws) - mc_mean * mc_mean) /
                          static_cast<double>(draws);
    const double entry = hess(2, 3);  // coefficient indices 1 and 2 after the chart slot
    CHECK(std::abs(entry - mc_mean) <= 3.0 * std::sqrt(mc_var));
}

TEST_CASE("coefficient-block curvature is coefficient-free") {
    const SingleIndexTruth truth = make_rate_truth(3.0, 2, 12);
    const PopulationModel pop = population_operator(truth, truth.basis_spec(4), 14,
                                                    small_config());
    Vector u1 = pop.ups_star;
    Vector u2 = pop.ups_star;
    u2.tail(13) *= -2.5;
    const Matrix h1 = pop.model.hessian(u1);
    const Matrix h2 = pop.model.hessian(u2);
    // same chart point, different coefficients: the coefficient block is
    // identical because the residual enters that block nowhere
    CHECK((h1.bottomRightCorner(13, 13) - h2.bottomRightCorner(13, 13))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("quadrature_gap is tiny at the automatic orders") {
    const SingleIndexTruth truth = make_rate_truth(3.0, 2, 20);
    PopulationConfig pc;  // automatic order selection
    CHECK(quadrature_gap(truth, truth.basis_spec(6), 24, pc) <= 1e-8);
}

TEST_CASE("rate_sweep validates its inputs") {
    const SingleIndexTruth truth = make_rate_truth(3.0, 2, 40);
    PopulationConfig pc = small_config();
    CHECK_THROWS_AS(rate_sweep(truth, {4, 8, 16}, 64, pc), std::invalid_argument);
    CHECK_THROWS_AS(rate_sweep(truth, {4, 8, 16, 32}, 64, pc), std::invalid_argument);
    CHECK_THROWS_AS(rate_sweep(truth, {4, 8, 16, 40}, 40, pc), std::invalid_argument);
}

TEST_CASE("rate_sweep: small-scale behavior") {
    const SingleIndexTruth truth = make_rate_truth(3.0, 2, 62);
    PopulationConfig pc;  // automatic orders
    const RateReport report = rate_sweep(truth, {4, 8, 16, 40}, 64, pc, 5);
    REQUIRE(report.points.size() == 4);

    for (std::size_t i = 1; i < report.points.size(); ++i) {
        // the audited quantities fall monotonically on the tight family
        // (tau sits at the quadrature noise floor and is exempt)
        CHECK(report.points[i].alpha <= report.points[i - 1].alpha * 1.05);
        CHECK(report.points[i].beta <= report.points[i - 1].beta * 1.05);
        CHECK(report.points[i].hkappa_sq <= report.points[i - 1].hkappa_sq * 1.05);
    }
    for (const RatePoint& pt : report.points) {
        CHECK(pt.cross_max <= 1e-8 * report.n_scale);
        CHECK(pt.beta < 1.0);
        CHECK(pt.alpha >= 0.0);
    }
    CHECK(report.slope_alpha < -2.0);
    CHECK(report.slope_hkappa < -5.0);
}

TEST_CASE("population model runs on the wavelet basis") {
    SingleIndexTruth truth = make_rate_truth(3.0, 2, 12);
    truth.basis_family = BasisFamily::daubechies;
    PopulationConfig pc;
    pc.quad_radial = 128;
    pc.quad_angular = 256;
    const PopulationModel pop = population_operator(truth, truth.basis_spec(4), 14, pc);
    CHECK(pop.model.gradient(pop.ups_star).norm() == 0.0);
    const Matrix hess = pop.model.hessian(pop.ups_star);
    CHECK(is_symmetric(hess, 1e-10));
    ContrastModel model_m = pop.model;
    model_m.frame = SieveFrame(1, 4, 14);
    const double alpha = alpha_of_m(model_m, pop.ups_star, &hess);
    CHECK(alpha > 0.0);
    CHECK(std::isfinite(alpha));
    CHECK(beta_of_m(model_m, pop.ups_star, &hess) < 1.0);
}

TEST_CASE("population model serves the audit operations through both routes") {
    const SingleIndexTruth truth = make_rate_truth(3.0, 2, 30);
    const PopulationModel pop = population_operator(truth, truth.basis_spec(8), 32,
                                                    small_config());
    ContrastModel no_matvec = pop.model;
    no_matvec.hessian_times = nullptr;
    const auto grid = lambda_grid(5);
    const TailSmoothness fast = tail_smoothness(pop.model, pop.ups_star, grid);
    const TailSmoothness slow = tail_smoothness(no_matvec, pop.ups_star, grid);
    CHECK(std::abs(fast.tau - slow.tau) <= 1e-10 * (1.0 + slow.tau));
    CHECK(std::abs(fast.cross - slow.cross) <= 1e-10 * (1.0 + slow.cross));
}
