#include <doctest.h>

#include "sievebias/certificates.hpp"
#include "sievebias/oracle.hpp"
#include "sievebias/rng.hpp"

using namespace sievebias;

TEST_CASE("r_star substitutions") {
    CHECK(r_star(1.0, 4, 1.0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(r_star(0.25, 16, 4.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r_star(0.0, 8, 1.0) == 0.0);
    CHECK_THROWS_AS(r_star(1.0, 4, 0.0), bound_error);
    CHECK_THROWS_AS(r_star(-1.0, 4, 1.0), std::invalid_argument);
    // squared convention uses c^2
    CHECK(r_star(0.5, 4, 1.0, CKappaPower::squared) ==
          doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("hat_alpha substitutions") {
    CHECK(hat_alpha(0.0, 0.1, 0.05, 0.0, 0.0) == doctest::Approx(0.15).epsilon(1e-14));
    // sqrt(1.36/0.64) * 0.14
    CHECK(hat_alpha(0.6, 0.1, 0.0, 0.01, 2.0) ==
          doctest::Approx(0.20408331631958553).epsilon(1e-12));
    CHECK(hat_alpha(0.0, 0.0, 0.0, 0.0, 0.0) == 0.0);
    CHECK_THROWS_AS(hat_alpha(1.0, 0.1, 0.0, 0.0, 0.0), bound_error);
    CHECK_THROWS_AS(hat_alpha(0.5, -0.1, 0.0, 0.0, 0.0), std::invalid_argument);
    // linear convention: sqrt((1+nu)/(1-nu))
    CHECK(hat_alpha(0.5, 1.0, 0.0, 0.0, 0.0, NuPower::linear) ==
          doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("profile_closeness_bound substitutions and monotonicity") {
    CHECK(profile_closeness_bound(0.3, 0.0) == 0.0);
    CHECK(profile_closeness_bound(0.5, 0.1) ==
          doctest::Approx((1.26 / 0.75) * (0.01 / 0.99)).epsilon(1e-13));
    CHECK(profile_closeness_bound(0.5, 0.1) == doctest::Approx(0.0169697).epsilon(1e-4));
    CHECK_THROWS_AS(profile_closeness_bound(0.5, 1.0), bound_error);
    CHECK_THROWS_AS(profile_closeness_bound(1.0, 0.5), bound_error);

    double prev = 0.0;
    for (double beta = 0.0; beta < 0.95; beta += 0.05) {
        const double value = profile_closeness_bound(0.4, beta);
        CHECK(value >= prev);
        prev = value;
    }
}

TEST_CASE("profile_drift_bound substitutions and validity edge") {
    CHECK(profile_drift_bound(0.0) == 0.0);
    CHECK(profile_drift_bound(0.25) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(profile_drift_bound(0.5), bound_error);
    CHECK_THROWS_AS(profile_drift_bound(-0.1), std::invalid_argument);
}

TEST_CASE("hat_alpha is monotone in each argument") {
    const double base = hat_alpha(0.3, 0.2, 0.1, 0.05, 1.0);
    CHECK(hat_alpha(0.4, 0.2, 0.1, 0.05, 1.0) >= base);
    CHECK(hat_alpha(0.3, 0.3, 0.1, 0.05, 1.0) >= base);
    CHECK(hat_alpha(0.3, 0.2, 0.2, 0.05, 1.0) >= base);
    CHECK(hat_alpha(0.3, 0.2, 0.1, 0.10, 1.0) >= base);
    CHECK(hat_alpha(0.3, 0.2, 0.1, 0.05, 2.0) >= base);
}

TEST_CASE("profile_closeness_bound covers the measured profile closeness on random operators") {
    int checked = 0;
    for (std::uint64_t seed = 900; checked < 60; ++seed) {
        const Eigen::Index n = 8 + static_cast<Eigen::Index>(seed % 9);
        const Eigen::Index p = 2, p_star = 4;
        const Matrix full = random_spd(n, seed);

        const PartitionedOperator whole(full, p_star);
        const double beta = identifiability_nu(whole).rho;
        const PartitionedOperator head(Matrix(full.topLeftCorner(p_star, p_star)), p);
        const double rho = identifiability_nu(head).rho;
        if (rho >= 0.9 || beta >= 0.9) continue;
        ++checked;

        const Matrix breve_m = sym_sqrt(profile_matrix(head));
        const Matrix breve = sym_sqrt(profile_matrix(PartitionedOperator(full, p)));
        const double measured = matrix_closeness(breve_m, breve);
        CHECK(measured <= profile_closeness_bound(rho, beta) * (1.0 + 1e-10) + 1e-14);
    }
}

TEST_CASE("assemble_certificate: decoupled quadratic collapses every bound") {
    const SieveFrame frame(1, 2, 6);
    Matrix d2 = Matrix::Zero(6, 6);
    d2.topLeftCorner(3, 3) = random_spd(3, 101);
    d2.bottomRightCorner(3, 3) = random_spd(3, 102);
    Rng rng(103);
    Vector center(6);
    for (int i = 0; i < 6; ++i) center[i] = rng.normal();
    const QuadraticContrast q(d2, center);

    CertificateConfig config;
    config.delta_samples = 300;
    config.b_samples = 500;
    const BiasCertificate cert = assemble_certificate(q.model(frame), config);
    CHECK(cert.binding());
    CHECK(cert.hat_alpha <= 1e-10);
    CHECK(cert.profile_closeness_bound <= 1e-12);
    CHECK(cert.inputs.alpha_m <= 1e-12);
    CHECK(cert.inputs.tau_m <= 1e-12);
    CHECK(cert.inputs.b_hat == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("assemble_certificate: quadratic bias is certified with audited inputs") {
    for (std::uint64_t seed = 120; seed < 126; ++seed) {
        const SieveFrame frame(2, 2, 9);
        const QuadraticContrast q = random_quadratic(frame, seed);
        CertificateConfig config;
        config.delta_samples = 300;
        config.b_samples = 800;
        config.seed = seed;
        const BiasCertificate cert = assemble_certificate(q.model(frame), config);
        CHECK(cert.binding());
        CHECK(exact_bias(q, frame) <= cert.hat_alpha * (1.0 + 1e-9) + 1e-12);
        // delta curve exposes r* and 2 r* as exact grid points
        CHECK(cert.inputs.delta_at(cert.r_star) <= 1e-12);
    }
}

TEST_CASE("assemble_certificate flags an inapplicable distortion regime") {
    // a violently quartic contrast pushes delta(r*) past 1/2
    const SieveFrame frame(1, 1, 4);
    const QuarticPerturbation quartic = random_quartic(frame, 60.0, 130);
    CertificateConfig config;
    config.delta_samples = 400;
    config.b_samples = 600;
    const BiasCertificate cert = assemble_certificate(quartic.model(frame), config);
    CHECK_FALSE(cert.delta_ok);
    CHECK_FALSE(cert.binding());
    CHECK(cert.profile_drift_bound == 0.0);  // not computable in this regime
    // the certificate is still emitted with its audit content intact
    CHECK(cert.inputs.b_hat > 0.0);
}
