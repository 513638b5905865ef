#pragma once

#include <cstdint>

#include "sievebias/contrast.hpp"

namespace sievebias {

// EL(u) = -1/2 (u - center)^T D2 (u - center). Everything downstream has a
// closed form: the hessian is the constant D2, delta(r) = 0, b = 1/2, and
// the sieve maximizer is one block solve away.
struct QuadraticContrast {
    Matrix d2;
    Vector center;

    QuadraticContrast(Matrix d2_, Vector center_);

    double value(const Vector& u) const;
    Vector gradient(const Vector& u) const;

    ContrastModel model(const SieveFrame& frame) const;
};

// EL = quadratic - (eps/12) * sum_i w_i (u_i - center_i)^4. The quartic term
// bends the hessian by a known diagonal amount, producing controlled nonzero
// delta(r) and tau(p1).
struct QuarticPerturbation {
    QuadraticContrast base;
    double eps = 0.0;
    Vector weights;

    QuarticPerturbation(QuadraticContrast base_, double eps_, Vector weights_);

    double value(const Vector& u) const;
    Vector gradient(const Vector& u) const;
    Matrix hessian(const Vector& u) const;

    ContrastModel model(const SieveFrame& frame) const;
};

// Closed-form sieve optimum: ups_star_m = Pi ups_star + D_m^{-2} A_m kappa*,
// the Taylor step of the bias expansion made exact by the quadratic.
OptimumPair exact_sieve_optimum(const QuadraticContrast& q, const SieveFrame& frame);

// Exact bias || Dbreve_m (theta*_m - theta*) || in the profile norm.
double exact_bias(const QuadraticContrast& q, const SieveFrame& frame);

// Residual between the two dense routes for the minimizer identity behind
// the profile-closeness bound: Dbreve^{-2} Dbreve_m v against Pi_theta of
// D_m^{-1}(I - D_m^{-1} A_m H_m^{-2} A_m^T D_m^{-1})^{-1} D_m^{-1} Pi^T Dbreve_m v.
double verify_profile_minimizer_identity(const QuadraticContrast& q, const SieveFrame& frame,
                                const Vector& v);

// Random SPD matrix Q^T diag(lambda) Q with Q from the QR factor of a seeded
// Gaussian matrix and lambda log-uniform in [0.1, 10].
Matrix random_spd(Eigen::Index n, std::uint64_t seed);

// Random oracle instances for sweeps; `eps = 0` gives the pure quadratic.
QuadraticContrast random_quadratic(const SieveFrame& frame, std::uint64_t seed);
QuarticPerturbation random_quartic(const SieveFrame& frame, double eps, std::uint64_t seed);

}  // namespace sievebias
