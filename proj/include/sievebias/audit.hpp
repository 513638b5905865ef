#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sievebias/contrast.hpp"
#include "sievebias/parallel.hpp"

namespace sievebias {

// Every scalar the bias machinery audits, in one row.
struct AuditReport {
    Eigen::Index p1 = 0;
    double nu_rho = 0.0;
    double nu_rho_squared = 0.0;
    std::vector<std::pair<double, double>> delta_of_r;  // (r, delta_hat(r)), nondecreasing
    double b_hat = 0.0;
    double alpha_m = 0.0;
    double tau_m = 0.0;
    double beta_m = 0.0;
    double c_kappa = 0.0;
    double cross_term_max = 0.0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;

    double delta_at(double r) const;  // lookup with exact-match preference
};

// sup over the sampled ellipsoid { ||D0 (u - center)|| <= r } of
// || D0^{-1} curvature(u) D0^{-1} - I ||, curvature taken of -EL. The
// sampling dimension is D0.rows(); remaining coordinates stay at `center`.
// The center itself is always part of the sample. One-sided: a lower bound
// on the true sup.
double estimate_delta(const ContrastModel& model, const Matrix& d0, const Vector& center,
                      double r, std::size_t count, std::uint64_t seed,
                      Exec exec = Exec::parallel);

// delta_hat over an ascending radius grid with nested sample sets: one
// canonical pool scaled to each radius plus a running max, so the curve is
// monotone by construction.
std::vector<std::pair<double, double>> delta_curve(const ContrastModel& model, const Matrix& d0,
                                                   const Vector& center,
                                                   const std::vector<double>& radii,
                                                   std::size_t count, std::uint64_t seed,
                                                   Exec exec = Exec::parallel);

// inf over the sampled shell r_min <= ||D (u - ups_star)|| <= r_max of
// -(EL(u) - EL(ups_star)) / ||D (u - ups_star)||^2. Every fourth draw sits
// exactly on the inner radius. One-sided: an upper bound on the true inf.
double estimate_b(const ContrastModel& model, const Vector& ups_star, const Matrix& d,
                  double r_min, double r_max, std::size_t count, std::uint64_t seed,
                  Exec exec = Exec::parallel);

// || D_m^{-1} A_m kappa* || with the blocks read from the curvature at the
// full optimum, split at p*. Pass the precomputed curvature to avoid a
// re-assembly on large models.
double alpha_of_m(const ContrastModel& model, const Vector& ups_star,
                  const Matrix* hessian_at_star = nullptr);

// max over the lambda grid of || D_m^{-1} (cross(ups*, lambda kappa*) - A_m) kappa* ||,
// cross taken from the curvature at the point whose tail is scaled by lambda.
double tau_of_m(const ContrastModel& model, const Vector& ups_star,
                const std::vector<double>& lambda_grid,
                const Matrix* hessian_at_star = nullptr);

// max over the lambda grid of | kappa*^T (K(ups*) - K(ups*, lambda kappa*)) kappa* |
// with K the tail-tail curvature block.
double cross_term(const ContrastModel& model, const Vector& ups_star,
                  const std::vector<double>& lambda_grid,
                  const Matrix* hessian_at_star = nullptr);

// tau and cross-term share their hessian evaluations; this computes both.
struct TailSmoothness {
    double tau = 0.0;
    double cross = 0.0;
};
TailSmoothness tail_smoothness(const ContrastModel& model, const Vector& ups_star,
                               const std::vector<double>& lambda_grid,
                               const Matrix* hessian_at_star = nullptr);

// || H^{-1} A^T D_m^{-1} || at the full optimum, split at p*.
double beta_of_m(const ContrastModel& model, const Vector& ups_star,
                 const Matrix* hessian_at_star = nullptr);

// || H_m kappa* ||^2 / p1, the smallest admissible tail-energy constant.
double c_kappa(const ContrastModel& model, const Vector& ups_star,
               const Matrix* hessian_at_star = nullptr);

// OptimumPair conveniences (all of these quantities live at ups_star).
double alpha_of_m(const ContrastModel& model, const OptimumPair& opt);
double tau_of_m(const ContrastModel& model, const OptimumPair& opt,
                const std::vector<double>& lambda_grid);
double cross_term(const ContrastModel& model, const OptimumPair& opt,
                  const std::vector<double>& lambda_grid);
double beta_of_m(const ContrastModel& model, const OptimumPair& opt);
double c_kappa(const ContrastModel& model, const OptimumPair& opt);

// equispaced grid on [0, 1] including both endpoints
std::vector<double> lambda_grid(std::size_t points = 21);

}  // namespace sievebias
