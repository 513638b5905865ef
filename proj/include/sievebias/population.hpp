#pragma once

#include "sievebias/audit.hpp"
#include "sievebias/single_index.hpp"

namespace sievebias {

struct PopulationConfig {
    // 0 means auto-scale with the ambient basis count
    Eigen::Index quad_radial = 0;
    Eigen::Index quad_angular = 0;
    Eigen::Index mc_nodes = 200000;  // Monte Carlo fallback for p > 2
    std::uint64_t mc_seed = 20240101;
    double n_scale = 1.0;  // explicit sample-size factor carried by EL
    std::size_t groups = 32;
    Exec exec = Exec::parallel;
};

// Expected contrast EL(phi, c) = -(n/2)(sigma^2 + E|f(X^T theta*) -
// sum_k c_k e_k(X^T theta(phi))|^2) on the truncated ambient space, with
// expectations by disk quadrature for p = 2 and Monte Carlo otherwise.
// theta(phi) = (theta* + B phi)/|theta* + B phi| charts the half sphere at
// the truth; the unconstrained direction parameterization degenerates (a
// radial move is absorbed by a coefficient refit), so the curvature blocks
// are only well conditioned in the chart. The gradient and curvature come
// from the same quadrature nodes as the value, making ups_star = (0, f*) a
// stationary point of the discretized functional exactly.
struct PopulationModel {
    ContrastModel model;
    Vector ups_star;       // (0 chart offset, zero-padded f*)
    Matrix tangent_basis;  // B, p x (p-1)
    double n_scale = 1.0;
};

PopulationModel population_operator(const SingleIndexTruth& truth, const BasisSpec& spec,
                                    Eigen::Index p_max, const PopulationConfig& config = {});

// Relative change of EL and of a curvature probe under doubled quadrature
// orders; callers treat > 1e-6 as non-convergence.
double quadrature_gap(const SingleIndexTruth& truth, const BasisSpec& spec, Eigen::Index p_max,
                      const PopulationConfig& config = {});

struct RatePoint {
    Eigen::Index m = 0;
    double alpha = 0.0;
    double beta = 0.0;
    double tau = 0.0;
    double hkappa_sq = 0.0;  // kappa*^T D_kk kappa*
    double cross_max = 0.0;
};

struct RateReport {
    std::vector<RatePoint> points;
    double slope_alpha = 0.0;
    double slope_beta = 0.0;
    double slope_tau = 0.0;
    double slope_hkappa = 0.0;
    double n_scale = 1.0;
};

// alpha(m), beta(m), tau(m), ||D_kk^{1/2} kappa*||^2 across the sieve
// dimensions in m_list, plus log-log slopes. One ambient curvature assembly
// serves every m.
RateReport rate_sweep(const SingleIndexTruth& truth, const std::vector<Eigen::Index>& m_list,
                      Eigen::Index p_max, const PopulationConfig& config = {},
                      std::size_t lambda_points = 21);

}  // namespace sievebias
