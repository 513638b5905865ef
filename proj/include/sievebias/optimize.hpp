#pragma once

#include "sievebias/contrast.hpp"

namespace sievebias {

struct MaximizeOptions {
    int max_iterations = 200;
    // convergence when ||grad|| <= grad_tol * (1 + ||u||)
    double grad_tol = 1e-10;
    double initial_radius = 1.0;
};

struct MaximizeTrace {
    int iterations = 0;
    double final_gradient_norm = 0.0;
    bool converged = false;
};

// Maximize EL over R^{P_max} by trust-region Newton on -EL with a
// Cholesky-modified curvature operator. Deterministic given init.
Vector maximize_full(const ContrastModel& model, const Vector& init,
                     const MaximizeOptions& opts = {}, MaximizeTrace* trace = nullptr);

// Maximize EL over the first p* coordinates (tail frozen at zero) and over
// the full space; package both optima.
OptimumPair maximize_sieve(const ContrastModel& model, const Vector& init_full,
                           const MaximizeOptions& opts = {});
OptimumPair maximize_sieve(const ContrastModel& model, const MaximizeOptions& opts = {});

}  // namespace sievebias
