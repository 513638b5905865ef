#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sievebias/linalg.hpp"

namespace sievebias {

// Expected contrast functional EL on the truncated ambient space R^{P_max}.
// `hessian` returns the curvature operator of -EL, so it is positive
// definite wherever the contrast is strictly concave. `hessian_times`, when
// set, must equal hessian(u) * w and exists so large models can serve
// matrix-vector products without assembling the full operator.
struct ContrastModel {
    SieveFrame frame;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian;
    std::function<Vector(const Vector&, const Vector&)> hessian_times;

    Matrix hessian_at(const Vector& u) const { return hessian(u); }
    Vector hessian_apply(const Vector& u, const Vector& w) const {
        if (hessian_times) return hessian_times(u, w);
        return hessian(u) * w;
    }
};

// Full and sieve-restricted maximizers. ups_star_m carries the sieve
// maximizer embedded into R^{P_max} with an exactly zero tail.
struct OptimumPair {
    Vector ups_star;
    Vector ups_star_m;
    Vector theta_star;
    Vector theta_star_m;
};

// Ellipsoid { u : ||D0 (u - center)|| <= radius }. `center` lives in the
// ambient space; sampling varies only the first D0.rows() coordinates and
// freezes the rest at the center's values.
struct LocalBall {
    Vector center;
    Matrix d0;
    double radius = 0.0;
};

// Tail of the full optimum beyond the sieve coordinates.
Vector kappa_star(const ContrastModel& model, const Vector& ups_star);
Vector kappa_star(const SieveFrame& frame, const Vector& ups_star);

// Deterministic sampler for the local set. Uniform in the D0-ellipsoid
// except that every fourth draw lies on the boundary (the audited suprema
// concentrate there). Same seed, same sequence.
std::vector<Vector> sample_local_ball(const LocalBall& ball, std::size_t count,
                                      std::uint64_t seed);

}  // namespace sievebias
