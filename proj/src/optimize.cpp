#include "sievebias/optimize.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

namespace sievebias {

namespace {

// Newton direction for min f with curvature B, shifted until Cholesky
// succeeds. B is the hessian of -EL, already positive definite in the
// concave region; the shift only engages away from it.
Vector modified_newton_step(const Matrix& b, const Vector& grad) {
    const Eigen::Index n = b.rows();
    double shift = 0.0;
    const double scale = std::max(b.cwiseAbs().maxCoeff(), 1.0);
    for (int attempt = 0; attempt < 60; ++attempt) {
        Matrix shifted = b;
        if (shift > 0.0) shifted += shift * Matrix::Identity(n, n);
        Eigen::LLT<Matrix> llt(shifted);
        if (llt.info() == Eigen::Success) {
            Vector step = llt.solve(-grad);
            if (step.allFinite()) return step;
        }
        shift = (shift == 0.0) ? 1e-10 * scale : 4.0 * shift;
    }
    throw convergence_error("modified_newton_step: could not stabilize curvature");
}

}  // namespace

Vector maximize_full(const ContrastModel& model, const Vector& init,
                     const MaximizeOptions& opts, MaximizeTrace* trace) {
    Vector u = init;
    double f = -model.value(u);
    Vector grad = -model.gradient(u);  // gradient of -EL
    double radius = opts.initial_radius;

    auto grad_ok = [&](const Vector& g, const Vector& x) {
        return g.norm() <= opts.grad_tol * (1.0 + x.norm());
    };

    int iter = 0;
    bool converged = grad_ok(grad, u);
    while (!converged && iter < opts.max_iterations) {
        ++iter;
        const Matrix b = model.hessian(u);  // curvature of -EL
        Vector step = modified_newton_step(b, grad);
        const double step_norm = step.norm();
        if (step_norm > radius) step *= radius / step_norm;

        const double predicted = -(grad.dot(step) + 0.5 * step.dot(b * step));
        const Vector candidate = u + step;
        const double f_candidate = -model.value(candidate);
        const double actual = f - f_candidate;

        // Once the predicted reduction is below the rounding resolution of
        // the value itself, the ratio test is meaningless; switch to plain
        // damped Newton on the gradient for the final digits.
        const double f_scale = std::abs(f) + std::abs(f_candidate) + 1.0;
        if (predicted <= 1e-14 * f_scale) {
            const Vector grad_candidate = -model.gradient(candidate);
            if (grad_candidate.norm() < grad.norm()) {
                u = candidate;
                f = f_candidate;
                grad = grad_candidate;
                converged = grad_ok(grad, u);
                continue;
            }
        }

        const double ratio = (predicted > 0.0) ? actual / predicted : -1.0;
        if (ratio < 0.25) {
            radius = 0.25 * step.norm();
        } else if (ratio > 0.75 && step.norm() >= 0.99 * radius) {
            radius = 2.0 * radius;
        }
        if (ratio > 1e-4 && std::isfinite(f_candidate)) {
            u = candidate;
            f = f_candidate;
            grad = -model.gradient(u);
            converged = grad_ok(grad, u);
        }
        if (radius < 1e-14 * (1.0 + u.norm())) {
            // the trust region collapsed to rounding resolution: the
            // value-based ratio is pure noise here, so accept the point if
            // the gradient already satisfies the contract tolerance
            converged = grad.norm() <= 100.0 * opts.grad_tol * (1.0 + u.norm());
            break;
        }
    }

    if (trace) {
        trace->iterations = iter;
        trace->final_gradient_norm = grad.norm();
        trace->converged = converged;
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "maximize_full: no convergence after " << iter
            << " iterations; |grad| = " << grad.norm() << ", trust radius = " << radius;
        throw convergence_error(msg.str());
    }
    return u;
}

namespace {

// EL restricted to the first p* coordinates, tail frozen at zero
ContrastModel restrict_to_sieve(const ContrastModel& model) {
    const Eigen::Index p_star = model.frame.p_star();
    const Eigen::Index p_max = model.frame.p_max;
    auto embed = [p_star, p_max](const Vector& u) {
        Vector full = Vector::Zero(p_max);
        full.head(p_star) = u;
        return full;
    };
    ContrastModel restricted;
    restricted.frame = model.frame;
    restricted.value = [&model, embed](const Vector& u) { return model.value(embed(u)); };
    restricted.gradient = [&model, embed, p_star](const Vector& u) {
        return Vector(model.gradient(embed(u)).head(p_star));
    };
    restricted.hessian = [&model, embed, p_star](const Vector& u) {
        return Matrix(model.hessian(embed(u)).topLeftCorner(p_star, p_star));
    };
    return restricted;
}

}  // namespace

OptimumPair maximize_sieve(const ContrastModel& model, const Vector& init_full,
                           const MaximizeOptions& opts) {
    const Eigen::Index p = model.frame.p;
    const Eigen::Index p_star = model.frame.p_star();

    OptimumPair pair;
    pair.ups_star = maximize_full(model, init_full, opts);

    const ContrastModel restricted = restrict_to_sieve(model);
    const Vector init_sieve = init_full.head(p_star);
    const Vector sieve_opt = maximize_full(restricted, init_sieve, opts);

    pair.ups_star_m = Vector::Zero(model.frame.p_max);
    pair.ups_star_m.head(p_star) = sieve_opt;
    pair.theta_star = pair.ups_star.head(p);
    pair.theta_star_m = pair.ups_star_m.head(p);
    return pair;
}

OptimumPair maximize_sieve(const ContrastModel& model, const MaximizeOptions& opts) {
    return maximize_sieve(model, Vector::Zero(model.frame.p_max), opts);
}

}  // namespace sievebias
