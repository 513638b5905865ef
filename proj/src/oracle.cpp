#include "sievebias/oracle.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "sievebias/rng.hpp"

namespace sievebias {

QuadraticContrast::QuadraticContrast(Matrix d2_, Vector center_)
    : d2(std::move(d2_)), center(std::move(center_)) {
    require_spd(d2, "QuadraticContrast");
    if (center.size() != d2.rows())
        throw std::invalid_argument("QuadraticContrast: center/operator size mismatch");
}

double QuadraticContrast::value(const Vector& u) const {
    const Vector d = u - center;
    return -0.5 * d.dot(d2 * d);
}

Vector QuadraticContrast::gradient(const Vector& u) const { return -(d2 * (u - center)); }

ContrastModel QuadraticContrast::model(const SieveFrame& frame) const {
    if (frame.p_max != d2.rows())
        throw std::invalid_argument("QuadraticContrast::model: frame does not match operator");
    ContrastModel m;
    m.frame = frame;
    const QuadraticContrast self = *this;
    m.value = [self](const Vector& u) { return self.value(u); };
    m.gradient = [self](const Vector& u) { return self.gradient(u); };
    m.hessian = [self](const Vector&) { return self.d2; };
    m.hessian_times = [self](const Vector&, const Vector& w) { return Vector(self.d2 * w); };
    return m;
}

QuarticPerturbation::QuarticPerturbation(QuadraticContrast base_, double eps_, Vector weights_)
    : base(std::move(base_)), eps(eps_), weights(std::move(weights_)) {
    if (eps < 0.0) throw std::invalid_argument("QuarticPerturbation: eps must be >= 0");
    if (weights.size() != base.d2.rows())
        throw std::invalid_argument("QuarticPerturbation: weights/operator size mismatch");
}

double QuarticPerturbation::value(const Vector& u) const {
    const Vector d = u - base.center;
    return base.value(u) - (eps / 12.0) * (weights.array() * d.array().pow(4)).sum();
}

Vector QuarticPerturbation::gradient(const Vector& u) const {
    const Vector d = u - base.center;
    return base.gradient(u) -
           Vector((eps / 3.0) * (weights.array() * d.array().pow(3)).matrix());
}

Matrix QuarticPerturbation::hessian(const Vector& u) const {
    const Vector d = u - base.center;
    Matrix h = base.d2;
    h.diagonal() += (eps * (weights.array() * d.array().square())).matrix();
    return h;
}

ContrastModel QuarticPerturbation::model(const SieveFrame& frame) const {
    if (frame.p_max != base.d2.rows())
        throw std::invalid_argument("QuarticPerturbation::model: frame does not match operator");
    ContrastModel m;
    m.frame = frame;
    const QuarticPerturbation self = *this;
    m.value = [self](const Vector& u) { return self.value(u); };
    m.gradient = [self](const Vector& u) { return self.gradient(u); };
    m.hessian = [self](const Vector& u) { return self.hessian(u); };
    m.hessian_times = [self](const Vector& u, const Vector& w) {
        return Vector(self.hessian(u) * w);
    };
    return m;
}

OptimumPair exact_sieve_optimum(const QuadraticContrast& q, const SieveFrame& frame) {
    if (frame.p_max != q.d2.rows())
        throw std::invalid_argument("exact_sieve_optimum: frame does not match operator");
    const Eigen::Index p_star = frame.p_star();
    const Eigen::Index tail = frame.tail_dim();

    const Matrix d_m2 = q.d2.topLeftCorner(p_star, p_star);
    const Matrix a_m = q.d2.topRightCorner(p_star, tail);
    const Vector kappa = q.center.tail(tail);

    OptimumPair pair;
    pair.ups_star = q.center;
    pair.ups_star_m = Vector::Zero(frame.p_max);
    pair.ups_star_m.head(p_star) = q.center.head(p_star) + spd_solve(d_m2, Vector(a_m * kappa));
    pair.theta_star = pair.ups_star.head(frame.p);
    pair.theta_star_m = pair.ups_star_m.head(frame.p);
    return pair;
}

double exact_bias(const QuadraticContrast& q, const SieveFrame& frame) {
    const OptimumPair pair = exact_sieve_optimum(q, frame);
    const Eigen::Index p_star = frame.p_star();
    const Matrix d_m2 = q.d2.topLeftCorner(p_star, p_star);
    const Matrix profile = profile_matrix(PartitionedOperator(d_m2, frame.p));
    const Vector gap = pair.theta_star_m - pair.theta_star;
    return (sym_sqrt(profile) * gap).norm();
}

double verify_profile_minimizer_identity(const QuadraticContrast& q, const SieveFrame& frame,
                                const Vector& v) {
    if (v.size() != frame.p)
        throw std::invalid_argument("verify_profile_minimizer_identity: v must have length p");
    const Eigen::Index p = frame.p;
    const Eigen::Index p_star = frame.p_star();
    const Eigen::Index tail = frame.tail_dim();

    const Matrix d_m2 = q.d2.topLeftCorner(p_star, p_star);
    const Matrix a_m = q.d2.topRightCorner(p_star, tail);
    const Matrix h_m2 = q.d2.bottomRightCorner(tail, tail);

    const Matrix d_m_inv = sym_inv_sqrt(d_m2);
    const Matrix h_m2_inv = spd_solve(h_m2, Matrix(Matrix::Identity(tail, tail)));
    const Matrix neumann_core = d_m_inv * a_m * h_m2_inv * a_m.transpose() * d_m_inv;
    if (spectral_norm(neumann_core) >= 1.0)
        throw bound_error("verify_profile_minimizer_identity: Neumann condition violated");

    const Matrix d_breve_m = sym_sqrt(profile_matrix(PartitionedOperator(d_m2, p)));

    // route 1: profile of the full operator applied directly
    const Matrix full_inv = spd_solve(q.d2, Matrix(Matrix::Identity(frame.p_max, frame.p_max)));
    const Vector lhs = full_inv.topLeftCorner(p, p) * (d_breve_m * v);

    // route 2: the stationarity formula through the sieve blocks
    const Matrix core = Matrix::Identity(p_star, p_star) - neumann_core;
    Vector rhs_inner = Vector::Zero(p_star);
    rhs_inner.head(p) = d_breve_m * v;
    const Vector ups_circ = d_m_inv * spd_solve(core, Vector(d_m_inv * rhs_inner));
    const Vector rhs = ups_circ.head(p);

    return (lhs - rhs).norm();
}

Matrix random_spd(Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
    const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    Vector lambda(n);
    const double lo = std::log(0.1), hi = std::log(10.0);
    for (Eigen::Index i = 0; i < n; ++i) lambda[i] = std::exp(rng.uniform(lo, hi));
    Matrix out = q.transpose() * lambda.asDiagonal() * q;
    return 0.5 * (out + out.transpose());
}

QuadraticContrast random_quadratic(const SieveFrame& frame, std::uint64_t seed) {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    Vector center(frame.p_max);
    for (Eigen::Index i = 0; i < frame.p_max; ++i) center[i] = rng.normal();
    return QuadraticContrast(random_spd(frame.p_max, seed), std::move(center));
}

QuarticPerturbation random_quartic(const SieveFrame& frame, double eps, std::uint64_t seed) {
    QuadraticContrast base = random_quadratic(frame, seed);
    Rng rng(seed ^ 0xda942042e4dd58b5ull);
    Vector weights(frame.p_max);
    for (Eigen::Index i = 0; i < frame.p_max; ++i) weights[i] = rng.uniform(0.25, 1.0);
    return QuarticPerturbation(std::move(base), eps, std::move(weights));
}

}  // namespace sievebias
