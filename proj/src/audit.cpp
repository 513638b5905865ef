#include "sievebias/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "sievebias/rng.hpp"

namespace sievebias {

double AuditReport::delta_at(double r) const {
    double best = 0.0;
    bool found = false;
    for (const auto& [radius, value] : delta_of_r) {
        if (std::abs(radius - r) <= 1e-12 * std::max(1.0, std::abs(r))) return value;
        if (radius <= r) {
            best = value;
            found = true;
        }
    }
    if (!found && !delta_of_r.empty()) return delta_of_r.front().second;
    return best;
}

namespace {

Matrix checked_inverse(const Matrix& d, const char* context) {
    if (d.rows() != d.cols()) throw std::invalid_argument(std::string(context) + ": not square");
    if (!d.allFinite())
        throw std::invalid_argument(std::string(context) + ": non-finite entries");
    Eigen::PartialPivLU<Matrix> lu(d);
    const double det = std::abs(lu.determinant());
    if (!(det > 1e-300)) throw singular_error(std::string(context) + ": singular operator");
    return lu.inverse();
}

// || D0^{-1} curvature(u) D0^{-1} - I || at one evaluation point
double local_distortion(const ContrastModel& model, const Matrix& d0_inv, const Vector& point,
                        Eigen::Index k) {
    const Matrix h_top = model.hessian(point).topLeftCorner(k, k);
    Matrix sandwich = d0_inv * h_top * d0_inv;
    sandwich -= Matrix::Identity(k, k);
    return spectral_norm(sandwich);
}

// canonical pool in the closed unit ball of R^k; every 4th point on the
// boundary (backed off by 1e-9), the first point at the origin
std::vector<Vector> unit_pool(Eigen::Index k, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> pool;
    pool.reserve(count + 1);
    pool.push_back(Vector::Zero(k));
    for (std::size_t i = 0; i < count; ++i) {
        const Vector dir = rng.unit_vector(k);
        const double scale = (i % 4 == 0)
                                 ? 1.0 - 1e-9
                                 : std::pow(rng.uniform(), 1.0 / static_cast<double>(k));
        pool.push_back(scale * dir);
    }
    return pool;
}

}  // namespace

double estimate_delta(const ContrastModel& model, const Matrix& d0, const Vector& center,
                      double r, std::size_t count, std::uint64_t seed, Exec exec) {
    return delta_curve(model, d0, center, {r}, count, seed, exec).front().second;
}

std::vector<std::pair<double, double>> delta_curve(const ContrastModel& model, const Matrix& d0,
                                                   const Vector& center,
                                                   const std::vector<double>& radii,
                                                   std::size_t count, std::uint64_t seed,
                                                   Exec exec) {
    if (radii.empty()) throw std::invalid_argument("delta_curve: empty radius grid");
    if (!std::is_sorted(radii.begin(), radii.end()))
        throw std::invalid_argument("delta_curve: radii must be ascending");
    if (radii.front() < 0.0) throw std::invalid_argument("delta_curve: negative radius");

    const Eigen::Index k = d0.rows();
    if (center.size() < k)
        throw std::invalid_argument("delta_curve: center shorter than D0 dimension");
    const Matrix d0_inv = checked_inverse(d0, "delta_curve: D0");

    const std::vector<Vector> pool = unit_pool(k, count, seed);
    std::vector<std::pair<double, double>> curve;
    curve.reserve(radii.size());

    double running = 0.0;
    for (const double r : radii) {
        const double batch =
            reduce_max(pool.size(), exec,
                       [&](std::size_t i) {
                           Vector point = center;
                           point.head(k) += d0_inv * (r * pool[i]);
                           return local_distortion(model, d0_inv, point, k);
                       },
                       0.0);
        running = std::max(running, batch);
        curve.emplace_back(r, running);
    }
    return curve;
}

double estimate_b(const ContrastModel& model, const Vector& ups_star, const Matrix& d,
                  double r_min, double r_max, std::size_t count, std::uint64_t seed,
                  Exec exec) {
    if (!(r_min > 0.0) || r_max < r_min)
        throw std::invalid_argument("estimate_b: need 0 < r_min <= r_max");
    const Eigen::Index k = d.rows();
    if (ups_star.size() < k)
        throw std::invalid_argument("estimate_b: ups_star shorter than D dimension");
    const Matrix d_inv = checked_inverse(d, "estimate_b: D");

    const double value_star = model.value(ups_star);

    // draws are generated sequentially so the stream is prefix-stable in count
    Rng rng(seed);
    std::vector<Vector> offsets;
    std::vector<double> radii;
    offsets.reserve(count);
    radii.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const Vector dir = rng.unit_vector(k);
        const double t = (i % 4 == 0) ? r_min : rng.uniform(r_min, r_max);
        offsets.push_back(t * dir);
        radii.push_back(t);
    }

    const double worst =
        reduce_min(count, exec,
                   [&](std::size_t i) {
                       Vector point = ups_star;
                       point.head(k) += d_inv * offsets[i];
                       const double drop = -(model.value(point) - value_star);
                       return drop / (radii[i] * radii[i]);
                   },
                   std::numeric_limits<double>::infinity());

    if (!(worst > 0.0))
        throw not_concave_error("estimate_b: nonpositive contrast ratio encountered");
    return worst;
}

namespace {

Matrix curvature_at_star(const ContrastModel& model, const Vector& ups_star,
                         const Matrix* hessian_at_star) {
    if (hessian_at_star) return *hessian_at_star;
    return model.hessian(ups_star);
}

Vector embedded_tail(const SieveFrame& frame, const Vector& kappa) {
    Vector out = Vector::Zero(frame.p_max);
    out.tail(frame.tail_dim()) = kappa;
    return out;
}

void check_lambda_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("lambda grid must be nonempty");
    for (const double lambda : grid)
        if (lambda < 0.0 || lambda > 1.0)
            throw std::invalid_argument("lambda grid must lie in [0, 1]");
}

}  // namespace

double alpha_of_m(const ContrastModel& model, const Vector& ups_star,
                  const Matrix* hessian_at_star) {
    const SieveFrame& frame = model.frame;
    const Eigen::Index p_star = frame.p_star();
    const Matrix hess = curvature_at_star(model, ups_star, hessian_at_star);
    const Vector kappa = kappa_star(frame, ups_star);
    const Vector a_kappa = hess.topRightCorner(p_star, frame.tail_dim()) * kappa;
    // a vanishing coupling needs no whitening (and an unidentified direction
    // can make the whitening itself singular, e.g. for a zero link)
    if (a_kappa.norm() == 0.0) return 0.0;
    const Matrix d_m_inv = sym_inv_sqrt(hess.topLeftCorner(p_star, p_star));
    return (d_m_inv * a_kappa).norm();
}

TailSmoothness tail_smoothness(const ContrastModel& model, const Vector& ups_star,
                               const std::vector<double>& lambda_grid,
                               const Matrix* hessian_at_star) {
    check_lambda_grid(lambda_grid);

    const SieveFrame& frame = model.frame;
    const Eigen::Index p_star = frame.p_star();
    const Eigen::Index tail = frame.tail_dim();
    const Vector kappa = kappa_star(frame, ups_star);
    const Vector kappa_embedded = embedded_tail(frame, kappa);

    Matrix d_m_inv;
    if (hessian_at_star) {
        d_m_inv = sym_inv_sqrt(hessian_at_star->topLeftCorner(p_star, p_star));
    } else {
        d_m_inv = sym_inv_sqrt(model.hessian(ups_star).topLeftCorner(p_star, p_star));
    }

    const Vector hv_star = model.hessian_apply(ups_star, kappa_embedded);
    const Vector a_kappa = hv_star.head(p_star);
    const double kk_star = kappa.dot(hv_star.tail(tail));

    TailSmoothness out;
    for (const double lambda : lambda_grid) {
        Vector point = ups_star;
        point.tail(tail) = lambda * kappa;
        const Vector hv = model.hessian_apply(point, kappa_embedded);
        const double tau_here = (d_m_inv * (hv.head(p_star) - a_kappa)).norm();
        const double cross_here = std::abs(kk_star - kappa.dot(hv.tail(tail)));
        out.tau = std::max(out.tau, tau_here);
        out.cross = std::max(out.cross, cross_here);
    }
    return out;
}

double tau_of_m(const ContrastModel& model, const Vector& ups_star,
                const std::vector<double>& lambda_grid, const Matrix* hessian_at_star) {
    return tail_smoothness(model, ups_star, lambda_grid, hessian_at_star).tau;
}

double cross_term(const ContrastModel& model, const Vector& ups_star,
                  const std::vector<double>& lambda_grid, const Matrix* hessian_at_star) {
    return tail_smoothness(model, ups_star, lambda_grid, hessian_at_star).cross;
}

double beta_of_m(const ContrastModel& model, const Vector& ups_star,
                 const Matrix* hessian_at_star) {
    const SieveFrame& frame = model.frame;
    const Eigen::Index p_star = frame.p_star();
    const Eigen::Index tail = frame.tail_dim();
    const Matrix hess = curvature_at_star(model, ups_star, hessian_at_star);
    const Matrix h_inv = sym_inv_sqrt(hess.bottomRightCorner(tail, tail));
    const Matrix d_m_inv = sym_inv_sqrt(hess.topLeftCorner(p_star, p_star));
    return spectral_norm(h_inv * hess.topRightCorner(p_star, tail).transpose() * d_m_inv);
}

double c_kappa(const ContrastModel& model, const Vector& ups_star,
               const Matrix* hessian_at_star) {
    const SieveFrame& frame = model.frame;
    const Eigen::Index tail = frame.tail_dim();
    const Matrix hess = curvature_at_star(model, ups_star, hessian_at_star);
    const Vector kappa = kappa_star(frame, ups_star);
    const Matrix h_m = sym_sqrt(hess.bottomRightCorner(tail, tail));
    return (h_m * kappa).squaredNorm() / static_cast<double>(frame.p1);
}

double alpha_of_m(const ContrastModel& model, const OptimumPair& opt) {
    return alpha_of_m(model, opt.ups_star);
}
double tau_of_m(const ContrastModel& model, const OptimumPair& opt,
                const std::vector<double>& grid) {
    return tau_of_m(model, opt.ups_star, grid);
}
double cross_term(const ContrastModel& model, const OptimumPair& opt,
                  const std::vector<double>& grid) {
    return cross_term(model, opt.ups_star, grid);
}
double beta_of_m(const ContrastModel& model, const OptimumPair& opt) {
    return beta_of_m(model, opt.ups_star);
}
double c_kappa(const ContrastModel& model, const OptimumPair& opt) {
    return c_kappa(model, opt.ups_star);
}

std::vector<double> lambda_grid(std::size_t points) {
    if (points < 2) throw std::invalid_argument("lambda_grid: need at least 2 points");
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = static_cast<double>(i) / static_cast<double>(points - 1);
    grid.front() = 0.0;
    grid.back() = 1.0;
    return grid;
}

}  // namespace sievebias
