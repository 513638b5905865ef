#include "sievebias/contrast.hpp"

#include <cmath>

#include <Eigen/LU>

#include "sievebias/rng.hpp"

namespace sievebias {

Vector kappa_star(const SieveFrame& frame, const Vector& ups_star) {
    if (ups_star.size() != frame.p_max)
        throw std::invalid_argument("kappa_star: vector length does not match frame");
    return ups_star.tail(frame.tail_dim());
}

Vector kappa_star(const ContrastModel& model, const Vector& ups_star) {
    return kappa_star(model.frame, ups_star);
}

std::vector<Vector> sample_local_ball(const LocalBall& ball, std::size_t count,
                                      std::uint64_t seed) {
    if (ball.radius < 0.0) throw std::invalid_argument("sample_local_ball: negative radius");
    const Eigen::Index k = ball.d0.rows();
    if (ball.d0.cols() != k) throw std::invalid_argument("sample_local_ball: D0 not square");
    if (ball.center.size() < k)
        throw std::invalid_argument("sample_local_ball: center shorter than D0 dimension");

    Eigen::PartialPivLU<Matrix> lu(ball.d0);
    if (std::abs(lu.determinant()) < 1e-300)
        throw singular_error("sample_local_ball: D0 singular");

    Rng rng(seed);
    std::vector<Vector> points;
    points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Vector dir = rng.unit_vector(k);
        // boundary draws every 4th sample, backed off by 1e-9 so the
        // membership test survives the D0 round trip
        double scale;
        if (i % 4 == 0) {
            scale = 1.0 - 1e-9;
        } else {
            scale = std::pow(rng.uniform(), 1.0 / static_cast<double>(k));
        }
        const Vector z = (ball.radius * scale) * dir;
        Vector point = ball.center;
        point.head(k) += lu.solve(z);
        points.push_back(std::move(point));
    }
    return points;
}

}  // namespace sievebias
