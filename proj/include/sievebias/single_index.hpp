#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sievebias/basis.hpp"

namespace sievebias {

enum class DesignDensity {
    radial_bump,  // d(x) proportional to (1 - ||x||^2 / s^2)+, Lipschitz on R^p
    uniform_ball
};

// Ground truth for Y = f(X^T theta*) + eps with the link expanded in an
// orthonormal basis.
struct SingleIndexTruth {
    Vector theta_star;       // unit vector, first coordinate > 0
    Vector f_coeffs;         // link coefficients in `basis_family`
    BasisFamily basis_family = BasisFamily::cosine;
    double smoothness_a = 3.0;  // coefficient decay exponent, > 2
    double sigma = 0.1;
    double s_x = 1.0;
    DesignDensity density = DesignDensity::radial_bump;

    void validate() const;
    Eigen::Index p() const { return theta_star.size(); }
    BasisSpec basis_spec(Eigen::Index m) const { return {basis_family, m, s_x}; }

    double link(const Basis& basis, double t) const;
    double link_deriv(const Basis& basis, double t) const;
};

// Truth with f*_l = scale * (l+1)^{-(a + 1/2 + 0.1)}: smooth enough for the
// rate statements to apply, with the tail heavy enough that the bounds on
// alpha(m) are near-tight.
SingleIndexTruth make_rate_truth(double a, Eigen::Index p, Eigen::Index coeff_count,
                                 double sigma = 0.1, double s_x = 1.0, double scale = 1.0);

struct Dataset {
    Matrix x;  // n x p, rows inside the s_x ball
    Vector y;  // n responses
    std::uint64_t seed = 0;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index p() const { return x.cols(); }
};

Dataset sample_dataset(const SingleIndexTruth& truth, Eigen::Index n, std::uint64_t seed);

// CSV exchange format: header x_1,...,x_p,y then one row per observation.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

// L(theta, eta) = -1/2 sum_i (Y_i - sum_k eta_k e_k(X_i^T theta))^2
double contrast_value(const Dataset& data, const BasisSpec& spec, const Vector& theta,
                      const Vector& eta);

struct ProfileFitOptions {
    int max_iterations = 500;
    double contrast_gain_tol = 1e-10;
    double ridge_floor = 1e-10;
};

struct ProfileFitTrace {
    std::vector<double> contrast_path;  // nondecreasing
    int iterations = 0;
    bool converged = false;
    bool rank_deficient = false;
};

struct ProfileFit {
    Vector theta;  // unit norm, first coordinate > 0
    Vector eta;
    ProfileFitTrace trace;
};

// Alternating profile estimator: closed-form least squares in eta, projected
// Gauss-Newton on the unit sphere in theta, sign pinned to the half sphere.
// The contrast never decreases across iterations.
ProfileFit profile_fit(const Dataset& data, const BasisSpec& spec, const Vector& init_theta,
                       const ProfileFitOptions& opts = {});

// Best half-sphere direction among `angles` coarse candidates (p = 2 only);
// a deterministic initializer for replicate studies.
Vector coarse_angle_init(const Dataset& data, const BasisSpec& spec, int angles = 16);

}  // namespace sievebias
