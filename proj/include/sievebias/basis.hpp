#pragma once

#include <memory>
#include <vector>

#include "sievebias/linalg.hpp"

namespace sievebias {

enum class BasisFamily { cosine, daubechies };

// Orthonormal basis of L^2([-s_x, s_x], dt).
//
// cosine:      e_0 = 1/sqrt(2 s), e_k(t) = cos(k pi (t+s)/(2s))/sqrt(s).
// daubechies:  periodized db6 wavelets on [0,1] pulled back to [-s, s];
//              flat index k = 2^j + q maps to level j, shift q, with the
//              level-0 periodized scaling function (identically constant)
//              at index 0. Values come from cascade tables at depth 12 with
//              linear interpolation, so tolerances are looser than for the
//              closed-form cosine family.
struct BasisSpec {
    BasisFamily family = BasisFamily::cosine;
    Eigen::Index m = 0;  // number of basis functions
    double s_x = 1.0;    // domain radius
};

class Basis {
  public:
    struct DaubTables;

    explicit Basis(const BasisSpec& spec);

    const BasisSpec& spec() const { return spec_; }
    Eigen::Index size() const { return spec_.m; }

    // domain-checked single evaluation (|t| <= s_x required)
    double eval(Eigen::Index k, double t) const;

    // Unchecked evaluations for the population machinery, which probes
    // arguments slightly outside [-s, s] when the index vector leaves the
    // sphere. The cosine formulas extend smoothly; the periodized wavelets
    // wrap around.
    double eval_unchecked(Eigen::Index k, double t) const;
    double deriv_unchecked(Eigen::Index k, double t) const;
    double deriv2_unchecked(Eigen::Index k, double t) const;

    // fill values / first / second derivatives for all indices below `count`
    void eval_all(double t, Eigen::Index count, double* values) const;
    void deriv_all(double t, Eigen::Index count, double* derivs) const;
    void deriv2_all(double t, Eigen::Index count, double* derivs) const;

    // one fused pass for values and first derivatives (the hot path of the
    // population quadrature); either output may be null
    void rows_all(double t, Eigen::Index count, double* values, double* derivs) const;

  private:
    BasisSpec spec_;
    std::shared_ptr<const DaubTables> daub_;

    double daub_value(Eigen::Index k, double u, int deriv_order) const;
};

double basis_eval(const BasisSpec& spec, Eigen::Index k, double t);

// Gram matrix of the first `count` functions by quadrature (Gauss-Legendre
// for the smooth cosine family, a fine midpoint rule for the wavelets).
Matrix gram_matrix(const Basis& basis, Eigen::Index count, Eigen::Index quad_points);

// Orthonormal Daubechies filter with `taps = 2N` coefficients (sum = sqrt 2),
// built by spectral factorization. Exposed for tests.
std::vector<double> daubechies_filter(int n_vanishing);

}  // namespace sievebias
