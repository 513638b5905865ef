#pragma once

#include <cstdint>
#include <optional>

#include "sievebias/audit.hpp"
#include "sievebias/optimize.hpp"

namespace sievebias {

// The source prints the identifiability quantity both squared and plain and
// the tail-energy constant both ways across its statements; the convention
// flags keep both readings available instead of hard-coding one.
enum class NuPower : int { linear = 1, squared = 2 };
enum class CKappaPower : int { linear = 1, squared = 2 };

// localization radius: sqrt(4 * c * p1 / b), c = c_kappa or c_kappa^2
double r_star(double c_kappa, Eigen::Index p1, double b,
              CKappaPower convention = CKappaPower::linear);

// certified bias bound:
//   squared: sqrt((1 + nu^2) / (1 - nu^2)) * (alpha + tau + 2 delta(2 r*) r*)
//   linear:  sqrt((1 + nu)   / (1 - nu))   * (alpha + tau + 2 delta(2 r*) r*)
double hat_alpha(double nu, double alpha_m, double tau_m, double delta_2rstar, double r_star,
                 NuPower convention = NuPower::squared);

// profile-closeness bound between the sieve and full information matrices:
//   (1 + nu^2 + beta^2) / (1 - nu^2) * beta^2 / (1 - beta^2)   (squared)
double profile_closeness_bound(double nu, double beta, NuPower convention = NuPower::squared);

// closeness bound between the sieve profile matrices at the two optima:
//   delta(r*) / (1 - 2 delta(r*)), valid for delta < 1/2
double profile_drift_bound(double delta_rstar);

struct CertificateConfig {
    std::size_t delta_samples = 2000;
    std::size_t b_samples = 4000;
    double b_r_min = 0.05;
    double b_r_max = 0.0;  // 0: derived from the localization radius
    std::size_t delta_grid = 8;
    std::size_t lambda_points = 21;
    std::uint64_t seed = 1;
    NuPower nu_power = NuPower::squared;
    CKappaPower c_kappa_power = CKappaPower::linear;
    MaximizeOptions maximize;
    std::optional<Vector> init_full;  // defaults to the zero vector
    Exec exec = Exec::parallel;
};

struct BiasCertificate {
    AuditReport inputs;
    OptimumPair optima;
    double r_star = 0.0;
    double delta_rstar = 0.0;
    double delta_2rstar = 0.0;
    double hat_alpha = 0.0;
    double profile_closeness_bound = 0.0;
    double profile_drift_bound = 0.0;
    NuPower nu_power = NuPower::squared;
    CKappaPower c_kappa_power = CKappaPower::linear;
    // validity flags; the certificate is emitted either way, flagged
    bool nu_ok = false;      // rho < 1
    bool beta_ok = false;    // beta < 1
    bool delta_ok = false;   // delta(r*) < 1/2
    bool b_ok = false;       // b > 0

    bool binding() const { return nu_ok && beta_ok && delta_ok && b_ok; }
};

// Full pipeline: sieve/full maximization, condition audit, localization
// radius, bound formulas, validity flags.
BiasCertificate assemble_certificate(const ContrastModel& model,
                                     const CertificateConfig& config = {});

// human-readable rendering for the text report
std::string describe(const BiasCertificate& cert);

}  // namespace sievebias
