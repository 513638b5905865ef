#include "sievebias/certificates.hpp"

#include <cmath>
#include <sstream>

namespace sievebias {

double r_star(double c_kappa, Eigen::Index p1, double b, CKappaPower convention) {
    if (!(b > 0.0)) throw bound_error("r_star: requires b > 0");
    if (c_kappa < 0.0) throw std::invalid_argument("r_star: c_kappa must be >= 0");
    const double c = (convention == CKappaPower::squared) ? c_kappa * c_kappa : c_kappa;
    return std::sqrt(4.0 * c * static_cast<double>(p1) / b);
}

namespace {

double nu_factor(double nu, NuPower convention) {
    if (nu < 0.0) throw std::invalid_argument("nu must be >= 0");
    if (nu >= 1.0) throw bound_error("identifiability violation: nu >= 1");
    if (convention == NuPower::squared) {
        const double nu2 = nu * nu;
        return std::sqrt((1.0 + nu2) / (1.0 - nu2));
    }
    return std::sqrt((1.0 + nu) / (1.0 - nu));
}

}  // namespace

double hat_alpha(double nu, double alpha_m, double tau_m, double delta_2rstar, double r_star,
                 NuPower convention) {
    if (alpha_m < 0.0 || tau_m < 0.0 || delta_2rstar < 0.0 || r_star < 0.0)
        throw std::invalid_argument("hat_alpha: inputs must be >= 0");
    return nu_factor(nu, convention) * (alpha_m + tau_m + 2.0 * delta_2rstar * r_star);
}

double profile_closeness_bound(double nu, double beta, NuPower convention) {
    if (beta < 0.0) throw std::invalid_argument("profile_closeness_bound: beta must be >= 0");
    if (beta >= 1.0) throw bound_error("profile_closeness_bound: requires beta < 1");
    if (nu < 0.0) throw std::invalid_argument("profile_closeness_bound: nu must be >= 0");
    if (nu >= 1.0) throw bound_error("profile_closeness_bound: requires nu < 1");
    const double b2 = beta * beta;
    if (convention == NuPower::squared) {
        const double nu2 = nu * nu;
        return (1.0 + nu2 + b2) / (1.0 - nu2) * b2 / (1.0 - b2);
    }
    return (1.0 + nu + b2) / (1.0 - nu) * b2 / (1.0 - b2);
}

double profile_drift_bound(double delta_rstar) {
    if (delta_rstar < 0.0) throw std::invalid_argument("profile_drift_bound: delta must be >= 0");
    if (delta_rstar >= 0.5) throw bound_error("profile_drift_bound: requires delta(r*) < 1/2");
    return delta_rstar / (1.0 - 2.0 * delta_rstar);
}

BiasCertificate assemble_certificate(const ContrastModel& model,
                                     const CertificateConfig& config) {
    const SieveFrame& frame = model.frame;
    const Eigen::Index p_star = frame.p_star();

    BiasCertificate cert;
    cert.nu_power = config.nu_power;
    cert.c_kappa_power = config.c_kappa_power;

    const Vector init =
        config.init_full ? *config.init_full : Vector(Vector::Zero(frame.p_max));
    cert.optima = maximize_sieve(model, init, config.maximize);
    const Vector& ups_star = cert.optima.ups_star;

    const Matrix hess_star = model.hessian(ups_star);

    AuditReport report;
    report.p1 = frame.p1;
    report.seed = config.seed;
    report.sample_count = config.delta_samples;

    const Identifiability ident =
        identifiability_nu(PartitionedOperator(hess_star.topLeftCorner(p_star, p_star), frame.p));
    report.nu_rho = ident.rho;
    report.nu_rho_squared = ident.rho_squared;

    report.alpha_m = alpha_of_m(model, ups_star, &hess_star);
    const TailSmoothness smooth =
        tail_smoothness(model, ups_star, lambda_grid(config.lambda_points), &hess_star);
    report.tau_m = smooth.tau;
    report.cross_term_max = smooth.cross;
    report.beta_m = beta_of_m(model, ups_star, &hess_star);
    report.c_kappa = c_kappa(model, ups_star, &hess_star);

    // lower-bound constant of the contrast drop, sampled on a shell around
    // the full optimum in the norm of the curvature at that optimum
    const Matrix d_full = sym_sqrt(hess_star);
    double r_max = config.b_r_max;
    if (r_max <= 0.0) {
        const double pilot =
            r_star(report.c_kappa, frame.p1, 0.5, config.c_kappa_power);
        r_max = std::max(1.0, 2.0 * pilot);
    }
    const double r_min = std::min(config.b_r_min, 0.5 * r_max);
    report.b_hat = estimate_b(model, ups_star, d_full, r_min, r_max, config.b_samples,
                              config.seed ^ 0x517cc1b727220a95ull, config.exec);

    cert.r_star = r_star(report.c_kappa, frame.p1, report.b_hat, config.c_kappa_power);

    // distortion curve on [0, 2 r*] around the sieve optimum, normalized by
    // the sieve-block curvature at the full optimum
    const Matrix d0 = sym_sqrt(hess_star.topLeftCorner(p_star, p_star));
    std::vector<double> radii;
    // even grid count keeps r* and 2 r* as exact grid points
    std::size_t grid = std::max<std::size_t>(config.delta_grid, 2);
    grid += grid % 2;
    radii.reserve(grid + 1);
    for (std::size_t i = 0; i <= grid; ++i)
        radii.push_back(2.0 * cert.r_star * static_cast<double>(i) / static_cast<double>(grid));
    report.delta_of_r = delta_curve(model, d0, cert.optima.ups_star_m, radii,
                                    config.delta_samples, config.seed, config.exec);

    cert.delta_rstar = report.delta_at(cert.r_star);
    cert.delta_2rstar = report.delta_of_r.back().second;

    cert.inputs = report;
    cert.nu_ok = report.nu_rho < 1.0;
    cert.beta_ok = report.beta_m < 1.0;
    cert.delta_ok = cert.delta_rstar < 0.5;
    cert.b_ok = report.b_hat > 0.0;

    const double nu = report.nu_rho;
    if (cert.nu_ok) {
        cert.hat_alpha =
            hat_alpha(nu, report.alpha_m, report.tau_m, cert.delta_2rstar, cert.r_star,
                      config.nu_power);
        if (cert.beta_ok) cert.profile_closeness_bound = profile_closeness_bound(nu, report.beta_m, config.nu_power);
    }
    if (cert.delta_ok) cert.profile_drift_bound = profile_drift_bound(cert.delta_rstar);
    return cert;
}

std::string describe(const BiasCertificate& cert) {
    const AuditReport& a = cert.inputs;
    std::ostringstream out;
    out.setf(std::ios::scientific);
    out.precision(6);
    out << "bias certificate (sieve dimension p1 = " << a.p1 << ")\n";
    out << "  status: " << (cert.binding() ? "binding" : "NON-BINDING") << "\n";
    out << "  identifiability   rho = " << a.nu_rho << "  rho^2 = " << a.nu_rho_squared
        << (cert.nu_ok ? "" : "   [violated: rho >= 1]") << "\n";
    out << "  audited scalars   alpha = " << a.alpha_m << "  tau = " << a.tau_m
        << "  beta = " << a.beta_m << (cert.beta_ok ? "" : "  [beta >= 1]") << "\n";
    out << "                    c_kappa = " << a.c_kappa << "  cross term = "
        << a.cross_term_max << "  b = " << a.b_hat << (cert.b_ok ? "" : "  [b <= 0]") << "\n";
    out << "  localization      r* = " << cert.r_star << "  delta(r*) = " << cert.delta_rstar
        << (cert.delta_ok ? "" : "  [delta >= 1/2]") << "  delta(2r*) = "
        << cert.delta_2rstar << "\n";
    out << "  certified bounds  hat_alpha = " << cert.hat_alpha
        << "  profile closeness = " << cert.profile_closeness_bound
        << "  optimum shift closeness = " << cert.profile_drift_bound << "\n";
    out << "  conventions       nu power = " << static_cast<int>(cert.nu_power)
        << "  c_kappa power = " << static_cast<int>(cert.c_kappa_power) << "\n";
    out << "  sampling          " << a.sample_count << " draws, seed " << a.seed << "\n";
    return out.str();
}

}  // namespace sievebias
