#include "sievebias/single_index.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

#include "sievebias/csv.hpp"
#include "sievebias/rng.hpp"

namespace sievebias {

void SingleIndexTruth::validate() const {
    if (theta_star.size() < 1)
        throw std::invalid_argument("SingleIndexTruth: empty direction");
    if (std::abs(theta_star.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("SingleIndexTruth: theta_star must have unit norm");
    if (!(theta_star[0] > 0.0))
        throw std::invalid_argument("SingleIndexTruth: theta_star must lie in the half sphere");
    if (!(smoothness_a > 2.0))
        throw std::invalid_argument("SingleIndexTruth: smoothness exponent must exceed 2");
    if (sigma < 0.0) throw std::invalid_argument("SingleIndexTruth: sigma must be >= 0");
    if (!(s_x > 0.0)) throw std::invalid_argument("SingleIndexTruth: s_x must be positive");
    if (f_coeffs.size() < 1) throw std::invalid_argument("SingleIndexTruth: empty link");
    if (!f_coeffs.allFinite())
        throw std::invalid_argument("SingleIndexTruth: non-finite link coefficients");
}

double SingleIndexTruth::link(const Basis& basis, double t) const {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < f_coeffs.size(); ++k)
        acc += f_coeffs[k] * basis.eval_unchecked(k, t);
    return acc;
}

double SingleIndexTruth::link_deriv(const Basis& basis, double t) const {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < f_coeffs.size(); ++k)
        acc += f_coeffs[k] * basis.deriv_unchecked(k, t);
    return acc;
}

SingleIndexTruth make_rate_truth(double a, Eigen::Index p, Eigen::Index coeff_count,
                                 double sigma, double s_x, double scale) {
    SingleIndexTruth truth;
    truth.theta_star = Vector::Zero(p);
    // fixed non-axis-aligned direction on the half sphere
    for (Eigen::Index i = 0; i < p; ++i)
        truth.theta_star[i] = 1.0 / std::sqrt(2.0 + static_cast<double>(i));
    truth.theta_star.normalize();
    truth.smoothness_a = a;
    truth.sigma = sigma;
    truth.s_x = s_x;
    truth.f_coeffs = Vector(coeff_count);
    const double exponent = a + 0.5 + 0.1;
    for (Eigen::Index l = 0; l < coeff_count; ++l)
        truth.f_coeffs[l] = scale * std::pow(static_cast<double>(l + 1), -exponent);
    truth.validate();
    return truth;
}

Dataset sample_dataset(const SingleIndexTruth& truth, Eigen::Index n, std::uint64_t seed) {
    truth.validate();
    if (n < 1) throw std::invalid_argument("sample_dataset: need n >= 1");
    const Eigen::Index p = truth.p();
    const Basis basis(truth.basis_spec(truth.f_coeffs.size()));
    Rng rng(seed);

    Dataset data;
    data.seed = seed;
    data.x.resize(n, p);
    data.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector x(p);
        for (;;) {
            const Vector dir = rng.unit_vector(p);
            const double radius =
                truth.s_x * std::pow(rng.uniform(), 1.0 / static_cast<double>(p));
            x = radius * dir;
            if (truth.density == DesignDensity::uniform_ball) break;
            const double ratio = 1.0 - (radius * radius) / (truth.s_x * truth.s_x);
            if (rng.uniform() < ratio) break;
        }
        data.x.row(i) = x.transpose();
        const double noise = truth.sigma * rng.normal();
        data.y[i] = truth.link(basis, x.dot(truth.theta_star)) + noise;
    }
    return data;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < data.p(); ++j)
        header.push_back("x_" + std::to_string(j + 1));
    header.push_back("y");
    CsvWriter writer(path, header);
    std::vector<std::string> row(header.size());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.p(); ++j) row[j] = format_double(data.x(i, j));
        row[data.p()] = format_double(data.y[i]);
        writer.write_row(row);
    }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_dataset_csv: empty file " + path.string());
    Eigen::Index p = 0;
    {
        std::istringstream header(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(header, cell, ',')) cells.push_back(cell);
        if (cells.size() < 2 || cells.back() != "y")
            throw std::runtime_error("read_dataset_csv: expected x_1..x_p,y header in " +
                                     path.string());
        p = static_cast<Eigen::Index>(cells.size()) - 1;
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<Eigen::Index>(row.size()) != p + 1)
            throw std::runtime_error("read_dataset_csv: ragged row in " + path.string());
        rows.push_back(std::move(row));
    }
    Dataset data;
    data.x.resize(static_cast<Eigen::Index>(rows.size()), p);
    data.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j) data.x(static_cast<Eigen::Index>(i), j) = rows[i][j];
        data.y[static_cast<Eigen::Index>(i)] = rows[i][p];
    }
    return data;
}

namespace {

void check_unit_direction(const Vector& theta) {
    if (std::abs(theta.norm() - 1.0) > 1e-10)
        throw std::invalid_argument("direction must have unit norm");
}

// design matrix B_{ik} = e_k(x_i . theta)
Matrix design_matrix(const Dataset& data, const Basis& basis, const Vector& theta) {
    const Eigen::Index n = data.n();
    const Eigen::Index m = basis.size();
    Matrix b(n, m);
    Vector row(m);  // eval_all writes contiguously; rows of b are strided
    for (Eigen::Index i = 0; i < n; ++i) {
        basis.eval_all(data.x.row(i).dot(theta), m, row.data());
        b.row(i) = row.transpose();
    }
    return b;
}

}  // namespace

double contrast_value(const Dataset& data, const BasisSpec& spec, const Vector& theta,
                      const Vector& eta) {
    if (theta.size() != data.p())
        throw std::invalid_argument("contrast_value: direction dimension mismatch");
    if (eta.size() != spec.m)
        throw std::invalid_argument("contrast_value: coefficient dimension mismatch");
    check_unit_direction(theta);
    const Basis basis(spec);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const double t = data.x.row(i).dot(theta);
        double fit = 0.0;
        for (Eigen::Index k = 0; k < spec.m; ++k) fit += eta[k] * basis.eval_unchecked(k, t);
        const double res = data.y[i] - fit;
        acc += res * res;
    }
    return -0.5 * acc;
}

namespace {

struct EtaStep {
    Vector eta;
    double contrast;
    bool rank_deficient;
};

EtaStep eta_least_squares(const Dataset& data, const Matrix& b, double ridge) {
    Matrix gram = b.transpose() * b;
    gram.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(gram);
    EtaStep step;
    step.rank_deficient = false;
    if (llt.info() != Eigen::Success) {
        // fall back to a visible ridge; flagged in the trace
        gram.diagonal().array() += 1e-8 * std::max(1.0, gram.trace());
        llt.compute(gram);
        step.rank_deficient = true;
    } else {
        // near-singular Gram still counts as rank deficient for reporting
        const Vector diag = llt.matrixLLT().diagonal();
        if (diag.minCoeff() <= 1e-10 * std::max(1.0, diag.maxCoeff()))
            step.rank_deficient = true;
    }
    step.eta = llt.solve(b.transpose() * data.y);
    const Vector residual = data.y - b * step.eta;
    step.contrast = -0.5 * residual.squaredNorm();
    return step;
}

}  // namespace

ProfileFit profile_fit(const Dataset& data, const BasisSpec& spec, const Vector& init_theta,
                       const ProfileFitOptions& opts) {
    if (init_theta.size() != data.p())
        throw std::invalid_argument("profile_fit: init dimension mismatch");
    check_unit_direction(init_theta);
    const Basis basis(spec);
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    const Eigen::Index m = spec.m;

    Vector theta = init_theta;
    if (theta[0] < 0.0) theta = -theta;

    ProfileFit fit;
    fit.trace.converged = false;

    Matrix b = design_matrix(data, basis, theta);
    EtaStep eta_step = eta_least_squares(data, b, opts.ridge_floor);
    Vector eta = eta_step.eta;
    double contrast = eta_step.contrast;
    fit.trace.rank_deficient = eta_step.rank_deficient;
    fit.trace.contrast_path.push_back(contrast);

    Matrix bderiv(n, m);
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        fit.trace.iterations = iter + 1;

        // Gauss-Newton data for theta at fixed eta
        Vector residual = data.y - b * eta;
        Vector deriv_row(m);
        for (Eigen::Index i = 0; i < n; ++i) {
            basis.deriv_all(data.x.row(i).dot(theta), m, deriv_row.data());
            bderiv.row(i) = deriv_row.transpose();
        }
        const Vector gprime = bderiv * eta;  // fitted link slope per point
        // residual_i(theta) = y_i - g(x_i . theta): jacobian row = -g'(t_i) x_i
        Matrix jac(n, p);
        for (Eigen::Index i = 0; i < n; ++i) jac.row(i) = -gprime[i] * data.x.row(i);

        // project onto the tangent space of the sphere at theta
        const Matrix tangent = Matrix::Identity(p, p) - theta * theta.transpose();
        const Matrix jt = jac * tangent;
        Matrix normal = jt.transpose() * jt;
        normal.diagonal().array() += 1e-12 * std::max(1.0, normal.trace());
        const Vector newton_dir = -spd_solve(normal, Vector(jt.transpose() * residual));

        // backtrack on the profiled contrast; re-solves eta at each trial
        double step_scale = 1.0;
        bool accepted = false;
        Vector theta_next;
        Matrix b_next;
        EtaStep eta_next;
        for (int bt = 0; bt < 40; ++bt) {
            Vector candidate = theta + step_scale * (tangent * newton_dir);
            const double norm = candidate.norm();
            if (norm > 1e-14) {
                candidate /= norm;
                if (candidate[0] < 0.0) candidate = -candidate;
                Matrix b_cand = design_matrix(data, basis, candidate);
                EtaStep cand = eta_least_squares(data, b_cand, opts.ridge_floor);
                if (cand.contrast >= contrast) {
                    theta_next = std::move(candidate);
                    b_next = std::move(b_cand);
                    eta_next = std::move(cand);
                    accepted = true;
                    break;
                }
            }
            step_scale *= 0.5;
        }
        if (!accepted) {
            fit.trace.converged = true;  // no uphill step left at this scale
            break;
        }

        const double gain = eta_next.contrast - contrast;
        theta = std::move(theta_next);
        b = std::move(b_next);
        eta = eta_next.eta;
        contrast = eta_next.contrast;
        fit.trace.rank_deficient = fit.trace.rank_deficient || eta_next.rank_deficient;
        fit.trace.contrast_path.push_back(contrast);

        if (gain < opts.contrast_gain_tol) {
            fit.trace.converged = true;
            break;
        }
    }

    fit.theta = theta;
    fit.eta = eta;
    return fit;
}

Vector coarse_angle_init(const Dataset& data, const BasisSpec& spec, int angles) {
    if (data.p() != 2)
        throw std::invalid_argument("coarse_angle_init: only implemented for p = 2");
    if (angles < 2) throw std::invalid_argument("coarse_angle_init: need at least 2 angles");
    const Basis basis(spec);
    double best_contrast = -std::numeric_limits<double>::infinity();
    Vector best = Vector::Zero(2);
    best[0] = 1.0;
    for (int i = 0; i < angles; ++i) {
        // open half circle: theta_1 > 0
        const double angle = -M_PI / 2.0 + M_PI * (static_cast<double>(i) + 0.5) /
                                               static_cast<double>(angles);
        Vector theta(2);
        theta << std::cos(angle), std::sin(angle);
        const Matrix b = design_matrix(data, basis, theta);
        const EtaStep step = eta_least_squares(data, b, 1e-10);
        if (step.contrast > best_contrast) {
            best_contrast = step.contrast;
            best = theta;
        }
    }
    return best;
}

}  // namespace sievebias
