#include "sievebias/population.hpp"

#include <cmath>
#include <memory>

#include <Eigen/QR>

#include "sievebias/rng.hpp"

namespace sievebias {

namespace {

void gauss_legendre_01(Eigen::Index n, std::vector<double>& nodes,
                       std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const Eigen::Index half = (n + 1) / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (Eigen::Index k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 0.5 * w;
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[n - 1 - i] = 0.5 * w;
    }
}

// The direction lives on the half sphere, so the model works in the chart
// theta(phi) = (theta* + B phi)/||theta* + B phi|| with B an orthonormal
// tangent basis at theta*. Without the constraint the radial direction is
// compensated by a coefficient refit and the curvature operator degenerates
// as the basis grows. Per node we keep a = B^T x and b = theta*^T x; with
// BtB = I and B^T theta* = 0 the chart geometry reduces to
//   nn = sqrt(1 + |phi|^2),  T = (b + a.phi)/nn,
//   dT_j = a_j/nn - T phi_j/nn^2,
//   d2T_jl = -(a_j phi_l + a_l phi_j)/nn^3 - T delta_jl/nn^2
//            + 3 T phi_j phi_l/nn^4.
struct NodeSet {
    Matrix a;        // N x (p-1), tangent components of the design point
    Vector b;        // N, index component
    Vector weights;  // quadrature weight including the design density
    Vector f_star;   // link at the truth, through the same padded dot
    Eigen::Index chart_dim = 0;
    Eigen::Index coeff_dim = 0;
    Basis basis;
    double sigma = 0.0;

    explicit NodeSet(const BasisSpec& ambient) : basis(ambient) {}
};

double density_value(DesignDensity density, double radius_sq, double s_sq) {
    if (density == DesignDensity::uniform_ball) return 1.0 / (M_PI * s_sq);
    // (1 - r^2/s^2) normalized over the disk
    return (2.0 / (M_PI * s_sq)) * (1.0 - radius_sq / s_sq);
}

Matrix tangent_basis_at(const Vector& theta_star) {
    const Eigen::Index p = theta_star.size();
    const Eigen::HouseholderQR<Matrix> qr{Matrix(theta_star)};
    const Matrix q = qr.householderQ();
    return q.rightCols(p - 1);
}

std::shared_ptr<const NodeSet> build_nodes(const SingleIndexTruth& truth, const Matrix& tangent,
                                           Eigen::Index coeff_dim,
                                           const PopulationConfig& config) {
    const Eigen::Index p = truth.p();
    const double s = truth.s_x;

    BasisSpec ambient{truth.basis_family, coeff_dim, s};
    auto nodes = std::make_shared<NodeSet>(ambient);
    nodes->chart_dim = p - 1;
    nodes->coeff_dim = coeff_dim;
    nodes->sigma = truth.sigma;

    Matrix points;
    if (p == 2) {
        Eigen::Index n_r = config.quad_radial;
        Eigen::Index n_phi = config.quad_angular;
        if (n_r <= 0) n_r = std::max<Eigen::Index>(48, 2 * coeff_dim + 32);
        if (n_phi <= 0) n_phi = std::max<Eigen::Index>(96, 4 * coeff_dim + 64);
        std::vector<double> r_nodes, r_weights;
        gauss_legendre_01(n_r, r_nodes, r_weights);

        const Eigen::Index total = n_r * n_phi;
        points.resize(total, 2);
        nodes->weights.resize(total);
        const double dphi = 2.0 * M_PI / static_cast<double>(n_phi);
        Eigen::Index idx = 0;
        for (Eigen::Index ir = 0; ir < n_r; ++ir) {
            const double r = s * r_nodes[ir];
            const double wr = s * r_weights[ir];
            const double dens = density_value(truth.density, r * r, s * s);
            for (Eigen::Index ip = 0; ip < n_phi; ++ip, ++idx) {
                const double angle = dphi * static_cast<double>(ip);
                points(idx, 0) = r * std::cos(angle);
                points(idx, 1) = r * std::sin(angle);
                nodes->weights[idx] = wr * dphi * r * dens;
            }
        }
    } else {
        // seeded Monte Carlo; weights absorb the density through sampling
        const Eigen::Index total = config.mc_nodes;
        points.resize(total, p);
        nodes->weights.setConstant(total, 1.0 / static_cast<double>(total));
        Rng rng(config.mc_seed);
        for (Eigen::Index i = 0; i < total; ++i) {
            for (;;) {
                const Vector dir = rng.unit_vector(p);
                const double radius =
                    s * std::pow(rng.uniform(), 1.0 / static_cast<double>(p));
                if (truth.density == DesignDensity::radial_bump) {
                    const double ratio = 1.0 - (radius * radius) / (s * s);
                    if (rng.uniform() >= ratio) continue;
                }
                points.row(i) = (radius * dir).transpose();
                break;
            }
        }
    }

    nodes->a = points * tangent;
    nodes->b = points * truth.theta_star;

    Vector padded = Vector::Zero(coeff_dim);
    if (truth.f_coeffs.size() > coeff_dim)
        throw std::invalid_argument(
            "population_operator: link coefficients exceed the ambient truncation");
    padded.head(truth.f_coeffs.size()) = truth.f_coeffs;

    // link values through the same padded coefficient dot used by the model
    // kernels, so the truth point is stationary to the last bit
    const Eigen::Index total = points.rows();
    nodes->f_star.resize(total);
    Vector row(coeff_dim);
    for (Eigen::Index i = 0; i < total; ++i) {
        nodes->basis.rows_all(nodes->b[i], coeff_dim, row.data(), nullptr);
        nodes->f_star[i] = row.dot(padded);
    }
    return nodes;
}

struct NodeEval {
    double t = 0.0;
    double res = 0.0;
    double gprime = 0.0;
    double gsecond = 0.0;
};

class Workspace {
  public:
    Workspace(Eigen::Index chart_dim, Eigen::Index coeff_dim)
        : values(coeff_dim), derivs(coeff_dim), derivs2(coeff_dim), dt(chart_dim) {}
    Vector values, derivs, derivs2;
    Vector dt;  // chart gradient of T at the node
};

// chart state shared by all nodes at one evaluation point
struct ChartState {
    Vector phi;
    double nn = 1.0;       // ||theta* + B phi||
    double inv_nn = 1.0;
    double inv_nn2 = 1.0;

    explicit ChartState(const Vector& phi_) : phi(phi_) {
        nn = std::sqrt(1.0 + phi.squaredNorm());
        inv_nn = 1.0 / nn;
        inv_nn2 = inv_nn * inv_nn;
    }
};

NodeEval evaluate_node(const NodeSet& nodes, Eigen::Index i, const ChartState& chart,
                       const Vector& coeffs, Workspace& ws, bool need_second) {
    NodeEval out;
    const auto a_row = nodes.a.row(i);
    out.t = (nodes.b[i] + a_row.dot(chart.phi)) * chart.inv_nn;
    ws.dt = (a_row.transpose() * chart.inv_nn) -
            (out.t * chart.inv_nn2) * chart.phi;
    nodes.basis.rows_all(out.t, nodes.coeff_dim, ws.values.data(), ws.derivs.data());
    out.res = nodes.f_star[i] - ws.values.dot(coeffs);
    out.gprime = ws.derivs.dot(coeffs);
    // the second derivative only enters multiplied by the residual
    if (need_second && out.res != 0.0) {
        nodes.basis.deriv2_all(out.t, nodes.coeff_dim, ws.derivs2.data());
        out.gsecond = ws.derivs2.dot(coeffs);
    }
    return out;
}

}  // namespace

PopulationModel population_operator(const SingleIndexTruth& truth, const BasisSpec& spec,
                                    Eigen::Index p_max, const PopulationConfig& config) {
    truth.validate();
    if (truth.p() < 2)
        throw std::invalid_argument("population_operator: need p >= 2 for a direction chart");
    if (spec.family != truth.basis_family)
        throw std::invalid_argument("population_operator: basis family mismatch with truth");
    if (std::abs(spec.s_x - truth.s_x) > 1e-12)
        throw std::invalid_argument("population_operator: domain radius mismatch with truth");
    const Eigen::Index chart_dim = truth.p() - 1;
    const SieveFrame frame(chart_dim, spec.m, p_max);
    const Eigen::Index coeff_dim = p_max - chart_dim;

    const Matrix tangent = tangent_basis_at(truth.theta_star);
    auto nodes = build_nodes(truth, tangent, coeff_dim, config);
    const auto chunks = fixed_chunks(static_cast<std::size_t>(nodes->b.size()),
                                     config.groups);
    const Exec exec = config.exec;
    const double n_scale = config.n_scale;

    PopulationModel out;
    out.n_scale = n_scale;
    out.tangent_basis = tangent;
    out.ups_star = Vector::Zero(p_max);
    out.ups_star.segment(chart_dim, truth.f_coeffs.size()) = truth.f_coeffs;

    ContrastModel model;
    model.frame = frame;

    model.value = [nodes, chunks, exec, n_scale, chart_dim, coeff_dim](const Vector& u) {
        if (u.size() != chart_dim + coeff_dim)
            throw std::invalid_argument("population model: wrong dimension");
        const ChartState chart(u.head(chart_dim));
        const Vector coeffs = u.tail(coeff_dim);
        std::vector<double> partial(chunks.size(), 0.0);
        for_each_index(chunks.size(), exec, [&](std::size_t g) {
            Workspace ws(chart_dim, coeff_dim);
            double acc = 0.0;
            for (std::size_t i = chunks[g].first; i < chunks[g].second; ++i) {
                const NodeEval e = evaluate_node(*nodes, static_cast<Eigen::Index>(i), chart,
                                                 coeffs, ws, false);
                acc += nodes->weights[static_cast<Eigen::Index>(i)] * e.res * e.res;
            }
            partial[g] = acc;
        });
        double total = 0.0;
        for (const double v : partial) total += v;
        return -(n_scale / 2.0) * (nodes->sigma * nodes->sigma + total);
    };

    model.gradient = [nodes, chunks, exec, n_scale, chart_dim, coeff_dim](const Vector& u) {
        const ChartState chart(u.head(chart_dim));
        const Vector coeffs = u.tail(coeff_dim);
        std::vector<Vector> partial(chunks.size());
        for_each_index(chunks.size(), exec, [&](std::size_t g) {
            Workspace ws(chart_dim, coeff_dim);
            Vector acc = Vector::Zero(chart_dim + coeff_dim);
            for (std::size_t i = chunks[g].first; i < chunks[g].second; ++i) {
                const auto idx = static_cast<Eigen::Index>(i);
                const NodeEval e = evaluate_node(*nodes, idx, chart, coeffs, ws, false);
                const double w_res = nodes->weights[idx] * e.res;
                acc.head(chart_dim) += (w_res * e.gprime) * ws.dt;
                acc.tail(coeff_dim) += w_res * ws.values;
            }
            partial[g] = std::move(acc);
        });
        Vector total = Vector::Zero(chart_dim + coeff_dim);
        for (const auto& v : partial) total += v;
        return Vector(n_scale * total);
    };

    model.hessian = [nodes, chunks, exec, n_scale, chart_dim, coeff_dim](const Vector& u) {
        const ChartState chart(u.head(chart_dim));
        const Vector coeffs = u.tail(coeff_dim);
        const Eigen::Index dim = chart_dim + coeff_dim;
        std::vector<Matrix> partial(chunks.size());
        for_each_index(chunks.size(), exec, [&](std::size_t g) {
            Workspace ws(chart_dim, coeff_dim);
            Matrix acc = Matrix::Zero(dim, dim);
            Vector row(dim);
            for (std::size_t i = chunks[g].first; i < chunks[g].second; ++i) {
                const auto idx = static_cast<Eigen::Index>(i);
                const NodeEval e = evaluate_node(*nodes, idx, chart, coeffs, ws, true);
                const double w = nodes->weights[idx];
                row.head(chart_dim) = e.gprime * ws.dt;
                row.tail(coeff_dim) = ws.values;
                acc.selfadjointView<Eigen::Lower>().rankUpdate(row, w);
                // residual * second-derivative terms, kept in the lower
                // triangle; the coeff-coeff block of d2(res) is zero
                const double w_res = w * e.res;
                if (w_res != 0.0) {
                    const auto a_row = nodes->a.row(idx).transpose();
                    const double inv3 = chart.inv_nn2 * chart.inv_nn;
                    // d2T = -(a phi^T + phi a^T)/nn^3 - T I/nn^2
                    //       + 3 T phi phi^T/nn^4
                    Matrix d2t = -inv3 * (a_row * chart.phi.transpose() +
                                          chart.phi * a_row.transpose());
                    d2t.diagonal().array() -= e.t * chart.inv_nn2;
                    d2t += (3.0 * e.t * chart.inv_nn2 * chart.inv_nn2) *
                           (chart.phi * chart.phi.transpose());
                    acc.topLeftCorner(chart_dim, chart_dim) -=
                        w_res * (e.gsecond * (ws.dt * ws.dt.transpose()) + e.gprime * d2t);
                    acc.bottomLeftCorner(coeff_dim, chart_dim).noalias() -=
                        w_res * (ws.derivs * ws.dt.transpose());
                }
            }
            partial[g] = std::move(acc);
        });
        Matrix total = Matrix::Zero(dim, dim);
        for (const auto& m : partial) total += m;
        return Matrix(n_scale * Matrix(total.selfadjointView<Eigen::Lower>()));
    };

    model.hessian_times = [nodes, chunks, exec, n_scale, chart_dim,
                           coeff_dim](const Vector& u, const Vector& w_vec) {
        const ChartState chart(u.head(chart_dim));
        const Vector coeffs = u.tail(coeff_dim);
        const Vector w_phi = w_vec.head(chart_dim);
        const Vector w_c = w_vec.tail(coeff_dim);
        std::vector<Vector> partial(chunks.size());
        for_each_index(chunks.size(), exec, [&](std::size_t g) {
            Workspace ws(chart_dim, coeff_dim);
            Vector acc = Vector::Zero(chart_dim + coeff_dim);
            for (std::size_t i = chunks[g].first; i < chunks[g].second; ++i) {
                const auto idx = static_cast<Eigen::Index>(i);
                const NodeEval e = evaluate_node(*nodes, idx, chart, coeffs, ws, true);
                const double w = nodes->weights[idx];
                const double s1 = ws.dt.dot(w_phi);
                const double s2 = ws.values.dot(w_c);
                const double s3 = ws.derivs.dot(w_c);
                const double common = e.gprime * s1 + s2;
                acc.head(chart_dim) += (w * (e.gprime * common)) * ws.dt;
                acc.tail(coeff_dim) +=
                    w * (common * ws.values - (e.res * s1) * ws.derivs);
                const double w_res = w * e.res;
                if (w_res != 0.0) {
                    const auto a_row = nodes->a.row(idx).transpose();
                    const double inv3 = chart.inv_nn2 * chart.inv_nn;
                    const double aw = a_row.dot(w_phi);
                    const double pw = chart.phi.dot(w_phi);
                    // (d2T w)_j with the same closed form as in the hessian
                    const Vector d2t_w =
                        Vector(-(inv3 * pw) * a_row - (inv3 * aw) * chart.phi -
                               (e.t * chart.inv_nn2) * w_phi +
                               (3.0 * e.t * chart.inv_nn2 * chart.inv_nn2 * pw) * chart.phi);
                    acc.head(chart_dim) -=
                        w_res * ((e.gsecond * s1 + s3) * ws.dt + e.gprime * d2t_w);
                }
            }
            partial[g] = std::move(acc);
        });
        Vector total = Vector::Zero(chart_dim + coeff_dim);
        for (const auto& v : partial) total += v;
        return Vector(n_scale * total);
    };

    out.model = std::move(model);
    return out;
}

double quadrature_gap(const SingleIndexTruth& truth, const BasisSpec& spec, Eigen::Index p_max,
                      const PopulationConfig& config) {
    PopulationConfig doubled = config;
    if (truth.p() == 2) {
        Eigen::Index n_r = config.quad_radial;
        Eigen::Index n_phi = config.quad_angular;
        const Eigen::Index coeff_dim = p_max - (truth.p() - 1);
        if (n_r <= 0) n_r = std::max<Eigen::Index>(48, 2 * coeff_dim + 32);
        if (n_phi <= 0) n_phi = std::max<Eigen::Index>(96, 4 * coeff_dim + 64);
        doubled.quad_radial = 2 * n_r;
        doubled.quad_angular = 2 * n_phi;
    } else {
        doubled.mc_nodes = 2 * config.mc_nodes;
    }
    const PopulationModel base = population_operator(truth, spec, p_max, config);
    const PopulationModel fine = population_operator(truth, spec, p_max, doubled);

    // probe slightly off the optimum so the residual terms participate
    Vector probe = base.ups_star;
    for (Eigen::Index i = 0; i < probe.size(); ++i)
        probe[i] += 1e-2 / static_cast<double>(2 * i + 3);

    const double v0 = base.model.value(probe);
    const double v1 = fine.model.value(probe);
    double gap = std::abs(v0 - v1) / std::max(1.0, std::abs(v1));

    Vector dir = Vector::Zero(probe.size());
    dir[probe.size() - 1] = 1.0;
    dir[0] = 0.5;
    const Vector h0 = base.model.hessian_apply(probe, dir);
    const Vector h1 = fine.model.hessian_apply(probe, dir);
    gap = std::max(gap, (h0 - h1).norm() / std::max(1.0, h1.norm()));
    return gap;
}

RateReport rate_sweep(const SingleIndexTruth& truth, const std::vector<Eigen::Index>& m_list,
                      Eigen::Index p_max, const PopulationConfig& config,
                      std::size_t lambda_points) {
    if (m_list.size() < 4)
        throw std::invalid_argument("rate_sweep: need at least 4 sieve dimensions");
    if (!std::is_sorted(m_list.begin(), m_list.end()))
        throw std::invalid_argument("rate_sweep: m_list must be ascending");
    if (static_cast<double>(m_list.back()) < 10.0 * static_cast<double>(m_list.front()))
        throw std::invalid_argument("rate_sweep: m_list must span at least one decade");
    const Eigen::Index chart_dim = truth.p() - 1;
    if (p_max <= chart_dim + m_list.back())
        throw std::invalid_argument("rate_sweep: P_max must exceed the largest sieve frame");

    const BasisSpec base_spec = truth.basis_spec(m_list.front());
    const PopulationModel pop = population_operator(truth, base_spec, p_max, config);
    const Vector& ups = pop.ups_star;

    // stationarity of the truth point under the discretized functional
    const double grad_norm = pop.model.gradient(ups).norm();
    if (grad_norm > 1e-8 * config.n_scale * (1.0 + ups.norm()))
        throw convergence_error("rate_sweep: truth point is not stationary under quadrature");

    const Matrix hess_star = pop.model.hessian(ups);
    const std::vector<double> grid = lambda_grid(lambda_points);

    RateReport report;
    report.n_scale = config.n_scale;
    for (const Eigen::Index m : m_list) {
        ContrastModel model_m = pop.model;
        model_m.frame = SieveFrame(chart_dim, m, p_max);
        RatePoint point;
        point.m = m;
        point.alpha = alpha_of_m(model_m, ups, &hess_star);
        point.beta = beta_of_m(model_m, ups, &hess_star);
        const TailSmoothness smooth = tail_smoothness(model_m, ups, grid, &hess_star);
        point.tau = smooth.tau;
        point.cross_max = smooth.cross;
        const Eigen::Index tail = p_max - chart_dim - m;
        const Vector kappa = ups.tail(tail);
        point.hkappa_sq = kappa.dot(hess_star.bottomRightCorner(tail, tail) * kappa);
        report.points.push_back(point);
    }

    auto slope = [&](auto getter) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const auto n = static_cast<double>(report.points.size());
        for (const RatePoint& pt : report.points) {
            const double x = std::log(static_cast<double>(pt.m));
            const double y = std::log(std::max(getter(pt), 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    report.slope_alpha = slope([](const RatePoint& pt) { return pt.alpha; });
    report.slope_beta = slope([](const RatePoint& pt) { return pt.beta; });
    report.slope_tau = slope([](const RatePoint& pt) { return pt.tau; });
    report.slope_hkappa = slope([](const RatePoint& pt) { return pt.hkappa_sq; });
    return report;
}

}  // namespace sievebias
