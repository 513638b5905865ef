#include "sievebias/basis.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

namespace sievebias {

namespace {

constexpr int kDaubN = 6;        // vanishing moments; db6 is C^2
constexpr int kCascadeDepth = 12;

std::vector<std::complex<double>> polynomial_roots(const std::vector<double>& coeffs) {
    // companion matrix of c_0 + c_1 x + ... + c_d x^d
    const int d = static_cast<int>(coeffs.size()) - 1;
    Matrix companion = Matrix::Zero(d, d);
    for (int i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) companion(i, d - 1) = -coeffs[i] / coeffs[d];
    Eigen::EigenSolver<Matrix> eig(companion);
    std::vector<std::complex<double>> roots(d);
    for (int i = 0; i < d; ++i) roots[i] = eig.eigenvalues()[i];
    return roots;
}

}  // namespace

std::vector<double> daubechies_filter(int n_vanishing) {
    const int n = n_vanishing;
    if (n < 1 || n > 16) throw std::invalid_argument("daubechies_filter: unsupported order");

    // P(y) = sum_{k<n} binom(n-1+k, k) y^k, the Bezout half of |m0|^2
    std::vector<double> p(n);
    p[0] = 1.0;
    for (int k = 1; k < n; ++k)
        p[k] = p[k - 1] * static_cast<double>(n - 1 + k) / static_cast<double>(k);

    std::vector<std::complex<double>> z_roots;
    if (n > 1) {
        auto y_roots = polynomial_roots(p);
        // deterministic order
        std::sort(y_roots.begin(), y_roots.end(), [](const auto& a, const auto& b) {
            if (a.real() != b.real()) return a.real() < b.real();
            return a.imag() < b.imag();
        });
        for (const auto& y : y_roots) {
            // y = (2 - z - 1/z)/4  =>  z^2 - (2 - 4y) z + 1 = 0
            const std::complex<double> bq = 2.0 - 4.0 * y;
            const std::complex<double> disc = std::sqrt(bq * bq - 4.0);
            std::complex<double> z1 = 0.5 * (bq + disc);
            std::complex<double> z2 = 0.5 * (bq - disc);
            z_roots.push_back(std::abs(z1) < std::abs(z2) ? z1 : z2);
        }
    }

    // h(z) = c ((1+z)/2)^n prod_i (z - z_i); real up to rounding
    std::vector<std::complex<double>> poly{1.0};
    auto multiply_linear = [&poly](std::complex<double> a0, std::complex<double> a1) {
        // poly *= (a0 + a1 z)
        std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i] * a0;
            next[i + 1] += poly[i] * a1;
        }
        poly = std::move(next);
    };
    for (int i = 0; i < n; ++i) multiply_linear(0.5, 0.5);
    for (const auto& z : z_roots) multiply_linear(-z, 1.0);

    std::vector<double> h(poly.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        h[i] = poly[i].real();
        sum += h[i];
    }
    const double scale = std::sqrt(2.0) / sum;
    for (double& v : h) v *= scale;
    return h;
}

struct Basis::DaubTables {
    std::vector<double> phi, psi;    // values on [0, L] at step 2^-depth
    std::vector<double> dpsi, d2psi; // centered-difference derivative tables
    int depth = kCascadeDepth;
    int support = 2 * kDaubN - 1;    // L

    double step() const { return std::ldexp(1.0, -depth); }

    double lookup(const std::vector<double>& table, double x) const {
        if (x <= 0.0 || x >= support) return 0.0;
        const double pos = std::ldexp(x, depth);
        const auto idx = static_cast<std::size_t>(pos);
        if (idx + 1 >= table.size()) return 0.0;
        const double frac = pos - static_cast<double>(idx);
        return table[idx] * (1.0 - frac) + table[idx + 1] * frac;
    }
};

namespace {

std::shared_ptr<const Basis::DaubTables> build_daub_tables() {
    auto tables = std::make_shared<Basis::DaubTables>();
    const std::vector<double> h = daubechies_filter(kDaubN);
    const int taps = static_cast<int>(h.size());
    const int support = taps - 1;
    const double sqrt2 = std::sqrt(2.0);

    // values of phi at the integers: eigenvector of M_{ij} = sqrt2 h_{2i-j}
    // for eigenvalue 1
    const int interior = support - 1;  // phi(1) .. phi(L-1)
    Matrix m = Matrix::Zero(interior, interior);
    for (int i = 1; i <= interior; ++i)
        for (int j = 1; j <= interior; ++j) {
            const int k = 2 * i - j;
            if (k >= 0 && k < taps) m(i - 1, j - 1) = sqrt2 * h[k];
        }
    Eigen::EigenSolver<Matrix> eig(m);
    int best = 0;
    double best_gap = 1e300;
    for (int i = 0; i < interior; ++i) {
        const double gap = std::abs(eig.eigenvalues()[i] - std::complex<double>(1.0, 0.0));
        if (gap < best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    Vector phi_int(interior);
    for (int i = 0; i < interior; ++i) phi_int[i] = eig.eigenvectors().col(best)[i].real();
    phi_int /= phi_int.sum();  // partition of unity at the integers

    const int depth = tables->depth;
    const std::size_t points = (static_cast<std::size_t>(support) << depth) + 1;
    std::vector<double> phi(points, 0.0);
    auto at = [&](int level, std::size_t numerator) -> double& {
        // value index for x = numerator / 2^level
        return phi[numerator << (depth - level)];
    };
    for (int i = 1; i <= interior; ++i) at(0, static_cast<std::size_t>(i)) = phi_int[i - 1];

    // refinement: phi(x) = sqrt2 sum h_k phi(2x - k) fills each finer level
    for (int level = 1; level <= depth; ++level) {
        const std::size_t count = static_cast<std::size_t>(support) << level;
        for (std::size_t num = 1; num < count; num += 2) {
            double acc = 0.0;
            for (int k = 0; k < taps; ++k) {
                // 2x - k = (num - k 2^{level-1}) / 2^{level-1} in [0, support]
                const long long shifted =
                    static_cast<long long>(num) - (static_cast<long long>(k) << (level - 1));
                if (shifted <= 0) continue;
                if (shifted >= static_cast<long long>(static_cast<std::size_t>(support)
                                                      << (level - 1)))
                    continue;
                acc += h[k] * at(level - 1, static_cast<std::size_t>(shifted));
            }
            at(level, num) = sqrt2 * acc;
        }
    }

    // psi(x) = sqrt2 sum g_k phi(2x - k), g_k = (-1)^k h_{taps-1-k}
    std::vector<double> psi(points, 0.0);
    const double step = tables->step();
    for (std::size_t i = 0; i < points; ++i) {
        const double x = static_cast<double>(i) * step;
        double acc = 0.0;
        for (int k = 0; k < taps; ++k) {
            const double arg = 2.0 * x - k;
            if (arg <= 0.0 || arg >= support) continue;
            const double pos = std::ldexp(arg, depth);
            const auto idx = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(idx);
            const double g = ((k % 2) ? -1.0 : 1.0) * h[taps - 1 - k];
            acc += g * (phi[idx] * (1.0 - frac) + phi[idx + 1] * frac);
        }
        psi[i] = sqrt2 * acc;
    }

    auto differentiate = [&](const std::vector<double>& f) {
        std::vector<double> d(points, 0.0);
        for (std::size_t i = 1; i + 1 < points; ++i)
            d[i] = (f[i + 1] - f[i - 1]) / (2.0 * step);
        return d;
    };
    tables->phi = std::move(phi);
    tables->psi = std::move(psi);
    tables->dpsi = differentiate(tables->psi);
    tables->d2psi = differentiate(tables->dpsi);
    return tables;
}

const std::shared_ptr<const Basis::DaubTables>& shared_daub_tables() {
    static const std::shared_ptr<const Basis::DaubTables> tables = build_daub_tables();
    return tables;
}

}  // namespace

Basis::Basis(const BasisSpec& spec) : spec_(spec) {
    if (spec_.m < 1) throw std::invalid_argument("Basis: need at least one function");
    if (!(spec_.s_x > 0.0)) throw std::invalid_argument("Basis: s_x must be positive");
    if (spec_.family == BasisFamily::daubechies) daub_ = shared_daub_tables();
}

double Basis::daub_value(Eigen::Index k, double u, int deriv_order) const {
    // periodized wavelet on [0,1]; k = 2^j + q
    u -= std::floor(u);
    if (k == 0) return deriv_order == 0 ? 1.0 : 0.0;
    int level = 0;
    while ((Eigen::Index{2} << level) <= k) ++level;
    const auto q = static_cast<double>(k - (Eigen::Index{1} << level));
    const double scale = std::ldexp(1.0, level);
    const double y = scale * u - q;
    const std::vector<double>* table = &daub_->psi;
    if (deriv_order == 1) table = &daub_->dpsi;
    if (deriv_order == 2) table = &daub_->d2psi;

    double acc = 0.0;
    const double support = daub_->support;
    // wrap copies: y + scale * l inside [0, support]
    const auto l_lo = static_cast<long long>(std::ceil((0.0 - y) / scale));
    const auto l_hi = static_cast<long long>(std::floor((support - y) / scale));
    for (long long l = l_lo; l <= l_hi; ++l)
        acc += daub_->lookup(*table, y + scale * static_cast<double>(l));
    const double amp = std::sqrt(scale) * std::pow(scale, deriv_order);
    return amp * acc;
}

double Basis::eval_unchecked(Eigen::Index k, double t) const {
    const double s = spec_.s_x;
    if (spec_.family == BasisFamily::cosine) {
        if (k == 0) return 1.0 / std::sqrt(2.0 * s);
        const double u = static_cast<double>(k) * M_PI * (t + s) / (2.0 * s);
        return std::cos(u) / std::sqrt(s);
    }
    return daub_value(k, (t + s) / (2.0 * s), 0) / std::sqrt(2.0 * s);
}

double Basis::deriv_unchecked(Eigen::Index k, double t) const {
    const double s = spec_.s_x;
    if (spec_.family == BasisFamily::cosine) {
        if (k == 0) return 0.0;
        const double w = static_cast<double>(k) * M_PI / (2.0 * s);
        return -w * std::sin(w * (t + s)) / std::sqrt(s);
    }
    return daub_value(k, (t + s) / (2.0 * s), 1) / (std::sqrt(2.0 * s) * 2.0 * s);
}

double Basis::deriv2_unchecked(Eigen::Index k, double t) const {
    const double s = spec_.s_x;
    if (spec_.family == BasisFamily::cosine) {
        if (k == 0) return 0.0;
        const double w = static_cast<double>(k) * M_PI / (2.0 * s);
        return -w * w * std::cos(w * (t + s)) / std::sqrt(s);
    }
    return daub_value(k, (t + s) / (2.0 * s), 2) / (std::sqrt(2.0 * s) * 4.0 * s * s);
}

double Basis::eval(Eigen::Index k, double t) const {
    if (k < 0 || k >= spec_.m) throw std::invalid_argument("Basis::eval: index out of range");
    if (std::abs(t) > spec_.s_x * (1.0 + 1e-12))
        throw std::invalid_argument("Basis::eval: argument outside [-s_x, s_x]");
    return eval_unchecked(k, t);
}

void Basis::eval_all(double t, Eigen::Index count, double* values) const {
    const double s = spec_.s_x;
    if (spec_.family == BasisFamily::cosine) {
        // Chebyshev-style recurrence on cos(k u)
        const double u = M_PI * (t + s) / (2.0 * s);
        const double c1 = std::cos(u);
        const double inv_sqrt_s = 1.0 / std::sqrt(s);
        double c_prev = 1.0, c_curr = c1;
        if (count > 0) values[0] = 1.0 / std::sqrt(2.0 * s);
        if (count > 1) values[1] = c1 * inv_sqrt_s;
        for (Eigen::Index k = 2; k < count; ++k) {
            const double c_next = 2.0 * c1 * c_curr - c_prev;
            values[k] = c_next * inv_sqrt_s;
            c_prev = c_curr;
            c_curr = c_next;
        }
        return;
    }
    for (Eigen::Index k = 0; k < count; ++k) values[k] = eval_unchecked(k, t);
}

void Basis::deriv_all(double t, Eigen::Index count, double* derivs) const {
    const double s = spec_.s_x;
    if (spec_.family == BasisFamily::cosine) {
        const double u = M_PI * (t + s) / (2.0 * s);
        const double c1 = std::cos(u), s1 = std::sin(u);
        const double inv_sqrt_s = 1.0 / std::sqrt(s);
        const double w = M_PI / (2.0 * s);
        double c_curr = c1, s_curr = s1;
        if (count > 0) derivs[0] = 0.0;
        if (count > 1) derivs[1] = -w * s1 * inv_sqrt_s;
        for (Eigen::Index k = 2; k < count; ++k) {
            const double c_next = c_curr * c1 - s_curr * s1;
            const double s_next = s_curr * c1 + c_curr * s1;
            derivs[k] = -(static_cast<double>(k) * w) * s_next * inv_sqrt_s;
            c_curr = c_next;
            s_curr = s_next;
        }
        return;
    }
    for (Eigen::Index k = 0; k < count; ++k) derivs[k] = deriv_unchecked(k, t);
}

void Basis::rows_all(double t, Eigen::Index count, double* values, double* derivs) const {
    if (spec_.family != BasisFamily::cosine) {
        if (values) eval_all(t, count, values);
        if (derivs) deriv_all(t, count, derivs);
        return;
    }
    const double s = spec_.s_x;
    const double u = M_PI * (t + s) / (2.0 * s);
    const double c1 = std::cos(u), s1 = std::sin(u);
    const double inv_sqrt_s = 1.0 / std::sqrt(s);
    const double w = M_PI / (2.0 * s);
    double c_curr = c1, s_curr = s1;
    if (count > 0) {
        if (values) values[0] = 1.0 / std::sqrt(2.0 * s);
        if (derivs) derivs[0] = 0.0;
    }
    if (count > 1) {
        if (values) values[1] = c1 * inv_sqrt_s;
        if (derivs) derivs[1] = -w * s1 * inv_sqrt_s;
    }
    for (Eigen::Index k = 2; k < count; ++k) {
        const double c_next = c_curr * c1 - s_curr * s1;
        const double s_next = s_curr * c1 + c_curr * s1;
        if (values) values[k] = c_next * inv_sqrt_s;
        if (derivs) derivs[k] = -(static_cast<double>(k) * w) * s_next * inv_sqrt_s;
        c_curr = c_next;
        s_curr = s_next;
    }
}

void Basis::deriv2_all(double t, Eigen::Index count, double* derivs) const {
    if (spec_.family == BasisFamily::cosine) {
        // e_k'' = -(k w)^2 e_k, so reuse the value recurrence
        eval_all(t, count, derivs);
        const double w = M_PI / (2.0 * spec_.s_x);
        for (Eigen::Index k = 0; k < count; ++k) {
            const double kw = static_cast<double>(k) * w;
            derivs[k] *= -kw * kw;
        }
        return;
    }
    for (Eigen::Index k = 0; k < count; ++k) derivs[k] = deriv2_unchecked(k, t);
}

double basis_eval(const BasisSpec& spec, Eigen::Index k, double t) {
    return Basis(spec).eval(k, t);
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration
void gauss_legendre(Eigen::Index n, std::vector<double>& nodes, std::vector<double>& weights) {
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
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

}  // namespace

Matrix gram_matrix(const Basis& basis, Eigen::Index count, Eigen::Index quad_points) {
    const double s = basis.spec().s_x;
    Matrix gram = Matrix::Zero(count, count);
    Vector row(count);
    if (basis.spec().family == BasisFamily::cosine) {
        std::vector<double> nodes, weights;
        gauss_legendre(quad_points, nodes, weights);
        for (Eigen::Index q = 0; q < quad_points; ++q) {
            const double t = s * nodes[q];
            basis.eval_all(t, count, row.data());
            gram.selfadjointView<Eigen::Lower>().rankUpdate(row, s * weights[q]);
        }
    } else {
        // midpoint rule; the wavelet tables are only piecewise linear anyway
        const double h = 2.0 * s / static_cast<double>(quad_points);
        for (Eigen::Index q = 0; q < quad_points; ++q) {
            const double t = -s + (static_cast<double>(q) + 0.5) * h;
            basis.eval_all(t, count, row.data());
            gram.selfadjointView<Eigen::Lower>().rankUpdate(row, h);
        }
    }
    return gram.selfadjointView<Eigen::Lower>();
}

}  // namespace sievebias
