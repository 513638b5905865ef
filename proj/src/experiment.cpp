#include "sievebias/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sievebias/certificates.hpp"
#include "sievebias/csv.hpp"
#include "sievebias/oracle.hpp"
#include "sievebias/population.hpp"
#include "sievebias/rng.hpp"
#include "sievebias/svg.hpp"

namespace sievebias {

namespace fs = std::filesystem;

ExperimentMode parse_mode(const std::string& name) {
    if (name == "audit") return ExperimentMode::audit;
    if (name == "certify") return ExperimentMode::certify;
    if (name == "simulate") return ExperimentMode::simulate;
    if (name == "rates") return ExperimentMode::rates;
    if (name == "verify-bounds") return ExperimentMode::verify_bounds;
    throw config_error("unknown mode '" + name + "'");
}

std::string mode_name(ExperimentMode mode) {
    switch (mode) {
        case ExperimentMode::audit: return "audit";
        case ExperimentMode::certify: return "certify";
        case ExperimentMode::simulate: return "simulate";
        case ExperimentMode::rates: return "rates";
        case ExperimentMode::verify_bounds: return "verify-bounds";
    }
    return "?";
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (const unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

ExperimentConfig load_experiment_config(const fs::path& path, const CliOverrides& overrides) {
    ExperimentConfig config;
    config.config_path = path;
    {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file " + path.string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        config.config_text = buffer.str();
    }
    config.toml = TomlTable::parse_string(config.config_text, path.string());

    const std::string config_mode = config.toml.get_string("mode", "");
    if (!overrides.mode.empty()) {
        config.mode = parse_mode(overrides.mode);
        if (!config_mode.empty() && config_mode != overrides.mode)
            throw config_error("config mode '" + config_mode +
                               "' does not match subcommand '" + overrides.mode + "'");
    } else if (!config_mode.empty()) {
        config.mode = parse_mode(config_mode);
    } else {
        config.toml.missing("mode");
    }

    config.seed = overrides.has_seed
                      ? overrides.seed
                      : static_cast<std::uint64_t>(config.toml.get_int("seed", 1));
    config.threads = overrides.has_threads
                         ? overrides.threads
                         : static_cast<int>(config.toml.get_int("threads", 0));
    config.out_dir = overrides.has_out ? overrides.out_dir
                                       : fs::path(config.toml.get_string("output.dir", "out"));
    config.svg = config.toml.get_bool("output.svg", true);
    return config;
}

namespace {

using nlohmann::json;

struct RunContext {
    const ExperimentConfig& config;
    std::vector<std::string> outputs;

    fs::path artifact(const std::string& name) {
        outputs.push_back(name);
        return config.out_dir / name;
    }
};

void write_manifest(RunContext& ctx) {
    json manifest;
    manifest["config_hash"] = fnv1a64(ctx.config.config_text);
    manifest["config_path"] = ctx.config.config_path.filename().string();
    manifest["mode"] = mode_name(ctx.config.mode);
    std::sort(ctx.outputs.begin(), ctx.outputs.end());
    manifest["outputs"] = ctx.outputs;
    manifest["seed"] = ctx.config.seed;
    manifest["threads"] = ctx.config.threads;
    manifest["version"] = "0.1.0";
    std::ofstream out(ctx.config.out_dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest.json");
    out << manifest.dump(2) << "\n";
}

SieveFrame frame_from(const TomlTable& toml) {
    if (!toml.has("frame.p")) toml.missing("frame.p");
    if (!toml.has("frame.p1")) toml.missing("frame.p1");
    if (!toml.has("frame.p_max")) toml.missing("frame.p_max");
    try {
        return SieveFrame(toml.get_int("frame.p"), toml.get_int("frame.p1"),
                          toml.get_int("frame.p_max"));
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("frame: ") + e.what());
    }
}

CertificateConfig certificate_config_from(const TomlTable& toml, std::uint64_t seed) {
    CertificateConfig cc;
    cc.delta_samples = static_cast<std::size_t>(toml.get_int("audit.delta_samples", 2000));
    cc.b_samples = static_cast<std::size_t>(toml.get_int("audit.b_samples", 4000));
    cc.b_r_min = toml.get_double("audit.b_r_min", 0.05);
    cc.b_r_max = toml.get_double("audit.b_r_max", 0.0);
    cc.delta_grid = static_cast<std::size_t>(toml.get_int("audit.delta_grid", 8));
    cc.lambda_points = static_cast<std::size_t>(toml.get_int("audit.lambda_points", 21));
    cc.seed = seed;
    const long long nu_power = toml.get_int("conventions.nu_power", 2);
    if (nu_power != 1 && nu_power != 2)
        throw config_error("conventions.nu_power must be 1 or 2");
    cc.nu_power = nu_power == 2 ? NuPower::squared : NuPower::linear;
    const long long ck_power = toml.get_int("conventions.c_kappa_power", 1);
    if (ck_power != 1 && ck_power != 2)
        throw config_error("conventions.c_kappa_power must be 1 or 2");
    cc.c_kappa_power = ck_power == 2 ? CKappaPower::squared : CKappaPower::linear;
    return cc;
}

struct OracleSettings {
    std::string family;
    double eps = 0.0;
    Eigen::Index instances = 1;
};

OracleSettings oracle_settings_from(const TomlTable& toml) {
    OracleSettings s;
    s.family = toml.get_string("oracle.family");
    if (s.family != "quadratic" && s.family != "quartic")
        throw config_error("oracle.family must be \"quadratic\" or \"quartic\"");
    s.eps = toml.get_double("oracle.eps", s.family == "quartic" ? 0.1 : 0.0);
    s.instances = toml.get_int("oracle.instances", 1);
    if (s.instances < 1) throw config_error("oracle.instances must be >= 1");
    return s;
}

ContrastModel oracle_model(const OracleSettings& s, const SieveFrame& frame,
                           std::uint64_t seed, QuadraticContrast* base_out) {
    if (s.family == "quadratic") {
        QuadraticContrast q = random_quadratic(frame, seed);
        if (base_out) *base_out = q;
        return q.model(frame);
    }
    QuarticPerturbation q = random_quartic(frame, s.eps, seed);
    if (base_out) *base_out = q.base;
    return q.model(frame);
}

SingleIndexTruth truth_from(const TomlTable& toml) {
    SingleIndexTruth truth;
    const std::string basis = toml.get_string("truth.basis", "cosine");
    if (basis == "cosine")
        truth.basis_family = BasisFamily::cosine;
    else if (basis == "daubechies")
        truth.basis_family = BasisFamily::daubechies;
    else
        throw config_error("truth.basis must be \"cosine\" or \"daubechies\"");

    truth.smoothness_a = toml.get_double("truth.a", 3.0);
    truth.sigma = toml.get_double("truth.sigma", 0.1);
    truth.s_x = toml.get_double("truth.s_x", 1.0);
    const std::string density = toml.get_string("truth.density", "bump");
    if (density == "bump")
        truth.density = DesignDensity::radial_bump;
    else if (density == "uniform")
        truth.density = DesignDensity::uniform_ball;
    else
        throw config_error("truth.density must be \"bump\" or \"uniform\"");

    const std::string f_mode = toml.get_string("truth.f_mode", "rate_tight");
    if (f_mode == "explicit") {
        if (!toml.has("truth.f_coeffs")) toml.missing("truth.f_coeffs");
        const auto coeffs = toml.get_number_array("truth.f_coeffs");
        truth.f_coeffs = Eigen::Map<const Vector>(coeffs.data(),
                                                  static_cast<Eigen::Index>(coeffs.size()));
        if (!toml.has("truth.theta_star")) toml.missing("truth.theta_star");
        const auto theta = toml.get_number_array("truth.theta_star");
        truth.theta_star =
            Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
        truth.validate();
        return truth;
    }
    if (f_mode != "rate_tight")
        throw config_error("truth.f_mode must be \"rate_tight\" or \"explicit\"");

    const Eigen::Index p = toml.get_int("truth.p", 2);
    const Eigen::Index coeff_count = toml.get_int("truth.coeff_count", 0);
    if (coeff_count < 1) throw config_error("truth.coeff_count required for rate_tight link");
    SingleIndexTruth tight =
        make_rate_truth(truth.smoothness_a, p, coeff_count, truth.sigma, truth.s_x,
                        toml.get_double("truth.scale", 1.0));
    tight.basis_family = truth.basis_family;
    tight.density = truth.density;
    if (toml.has("truth.theta_star")) {
        const auto theta = toml.get_number_array("truth.theta_star");
        tight.theta_star =
            Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    }
    tight.validate();
    return tight;
}

PopulationConfig population_config_from(const TomlTable& toml, std::uint64_t seed) {
    PopulationConfig pc;
    pc.quad_radial = toml.get_int("quadrature.radial", 0);
    pc.quad_angular = toml.get_int("quadrature.angular", 0);
    pc.mc_nodes = toml.get_int("quadrature.mc_nodes", 200000);
    pc.mc_seed = seed ^ 0xa0761d6478bd642full;
    pc.n_scale = toml.get_double("rates.n_scale", toml.get_double("quadrature.n_scale", 1.0));
    return pc;
}

// model + the information needed to audit it, built from either config family
struct ModelBundle {
    ContrastModel model;  // carries the frame
    Vector init;
    bool is_oracle = false;
    bool is_quadratic = false;
    QuadraticContrast base{Matrix::Identity(2, 2), Vector::Zero(2)};
};

ModelBundle build_model(const TomlTable& toml, std::uint64_t seed) {
    ModelBundle bundle;
    if (toml.has("oracle.family")) {
        const SieveFrame frame = frame_from(toml);
        const OracleSettings s = oracle_settings_from(toml);
        bundle.model = oracle_model(s, frame, seed, &bundle.base);
        bundle.is_oracle = true;
        bundle.is_quadratic = (s.family == "quadratic");
        bundle.init = Vector::Zero(frame.p_max);
        return bundle;
    }
    if (toml.has("truth.f_mode") || toml.has("truth.f_coeffs")) {
        const SingleIndexTruth truth = truth_from(toml);
        if (!toml.has("frame.p1")) toml.missing("frame.p1");
        if (!toml.has("frame.p_max")) toml.missing("frame.p_max");
        const Eigen::Index p1 = toml.get_int("frame.p1");
        const Eigen::Index p_max = toml.get_int("frame.p_max");
        // the single-index model works in the half-sphere chart, so the
        // block split uses p - 1 direction coordinates
        if (toml.has("frame.p") && toml.get_int("frame.p") != truth.p() - 1)
            throw config_error(
                "frame.p for a single-index model is the chart dimension p - 1 = " +
                std::to_string(truth.p() - 1));
        const PopulationConfig pc = population_config_from(toml, seed);
        PopulationModel pop = population_operator(truth, truth.basis_spec(p1), p_max, pc);
        if (toml.get_bool("quadrature.validate", false)) {
            const double gap = quadrature_gap(truth, truth.basis_spec(p1), p_max, pc);
            if (gap > 1e-6)
                throw convergence_error(
                    "population quadrature did not converge: doubling gap " +
                    format_double(gap));
        }
        bundle.model = std::move(pop.model);
        bundle.init = pop.ups_star;
        return bundle;
    }
    throw config_error("config needs an [oracle] or [truth] section");
}

std::vector<std::string> audit_header(std::size_t delta_points) {
    std::vector<std::string> header = {"p1",      "nu_rho", "nu_rho_squared", "b_hat",
                                       "alpha_m", "tau_m",  "beta_m",         "c_kappa",
                                       "cross_term_max", "sample_count", "seed"};
    for (std::size_t i = 0; i < delta_points; ++i) {
        header.push_back("r_" + std::to_string(i));
        header.push_back("delta_" + std::to_string(i));
    }
    return header;
}

std::vector<std::string> audit_row(const AuditReport& report) {
    using C = CsvWriter;
    std::vector<std::string> row = {
        C::cell(report.p1),      C::cell(report.nu_rho),  C::cell(report.nu_rho_squared),
        C::cell(report.b_hat),   C::cell(report.alpha_m), C::cell(report.tau_m),
        C::cell(report.beta_m),  C::cell(report.c_kappa), C::cell(report.cross_term_max),
        C::cell(report.sample_count), C::cell(report.seed)};
    for (const auto& [r, d] : report.delta_of_r) {
        row.push_back(C::cell(r));
        row.push_back(C::cell(d));
    }
    return row;
}

// measured closeness quantities evaluated directly from curvature blocks
struct MeasuredCloseness {
    double bias = 0.0;  // || Dbreve_m (theta*_m - theta*) ||
    double closeness = 0.0;    // || I - Dbreve_m^{-1} Dbreve^2 Dbreve_m^{-1} ||
    double drift = 0.0;    // profiles of the sieve block at the two optima
};

MeasuredCloseness measure_closeness(const ContrastModel& model, const OptimumPair& optima) {
    const SieveFrame& frame = model.frame;
    const Eigen::Index p_star = frame.p_star();
    MeasuredCloseness out;

    const Matrix hess_star = model.hessian(optima.ups_star);
    const Matrix top_star = hess_star.topLeftCorner(p_star, p_star);
    const Matrix breve_m = sym_sqrt(profile_matrix(PartitionedOperator(top_star, frame.p)));
    out.bias = (breve_m * (optima.theta_star_m - optima.theta_star)).norm();

    const Matrix breve_full = sym_sqrt(profile_matrix(PartitionedOperator(hess_star, frame.p)));
    out.closeness = matrix_closeness(breve_m, breve_full);

    const Matrix hess_m = model.hessian(optima.ups_star_m);
    const Matrix top_m = hess_m.topLeftCorner(p_star, p_star);
    const Matrix breve_mm = sym_sqrt(profile_matrix(PartitionedOperator(top_m, frame.p)));
    out.drift = matrix_closeness(breve_mm, breve_m);
    return out;
}

void run_audit_mode(RunContext& ctx) {
    const ExperimentConfig& config = ctx.config;
    ModelBundle bundle = build_model(config.toml, config.seed);
    CertificateConfig cc = certificate_config_from(config.toml, config.seed);
    cc.init_full = bundle.init;
    const BiasCertificate cert = assemble_certificate(bundle.model, cc);

    {
        CsvWriter writer(ctx.artifact("audit.csv"),
                         audit_header(cert.inputs.delta_of_r.size()));
        writer.write_row(audit_row(cert.inputs));
    }
    {
        CsvWriter writer(ctx.artifact("delta_curve.csv"), {"r", "delta_hat"});
        for (const auto& [r, d] : cert.inputs.delta_of_r)
            writer.write_row({CsvWriter::cell(r), CsvWriter::cell(d)});
    }
    if (config.svg) {
        SvgSeries curve;
        curve.label = "delta_hat(r)";
        for (const auto& [r, d] : cert.inputs.delta_of_r) curve.points.emplace_back(r, d);
        SvgPlotOptions opts;
        opts.title = "local curvature distortion";
        opts.x_label = "r";
        opts.y_label = "delta_hat";
        write_svg_plot(ctx.artifact("delta_curve.svg"), {curve}, opts);
    }
}

void run_certify_mode(RunContext& ctx) {
    const ExperimentConfig& config = ctx.config;
    CertificateConfig cc_base = certificate_config_from(config.toml, config.seed);

    Eigen::Index instances = 1;
    const bool oracle = config.toml.has("oracle.family");
    if (oracle) instances = oracle_settings_from(config.toml).instances;

    std::vector<std::string> header = {
        "instance",   "seed",        "p1",        "nu_rho",     "alpha_m",     "tau_m",
        "beta_m",     "c_kappa",     "b_hat",     "r_star",     "delta_rstar", "delta_2rstar",
        "hat_alpha",  "profile_closeness_bound",    "profile_drift_bound",  "measured_bias", "measured_profile_closeness",
        "measured_profile_drift", "exact_bias", "nu_ok",     "beta_ok",    "delta_ok",    "b_ok",
        "binding"};
    CsvWriter writer(ctx.artifact("certificates.csv"), header);

    SvgSeries bias_points, closeness_points;
    bias_points.label = "hat_alpha vs measured bias";
    bias_points.connect = false;
    closeness_points.label = "profile_closeness_bound vs measured";
    closeness_points.connect = false;
    closeness_points.color = "#c23b22";

    std::ofstream text_report(ctx.artifact("certificates.txt"));
    for (Eigen::Index i = 0; i < instances; ++i) {
        const std::uint64_t seed_i = config.seed + static_cast<std::uint64_t>(i);
        ModelBundle bundle = build_model(config.toml, seed_i);
        CertificateConfig cc = cc_base;
        cc.seed = seed_i;
        cc.init_full = bundle.init;
        const BiasCertificate cert = assemble_certificate(bundle.model, cc);
        const MeasuredCloseness measured = measure_closeness(bundle.model, cert.optima);
        const double exact =
            bundle.is_quadratic ? exact_bias(bundle.base, bundle.model.frame) : 0.0;
        text_report << "instance " << i << " (seed " << seed_i << ")\n"
                    << describe(cert) << "\n";

        using C = CsvWriter;
        writer.write_row({C::cell(i), C::cell(seed_i), C::cell(cert.inputs.p1),
                          C::cell(cert.inputs.nu_rho), C::cell(cert.inputs.alpha_m),
                          C::cell(cert.inputs.tau_m), C::cell(cert.inputs.beta_m),
                          C::cell(cert.inputs.c_kappa), C::cell(cert.inputs.b_hat),
                          C::cell(cert.r_star), C::cell(cert.delta_rstar),
                          C::cell(cert.delta_2rstar), C::cell(cert.hat_alpha),
                          C::cell(cert.profile_closeness_bound), C::cell(cert.profile_drift_bound),
                          C::cell(measured.bias), C::cell(measured.closeness), C::cell(measured.drift),
                          C::cell(exact), C::cell(cert.nu_ok), C::cell(cert.beta_ok),
                          C::cell(cert.delta_ok), C::cell(cert.b_ok),
                          C::cell(cert.binding())});
        bias_points.points.emplace_back(measured.bias, cert.hat_alpha);
        closeness_points.points.emplace_back(measured.closeness, cert.profile_closeness_bound);
    }

    if (config.svg) {
        SvgPlotOptions opts;
        opts.title = "certified bounds vs measured quantities";
        opts.x_label = "measured";
        opts.y_label = "bound";
        opts.identity_line = true;
        write_svg_plot(ctx.artifact("bounds_vs_measured.svg"), {bias_points, closeness_points}, opts);
    }
}

void run_simulate_mode(RunContext& ctx) {
    const ExperimentConfig& config = ctx.config;
    const SingleIndexTruth truth = truth_from(config.toml);
    const Eigen::Index n = config.toml.get_int("simulate.n", 4000);
    const Eigen::Index m = config.toml.get_int("simulate.m", 32);
    const Eigen::Index replicates = config.toml.get_int("simulate.replicates", 50);
    const std::string init_kind = config.toml.get_string("simulate.init", "scan");
    const int angles = static_cast<int>(config.toml.get_int("simulate.init_angles", 16));
    if (replicates < 1) throw config_error("simulate.replicates must be >= 1");
    if (init_kind != "scan" && init_kind != "truth")
        throw config_error("simulate.init must be \"scan\" or \"truth\"");
    const BasisSpec spec = truth.basis_spec(m);

    const bool export_data = config.toml.get_bool("simulate.export_data", false);
    if (export_data) fs::create_directories(config.out_dir / "datasets");

    struct Row {
        std::uint64_t seed;
        double theta_err;
        double contrast;
        int iterations;
        bool converged;
        bool monotone;
        bool rank_deficient;
    };
    std::vector<Row> rows(replicates);

    for_each_index(static_cast<std::size_t>(replicates), Exec::parallel, [&](std::size_t i) {
        const std::uint64_t seed_i = config.seed + static_cast<std::uint64_t>(i);
        const Dataset data = sample_dataset(truth, n, seed_i);
        if (export_data)
            write_dataset_csv(
                config.out_dir / "datasets" / ("replicate_" + std::to_string(i) + ".csv"),
                data);
        Vector init;
        if (init_kind == "scan" && truth.p() == 2) {
            init = coarse_angle_init(data, spec, angles);
        } else {
            init = truth.theta_star;
        }
        const ProfileFit fit = profile_fit(data, spec, init);
        bool monotone = true;
        for (std::size_t k = 1; k < fit.trace.contrast_path.size(); ++k)
            if (fit.trace.contrast_path[k] < fit.trace.contrast_path[k - 1]) monotone = false;
        rows[i] = Row{seed_i,
                      (fit.theta - truth.theta_star).norm(),
                      fit.trace.contrast_path.back(),
                      fit.trace.iterations,
                      fit.trace.converged,
                      monotone,
                      fit.trace.rank_deficient};
    });
    if (export_data)
        for (Eigen::Index i = 0; i < replicates; ++i)
            ctx.outputs.push_back("datasets/replicate_" + std::to_string(i) + ".csv");

    CsvWriter writer(ctx.artifact("simulate.csv"),
                     {"replicate", "seed", "theta_err", "contrast_final", "iterations",
                      "converged", "monotone", "rank_deficient"});
    for (Eigen::Index i = 0; i < replicates; ++i) {
        const Row& r = rows[i];
        using C = CsvWriter;
        writer.write_row({C::cell(i), C::cell(r.seed), C::cell(r.theta_err),
                          C::cell(r.contrast), C::cell(r.iterations), C::cell(r.converged),
                          C::cell(r.monotone), C::cell(r.rank_deficient)});
    }
}

void run_rates_mode(RunContext& ctx) {
    const ExperimentConfig& config = ctx.config;
    const SingleIndexTruth truth = truth_from(config.toml);
    if (!config.toml.has("rates.m_list")) config.toml.missing("rates.m_list");
    const auto m_raw = config.toml.get_number_array("rates.m_list");
    std::vector<Eigen::Index> m_list;
    for (const double v : m_raw) m_list.push_back(static_cast<Eigen::Index>(v));
    const Eigen::Index p_max = config.toml.get_int("rates.p_max", 256);
    const auto lambda_points =
        static_cast<std::size_t>(config.toml.get_int("rates.lambda_points", 21));
    PopulationConfig pc = population_config_from(config.toml, config.seed);

    const RateReport report = rate_sweep(truth, m_list, p_max, pc, lambda_points);

    {
        CsvWriter writer(ctx.artifact("rates.csv"),
                         {"m", "alpha_m", "beta_m", "tau_m", "hkappa_sq"});
        for (const RatePoint& pt : report.points) {
            using C = CsvWriter;
            writer.write_row({C::cell(pt.m), C::cell(pt.alpha), C::cell(pt.beta),
                              C::cell(pt.tau), C::cell(pt.hkappa_sq)});
        }
    }
    {
        CsvWriter writer(ctx.artifact("rates_summary.csv"),
                         {"slope_alpha", "slope_beta", "slope_tau", "slope_hkappa",
                          "max_cross_term", "n_scale", "lambda_points"});
        double max_cross = 0.0;
        for (const RatePoint& pt : report.points) max_cross = std::max(max_cross, pt.cross_max);
        using C = CsvWriter;
        writer.write_row({C::cell(report.slope_alpha), C::cell(report.slope_beta),
                          C::cell(report.slope_tau), C::cell(report.slope_hkappa),
                          C::cell(max_cross), C::cell(report.n_scale),
                          C::cell(lambda_points)});
    }
    if (config.svg) {
        auto series = [&](const std::string& label, auto getter, const char* color) {
            SvgSeries s;
            s.label = label;
            s.color = color;
            for (const RatePoint& pt : report.points)
                s.points.emplace_back(static_cast<double>(pt.m), getter(pt));
            return s;
        };
        SvgPlotOptions opts;
        opts.title = "sieve bias rates";
        opts.x_label = "m";
        opts.y_label = "audited quantity";
        opts.log_x = true;
        opts.log_y = true;
        write_svg_plot(
            ctx.artifact("rates.svg"),
            {series("alpha(m)", [](const RatePoint& pt) { return pt.alpha; }, "#1f6fb2"),
             series("beta(m)", [](const RatePoint& pt) { return pt.beta; }, "#c23b22"),
             series("tau(m)", [](const RatePoint& pt) { return pt.tau; }, "#2e8b57"),
             series("|D^1/2 kappa|^2", [](const RatePoint& pt) { return pt.hkappa_sq; },
                    "#8b5cf6")},
            opts);
    }
}

void run_verify_bounds_mode(RunContext& ctx) {
    const ExperimentConfig& config = ctx.config;
    const SieveFrame frame = frame_from(config.toml);
    CertificateConfig cc_base = certificate_config_from(config.toml, config.seed);

    struct Instance {
        std::string label;
        QuadraticContrast base{Matrix::Identity(2, 2), Vector::Zero(2)};
        ContrastModel model;
        bool quadratic = true;
    };
    std::vector<Instance> instances;

    if (config.toml.has("verify.d2_files")) {
        const auto d2_files = config.toml.get_string_array("verify.d2_files");
        const auto center_files = config.toml.get_string_array("verify.center_files");
        if (d2_files.size() != center_files.size())
            throw config_error("verify.d2_files and verify.center_files must pair up");
        const fs::path base_dir = config.config_path.parent_path();
        for (std::size_t i = 0; i < d2_files.size(); ++i) {
            Instance inst;
            inst.label = d2_files[i];
            const Matrix d2 = read_matrix_csv(base_dir / d2_files[i]);
            const Vector center = read_vector_csv(base_dir / center_files[i]);
            inst.base = QuadraticContrast(d2, center);
            inst.model = inst.base.model(frame);
            instances.push_back(std::move(inst));
        }
    } else if (config.toml.has("oracle.family")) {
        const OracleSettings s = oracle_settings_from(config.toml);
        for (Eigen::Index i = 0; i < s.instances; ++i) {
            Instance inst;
            const std::uint64_t seed_i = config.seed + static_cast<std::uint64_t>(i);
            inst.label = "seed:" + std::to_string(seed_i);
            inst.model = oracle_model(s, frame, seed_i, &inst.base);
            inst.quadratic = (s.family == "quadratic");
            instances.push_back(std::move(inst));
        }
    } else {
        throw config_error("verify-bounds needs [oracle] or [verify] file lists");
    }

    const bool export_instances = config.toml.get_bool("verify.export_instances", false);
    if (export_instances) fs::create_directories(config.out_dir / "instances");

    CsvWriter writer(ctx.artifact("verify_bounds.csv"),
                     {"instance", "label", "identity_residual", "measured_profile_closeness",
                      "closeness_bound_nu2", "closeness_bound_nu1", "closeness_ok_default", "closeness_ok_any",
                      "containment_lhs", "r_star", "containment_ok", "measured_bias",
                      "hat_alpha_exact_inputs", "bias_ok"});
    std::size_t violations = 0;
    std::vector<std::string> counterexample_rows;

    for (std::size_t idx = 0; idx < instances.size(); ++idx) {
        Instance& inst = instances[idx];
        const std::uint64_t seed_i = config.seed + static_cast<std::uint64_t>(idx);

        // deterministic probe vector for the stationarity identity
        Rng probe_rng(seed_i ^ 0x2545f4914f6cdd1dull);
        const Vector v = probe_rng.unit_vector(frame.p);
        const double residual = verify_profile_minimizer_identity(inst.base, frame, v);

        CertificateConfig cc = cc_base;
        cc.seed = seed_i;
        const BiasCertificate cert = assemble_certificate(inst.model, cc);
        const MeasuredCloseness measured = measure_closeness(inst.model, cert.optima);

        const double nu = cert.inputs.nu_rho;
        const double beta = cert.inputs.beta_m;
        const double closeness_nu2 = profile_closeness_bound(nu, beta, NuPower::squared);
        const double closeness_nu1 = profile_closeness_bound(nu, beta, NuPower::linear);
        const bool closeness_default = measured.closeness <= closeness_nu2 * (1.0 + 1e-10) + 1e-14;
        const bool closeness_any = closeness_default || measured.closeness <= closeness_nu1 * (1.0 + 1e-10) + 1e-14;

        const Matrix d_full = sym_sqrt(inst.model.hessian(cert.optima.ups_star));
        const double containment_lhs =
            (d_full * (cert.optima.ups_star_m - cert.optima.ups_star)).norm();
        const bool contain_ok = containment_lhs <= cert.r_star * (1.0 + 1e-10) + 1e-14;

        double bias_measured = measured.bias;
        double alpha_exact_bound = 0.0;
        bool bias_ok = true;
        if (inst.quadratic) {
            alpha_exact_bound = hat_alpha(nu, cert.inputs.alpha_m, 0.0, 0.0, 0.0, cc.nu_power);
            bias_measured = exact_bias(inst.base, frame);
            bias_ok = bias_measured <= alpha_exact_bound * (1.0 + 1e-10) + 1e-14;
        }

        using C = CsvWriter;
        writer.write_row({C::cell(idx), C::cell(inst.label), C::cell(residual),
                          C::cell(measured.closeness), C::cell(closeness_nu2), C::cell(closeness_nu1),
                          C::cell(closeness_default), C::cell(closeness_any), C::cell(containment_lhs),
                          C::cell(cert.r_star), C::cell(contain_ok), C::cell(bias_measured),
                          C::cell(alpha_exact_bound), C::cell(bias_ok)});

        if (!closeness_any || !contain_ok || !bias_ok) {
            ++violations;
            const std::string stem = "counterexample_" + std::to_string(idx);
            write_matrix_csv(config.out_dir / (stem + "_d2.csv"), inst.base.d2);
            write_vector_csv(config.out_dir / (stem + "_center.csv"), inst.base.center);
            ctx.outputs.push_back(stem + "_d2.csv");
            ctx.outputs.push_back(stem + "_center.csv");
            counterexample_rows.push_back(std::to_string(idx));
        }
        if (export_instances) {
            const std::string stem = "instances/instance_" + std::to_string(idx);
            write_matrix_csv(config.out_dir / (stem + "_d2.csv"), inst.base.d2);
            write_vector_csv(config.out_dir / (stem + "_center.csv"), inst.base.center);
            ctx.outputs.push_back(stem + "_d2.csv");
            ctx.outputs.push_back(stem + "_center.csv");
        }
    }

    CsvWriter summary(ctx.artifact("verify_summary.csv"),
                      {"instances", "violations", "counterexamples"});
    std::string joined;
    for (std::size_t i = 0; i < counterexample_rows.size(); ++i) {
        if (i) joined += ";";
        joined += counterexample_rows[i];
    }
    summary.write_row({CsvWriter::cell(instances.size()), CsvWriter::cell(violations),
                       CsvWriter::cell(joined)});
}

}  // namespace

void run_experiment(const ExperimentConfig& config) {
    if (config.threads > 0) set_thread_count(config.threads);
    fs::create_directories(config.out_dir);
    RunContext ctx{config, {}};
    switch (config.mode) {
        case ExperimentMode::audit: run_audit_mode(ctx); break;
        case ExperimentMode::certify: run_certify_mode(ctx); break;
        case ExperimentMode::simulate: run_simulate_mode(ctx); break;
        case ExperimentMode::rates: run_rates_mode(ctx); break;
        case ExperimentMode::verify_bounds: run_verify_bounds_mode(ctx); break;
    }
    write_manifest(ctx);
}

}  // namespace sievebias
