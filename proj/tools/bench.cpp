// Timing comparison between the serial reference kernels and their OpenMP
// counterparts: condition-audit sampling scans and the population quadrature
// assembly. The two paths are also checked for agreement here, mirroring the
// equivalence tests in the suite.

#include <chrono>
#include <cstdio>

#include "sievebias/audit.hpp"
#include "sievebias/oracle.hpp"
#include "sievebias/population.hpp"

using namespace sievebias;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename Fn>
double timed(Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    return seconds_since(start);
}

void report(const char* name, double serial, double parallel, bool agree) {
    std::printf("%-28s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   %s\n", name, serial,
                parallel, serial / parallel, agree ? "agree" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("threads available: %d\n\n", hardware_threads());

    {
        const SieveFrame frame(2, 4, 12);
        const QuarticPerturbation quartic = random_quartic(frame, 0.1, 77);
        const ContrastModel model = quartic.model(frame);
        const Vector center = quartic.base.center;
        const Matrix d0 = sym_sqrt(quartic.base.d2);
        const std::size_t samples = 20000;

        double serial_value = 0.0, parallel_value = 0.0;
        const double t_serial = timed([&] {
            serial_value = estimate_delta(model, d0, center, 1.0, samples, 5, Exec::serial);
        });
        const double t_parallel = timed([&] {
            parallel_value = estimate_delta(model, d0, center, 1.0, samples, 5, Exec::parallel);
        });
        report("delta scan (P=12, 20k)", t_serial, t_parallel,
               serial_value == parallel_value);
    }

    {
        const SieveFrame frame(2, 4, 12);
        const QuarticPerturbation quartic = random_quartic(frame, 0.1, 78);
        const ContrastModel model = quartic.model(frame);
        const Matrix d = sym_sqrt(quartic.base.d2);
        const std::size_t samples = 50000;

        double serial_value = 0.0, parallel_value = 0.0;
        const double t_serial = timed([&] {
            serial_value = estimate_b(model, quartic.base.center, d, 0.1, 2.0, samples, 5,
                                      Exec::serial);
        });
        const double t_parallel = timed([&] {
            parallel_value = estimate_b(model, quartic.base.center, d, 0.1, 2.0, samples, 5,
                                        Exec::parallel);
        });
        report("b scan (P=12, 50k)", t_serial, t_parallel, serial_value == parallel_value);
    }

    {
        const SingleIndexTruth truth = make_rate_truth(3.0, 2, 94);
        const Eigen::Index p_max = 96;
        PopulationConfig serial_cfg;
        serial_cfg.exec = Exec::serial;
        PopulationConfig parallel_cfg;
        parallel_cfg.exec = Exec::parallel;

        const PopulationModel pop_serial =
            population_operator(truth, truth.basis_spec(16), p_max, serial_cfg);
        const PopulationModel pop_parallel =
            population_operator(truth, truth.basis_spec(16), p_max, parallel_cfg);

        Matrix h_serial, h_parallel;
        const double t_serial =
            timed([&] { h_serial = pop_serial.model.hessian(pop_serial.ups_star); });
        const double t_parallel =
            timed([&] { h_parallel = pop_parallel.model.hessian(pop_parallel.ups_star); });
        report("population curvature (P=96)", t_serial, t_parallel,
               (h_serial - h_parallel).cwiseAbs().maxCoeff() == 0.0);

        Vector probe = pop_serial.ups_star;
        probe[p_max - 1] += 0.01;
        Vector hv_serial, hv_parallel;
        const double tv_serial =
            timed([&] { hv_serial = pop_serial.model.hessian_apply(probe, probe); });
        const double tv_parallel =
            timed([&] { hv_parallel = pop_parallel.model.hessian_apply(probe, probe); });
        report("curvature matvec (P=96)", tv_serial, tv_parallel,
               (hv_serial - hv_parallel).cwiseAbs().maxCoeff() == 0.0);
    }

    return 0;
}
