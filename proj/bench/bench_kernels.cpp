// Serial reference vs. OpenMP kernels: wall time and agreement.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "vqmc/densest.hpp"
#include "vqmc/lowdisc.hpp"
#include "vqmc/parallel.hpp"
#include "vqmc/pic.hpp"
#include "vqmc/sampling.hpp"
#include "vqmc/spectral.hpp"

using namespace vqmc;

namespace {

double seconds(const std::function<void()>& f, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

void row(const char* name, double serial, double parallel, double diff) {
    std::printf("%-28s %12.4f %12.4f %9.2fx %12.3e\n", name, serial * 1e3, parallel * 1e3, serial / parallel, diff);
}

} // namespace

int main() {
    const int threads = apply_thread_env();
    std::printf("threads: %d\n", threads);
    std::printf("%-28s %12s %12s %10s %12s\n", "kernel", "serial ms", "openmp ms", "speedup", "max |diff|");

    const InitialCondition ic = InitialCondition::landau();
    const PhaseSpaceDomain dom = domain_for(ic, 8.0);
    const ParticleEnsemble markers = its_tensor_product(ic, generate_pairs(Sobol{}, 1 << 20), dom);
    const std::vector<double> w = weights(markers);

    {
        const SplinePoissonSolver solver(dom.x_min, dom.length_x(), 32);
        std::vector<double> a, b;
        const double ts = seconds([&] { a = solver.deposit_rhs_serial(markers.x, w); }, 5);
        const double tp = seconds([&] { b = solver.deposit_rhs(markers.x, w); }, 5);
        row("spline deposit (2^20)", ts, tp, max_abs_diff(a, b));
    }
    {
        const LinearSplineBasis2D basis(dom, 64, 65);
        std::vector<double> a, b;
        const double ts = seconds([&] { a = moments_serial(markers, basis, true); }, 5);
        const double tp = seconds([&] { b = moments(markers, basis, true); }, 5);
        row("osde moments (2^20)", ts, tp, max_abs_diff(a, b));
    }
    {
        const PointSet2D pts = generate_pairs(PseudoRandom{7}, 3000);
        double a = 0.0, b = 0.0;
        const double ts = seconds([&] { a = star_discrepancy_serial(pts); }, 2);
        const double tp = seconds([&] { b = star_discrepancy(pts); }, 2);
        row("exact D* (n=3000)", ts, tp, std::abs(a - b));
    }
    {
        const GriddedDensity g = normalize_to_sampling_density(grid_initial_condition(ic, dom, 256, 257));
        const BilinearSampler sampler(g);
        const PointSet2D pairs = generate_pairs(Sobol{}, 1 << 18);
        ParticleEnsemble a, b;
        const double ts = seconds([&] { a = sampler.rosenblatt_sample_serial(pairs); }, 3);
        const double tp = seconds([&] { b = sampler.rosenblatt_sample(pairs); }, 3);
        row("rosenblatt sample (2^18)", ts, tp, std::max(max_abs_diff(a.x, b.x), max_abs_diff(a.v, b.v)));
    }
    {
        const SpectralSolver solver(128, 128);
        SpectralState a = spectral_initial_state(ic, domain_for(ic, 6.5), 128, 128), b = a;
        const double ts = seconds([&] { solver.step_order3(a, 0.05, false); }, 10);
        const double tp = seconds([&] { solver.step_order3(b, 0.05, true); }, 10);
        row("spectral ruth3 step (128^2)", ts, tp, max_abs_diff(a.values(), b.values()));
    }
    return 0;
}
