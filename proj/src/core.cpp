#include "vqmc/core.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "vqmc/errors.hpp"
#include "vqmc/parallel.hpp"

namespace vqmc {

int apply_thread_env() {
    if (const char* env = std::getenv(kThreadEnvVar)) {
        char* end = nullptr;
        long n = std::strtol(env, &end, 10);
        if (end != env && n > 0) omp_set_num_threads(static_cast<int>(n));
    }
    return omp_get_max_threads();
}

double eval_initial_f(const InitialCondition& ic, double x, double v) {
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    const double spatial = 1.0 - ic.epsilon * std::cos(ic.k * x);
    const double db = (v - ic.v_b) / ic.sigma_b;
    const double velocity =
        (1.0 - ic.n_b) * std::exp(-0.5 * v * v) + (ic.n_b / ic.sigma_b) * std::exp(-0.5 * db * db);
    return inv_sqrt_2pi * spatial * velocity;
}

GriddedDensity::GriddedDensity(PhaseSpaceDomain domain, std::size_t nx, std::size_t nv)
    : GriddedDensity(domain, nx, nv, std::vector<double>(nx * nv, 0.0)) {}

GriddedDensity::GriddedDensity(PhaseSpaceDomain domain, std::size_t nx, std::size_t nv, std::vector<double> values)
    : domain_(domain), nx_(nx), nv_(nv), values_(std::move(values)) {
    if (!domain.valid()) throw std::invalid_argument("GriddedDensity: empty domain");
    if (nx < 2 || nv < 2) throw std::invalid_argument("GriddedDensity: need at least 2x2 nodes");
    if (values_.size() != nx * nv)
        throw std::invalid_argument("GriddedDensity: expected " + std::to_string(nx * nv) + " values, got " +
                                    std::to_string(values_.size()));
}

namespace {

template <class F>
double trapezoid(const GriddedDensity& g, F&& transform) {
    double sum = 0.0;
    const std::size_t nv = g.nv();
    for (std::size_t i = 0; i < g.nx(); ++i) {
        double row = 0.5 * (transform(g(i, 0)) + transform(g(i, nv - 1)));
        for (std::size_t j = 1; j + 1 < nv; ++j) row += transform(g(i, j));
        sum += row;
    }
    return sum * g.dx() * g.dv();
}

} // namespace

double GriddedDensity::trapezoid_mass() const {
    return trapezoid(*this, [](double a) { return a; });
}

double GriddedDensity::trapezoid_abs_mass() const {
    return trapezoid(*this, [](double a) { return std::abs(a); });
}

double GriddedDensity::interpolate(double x, double v) const {
    if (v < domain_.v_min || v > domain_.v_max) return 0.0;
    const double xw = wrap_periodic(x, domain_.x_min, domain_.length_x());
    const double sx = (xw - domain_.x_min) / dx();
    std::size_t i = std::min(static_cast<std::size_t>(sx), nx_ - 1);
    const double a = sx - static_cast<double>(i);
    const std::size_t i1 = (i + 1) % nx_;
    const double sv = (v - domain_.v_min) / dv();
    std::size_t j = std::min(static_cast<std::size_t>(sv), nv_ - 2);
    const double b = sv - static_cast<double>(j);
    const double* r0 = values_.data() + i * nv_;
    const double* r1 = values_.data() + i1 * nv_;
    return (1.0 - a) * ((1.0 - b) * r0[j] + b * r0[j + 1]) + a * ((1.0 - b) * r1[j] + b * r1[j + 1]);
}

GriddedDensity grid_initial_condition(const InitialCondition& ic, const PhaseSpaceDomain& domain, std::size_t nx,
                                      std::size_t nv) {
    GriddedDensity g(domain, nx, nv);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < nv; ++j) g(i, j) = eval_initial_f(ic, g.x_node(i), g.v_node(j));
    return g;
}

GriddedDensity normalize_to_sampling_density(const GriddedDensity& f) {
    const double mass = f.trapezoid_abs_mass();
    if (!(mass > 0.0)) throw AllZeroDensity("normalize_to_sampling_density: every node is zero");
    std::vector<double> values(f.values().begin(), f.values().end());
    for (double& a : values) a = std::abs(a) / mass;
    return GriddedDensity(f.domain(), f.nx(), f.nv(), std::move(values));
}

std::vector<double> weights(const ParticleEnsemble& e) {
    std::vector<double> w(e.size());
    for (std::size_t k = 0; k < e.size(); ++k) w[k] = e.f_like[k] / e.g_like[k];
    return w;
}

} // namespace vqmc
