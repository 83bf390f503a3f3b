#include "vqmc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>

#include "vqmc/errors.hpp"

namespace vqmc {

double invert_linear_cell(double g0, double g1, double width, double mass) {
    const double r = mass / width;
    if (r <= 0.0) return 0.0;
    const double disc = std::max(0.0, g0 * g0 + 2.0 * (g1 - g0) * r);
    const double denom = g0 + std::sqrt(disc);
    if (!(denom > 0.0)) return 0.0;
    return std::clamp(2.0 * r / denom, 0.0, 1.0);
}

BilinearSampler::BilinearSampler(GriddedDensity g) : g_(std::move(g)) {
    for (double a : g_.values())
        if (!(a >= 0.0)) throw std::invalid_argument("BilinearSampler: sampling density must be nonnegative");
    const double mass = g_.trapezoid_mass();
    if (std::abs(mass - 1.0) > 1e-10)
        throw std::invalid_argument("BilinearSampler: sampling density must have unit trapezoid mass");

    const std::size_t nx = g_.nx(), nv = g_.nv();
    const double dx = g_.dx(), dv = g_.dv();
    cum_v_.assign(nx * nv, 0.0);
    marginal_x_.assign(nx, 0.0);
    for (std::size_t i = 0; i < nx; ++i) {
        double* row = cum_v_.data() + i * nv;
        for (std::size_t j = 0; j + 1 < nv; ++j) row[j + 1] = row[j] + 0.5 * (g_(i, j) + g_(i, j + 1)) * dv;
        marginal_x_[i] = row[nv - 1];
    }
    cum_x_.assign(nx + 1, 0.0);
    for (std::size_t i = 0; i < nx; ++i)
        cum_x_[i + 1] = cum_x_[i] + 0.5 * (marginal_x_[i] + marginal_x_[(i + 1) % nx]) * dx;
}

BilinearSampler::Column BilinearSampler::locate_x(double x) const {
    const std::size_t nx = g_.nx();
    const double sx = (x - g_.domain().x_min) / g_.dx();
    std::size_t i = sx <= 0.0 ? 0 : std::min(static_cast<std::size_t>(sx), nx - 1);
    const double alpha = std::clamp(sx - static_cast<double>(i), 0.0, 1.0);
    return {i, (i + 1) % nx, alpha};
}

double BilinearSampler::conditional_partial(const Column& c, std::size_t j) const {
    const std::size_t nv = g_.nv();
    return (1.0 - c.alpha) * cum_v_[c.i * nv + j] + c.alpha * cum_v_[c.i1 * nv + j];
}

double BilinearSampler::marginal_x(double x) const {
    const Column c = locate_x(x);
    return (1.0 - c.alpha) * marginal_x_[c.i] + c.alpha * marginal_x_[c.i1];
}

double BilinearSampler::sample_marginal_x(double u_x) const {
    const std::size_t nx = g_.nx();
    const double u = std::clamp(u_x, 0.0, 1.0);
    // Largest i with cum_x[i] < u; zero-mass cells are skipped by the strict inequality.
    auto it = std::lower_bound(cum_x_.begin(), cum_x_.begin() + static_cast<std::ptrdiff_t>(nx), u);
    std::size_t i = it == cum_x_.begin() ? 0 : static_cast<std::size_t>(it - cum_x_.begin()) - 1;
    const double s = invert_linear_cell(marginal_x_[i], marginal_x_[(i + 1) % nx], g_.dx(), u - cum_x_[i]);
    return g_.domain().x_min + (static_cast<double>(i) + s) * g_.dx();
}

double BilinearSampler::sample_conditional_v(double x, double u_v) const {
    const std::size_t nv = g_.nv();
    const Column c = locate_x(x);
    const double gx = (1.0 - c.alpha) * marginal_x_[c.i] + c.alpha * marginal_x_[c.i1];
    if (!(gx > 0.0)) throw ZeroConditional("sample_conditional_v: x marginal vanishes at x = " + std::to_string(x));
    const double target = gx * std::clamp(u_v, 0.0, 1.0);
    // First j in [0, nv-1] with partial(j) >= target.
    std::size_t lo = 0, hi = nv - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (conditional_partial(c, mid) < target)
            lo = mid + 1;
        else
            hi = mid;
    }
    const std::size_t j = std::min(lo == 0 ? 0 : lo - 1, nv - 2);
    const double gamma0 = (1.0 - c.alpha) * g_(c.i, j) + c.alpha * g_(c.i1, j);
    const double gamma1 = (1.0 - c.alpha) * g_(c.i, j + 1) + c.alpha * g_(c.i1, j + 1);
    const double s = invert_linear_cell(gamma0, gamma1, g_.dv(), target - conditional_partial(c, j));
    return g_.domain().v_min + (static_cast<double>(j) + s) * g_.dv();
}

std::pair<double, double> BilinearSampler::forward_cdf(double x, double v) const {
    const Column c = locate_x(x);
    const double dx = g_.dx(), dv = g_.dv();
    const double g0 = marginal_x_[c.i], g1 = marginal_x_[c.i1];
    const double s = c.alpha;
    const double u_x = cum_x_[c.i] + dx * (g0 * s + 0.5 * (g1 - g0) * s * s);

    const double gx = (1.0 - c.alpha) * g0 + c.alpha * g1;
    if (!(gx > 0.0)) return {std::clamp(u_x, 0.0, 1.0), 0.0};
    const double sv = (v - g_.domain().v_min) / dv;
    const std::size_t j = sv <= 0.0 ? 0 : std::min(static_cast<std::size_t>(sv), g_.nv() - 2);
    const double b = std::clamp(sv - static_cast<double>(j), 0.0, 1.0);
    const double gamma0 = (1.0 - c.alpha) * g_(c.i, j) + c.alpha * g_(c.i1, j);
    const double gamma1 = (1.0 - c.alpha) * g_(c.i, j + 1) + c.alpha * g_(c.i1, j + 1);
    const double num = conditional_partial(c, j) + dv * (gamma0 * b + 0.5 * (gamma1 - gamma0) * b * b);
    return {std::clamp(u_x, 0.0, 1.0), std::clamp(num / gx, 0.0, 1.0)};
}

void BilinearSampler::sample_one(const Point2& p, ParticleEnsemble& out, std::size_t k) const {
    const PhaseSpaceDomain& d = g_.domain();
    const double x = sample_marginal_x(p.u);
    const double v = sample_conditional_v(x, p.w);
    out.x[k] = wrap_periodic(x, d.x_min, d.length_x());
    out.v[k] = v;
    out.g_like[k] = g_.interpolate(x, v);
    out.f_like[k] = 0.0;
}

ParticleEnsemble BilinearSampler::rosenblatt_sample(std::span<const Point2> pairs) const {
    ParticleEnsemble out(pairs.size());
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        try {
            sample_one(pairs[k], out, static_cast<std::size_t>(k));
        } catch (...) {
#pragma omp critical(vqmc_sampling_error)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

ParticleEnsemble BilinearSampler::rosenblatt_sample_serial(std::span<const Point2> pairs) const {
    ParticleEnsemble out(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) sample_one(pairs[k], out, k);
    return out;
}

// ---------------------------------------------------------------------------
// Tensor-product sampling of the analytic initial condition.

namespace {

constexpr double kCdfTolerance = 1e-13;
constexpr int kNewtonIterations = 50;
constexpr int kBisectionIterations = 200;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 * 0.5); }

double std_normal_pdf(double z) {
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

/// Newton iteration safeguarded by a shrinking bracket; falls back to pure
/// bisection when Newton leaves the bracket or stalls.
template <class Cdf, class Pdf>
double invert_monotone(Cdf&& cdf, Pdf&& pdf, double u, double lo, double hi, double guess, const char* what) {
    double x = std::clamp(guess, lo, hi);
    for (int it = 0; it < kNewtonIterations; ++it) {
        const double r = cdf(x) - u;
        if (std::abs(r) <= kCdfTolerance) return x;
        if (r < 0.0)
            lo = x;
        else
            hi = x;
        const double p = pdf(x);
        double next = p > 0.0 ? x - r / p : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    for (int it = 0; it < kBisectionIterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = cdf(mid) - u;
        if (std::abs(r) <= kCdfTolerance || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(mid)))
            return mid;
        if (r < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    throw NewtonNoConvergence(std::string(what) + ": inverse CDF did not converge for u = " + std::to_string(u));
}

struct VelocityMixture {
    const InitialCondition& ic;
    double c_min, norm;

    VelocityMixture(const InitialCondition& ic_, const PhaseSpaceDomain& d) : ic(ic_) {
        c_min = raw_cdf(d.v_min);
        norm = raw_cdf(d.v_max) - c_min;
    }
    double raw_cdf(double v) const {
        return (1.0 - ic.n_b) * std_normal_cdf(v) + ic.n_b * std_normal_cdf((v - ic.v_b) / ic.sigma_b);
    }
    double cdf(double v) const { return (raw_cdf(v) - c_min) / norm; }
    double pdf(double v) const {
        return ((1.0 - ic.n_b) * std_normal_pdf(v) + ic.n_b * std_normal_pdf((v - ic.v_b) / ic.sigma_b) / ic.sigma_b) /
               norm;
    }
};

struct SpatialDensity {
    const InitialCondition& ic;
    double x_min, norm;

    SpatialDensity(const InitialCondition& ic_, const PhaseSpaceDomain& d) : ic(ic_), x_min(d.x_min) {
        norm = d.length_x() - ic.epsilon * (std::sin(ic.k * d.x_max) - std::sin(ic.k * d.x_min)) / ic.k;
    }
    double cdf(double x) const {
        return ((x - x_min) - ic.epsilon * (std::sin(ic.k * x) - std::sin(ic.k * x_min)) / ic.k) / norm;
    }
    double pdf(double x) const { return (1.0 - ic.epsilon * std::cos(ic.k * x)) / norm; }
};

} // namespace

double normal_quantile_approx(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double invert_spatial_cdf(const InitialCondition& ic, const PhaseSpaceDomain& domain, double u) {
    u = std::clamp(u, 0.0, 1.0);
    if (ic.epsilon == 0.0) return domain.x_min + u * domain.length_x();
    const SpatialDensity s(ic, domain);
    return invert_monotone([&](double x) { return s.cdf(x); }, [&](double x) { return s.pdf(x); }, u, domain.x_min,
                           domain.x_max, domain.x_min + u * domain.length_x(), "invert_spatial_cdf");
}

double invert_velocity_cdf(const InitialCondition& ic, const PhaseSpaceDomain& domain, double u) {
    u = std::clamp(u, 0.0, 1.0);
    if (u == 0.0) return domain.v_min;
    if (u == 1.0) return domain.v_max;
    const VelocityMixture mix(ic, domain);
    // Initial guess from the untruncated standard normal quantile, then Newton polish.
    const double guess = normal_quantile_approx(mix.c_min + u * mix.norm);
    return invert_monotone([&](double v) { return mix.cdf(v); }, [&](double v) { return mix.pdf(v); }, u,
                           domain.v_min, domain.v_max, guess, "invert_velocity_cdf");
}

ParticleEnsemble its_tensor_product(const InitialCondition& ic, std::span<const Point2> pairs,
                                    const PhaseSpaceDomain& domain) {
    ParticleEnsemble out(pairs.size());
    const SpatialDensity sx(ic, domain);
    const VelocityMixture mv(ic, domain);
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        try {
            const double x = invert_spatial_cdf(ic, domain, pairs[k].u);
            const double v = invert_velocity_cdf(ic, domain, pairs[k].w);
            out.x[k] = wrap_periodic(x, domain.x_min, domain.length_x());
            out.v[k] = v;
            out.f_like[k] = eval_initial_f(ic, x, v);
            out.g_like[k] = sx.pdf(x) * mv.pdf(v);
        } catch (...) {
#pragma omp critical(vqmc_sampling_error)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

ParticleEnsemble uniform_sample(const InitialCondition& ic, std::span<const Point2> pairs, const AxisBox& box) {
    ParticleEnsemble out(pairs.size());
    const double lx = box.x_hi - box.x_lo, lv = box.v_hi - box.v_lo;
    const double g = 1.0 / (lx * lv);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        out.x[k] = box.x_lo + pairs[k].u * lx;
        out.v[k] = box.v_lo + pairs[k].w * lv;
        out.f_like[k] = eval_initial_f(ic, out.x[k], out.v[k]);
        out.g_like[k] = g;
    }
    return out;
}

} // namespace vqmc
