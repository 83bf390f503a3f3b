#include "vqmc/pic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vqmc/errors.hpp"
#include "vqmc/parallel.hpp"
#include "vqmc/spectral.hpp"

namespace vqmc {

std::array<double, 4> cubic_bspline_weights(double t) {
    const double u = 1.0 - t;
    return {u * u * u / 6.0, (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0,
            (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0, t * t * t / 6.0};
}

std::array<double, 4> cubic_bspline_first(double t) {
    const double u = 1.0 - t;
    return {-0.5 * u * u, 0.5 * (3.0 * t * t - 4.0 * t), 0.5 * (-3.0 * t * t + 2.0 * t + 1.0), 0.5 * t * t};
}

std::array<double, 4> cubic_bspline_second(double t) { return {1.0 - t, 3.0 * t - 2.0, 1.0 - 3.0 * t, t}; }

namespace {

struct CellPos {
    std::size_t cell;
    double tau;
};

CellPos locate(double x, double x_min, double dx, std::size_t n) {
    const double s = (x - x_min) / dx;
    const double fl = std::floor(s);
    auto c = static_cast<long long>(fl) % static_cast<long long>(n);
    if (c < 0) c += static_cast<long long>(n);
    double tau = s - fl;
    if (tau >= 1.0) tau = std::nextafter(1.0, 0.0);
    return {static_cast<std::size_t>(c), tau};
}

template <class Basis>
double spline_eval(const std::vector<double>& c, double x, double x_min, double dx, Basis&& basis) {
    const std::size_t n = c.size();
    const CellPos p = locate(x, x_min, dx, n);
    const auto w = basis(p.tau);
    double sum = 0.0;
    for (std::size_t r = 0; r < 4; ++r) sum += w[r] * c[(p.cell + n - 1 + r) % n];
    return sum;
}

/// Sum of term(k) over [0, n) with a fixed block layout, merged in block order.
template <class Term>
double ordered_sum(std::size_t n, Term&& term) {
    const BlockPartition part(n, 1);
    std::vector<double> partial(part.blocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(part.blocks); ++b) {
        double s = 0.0;
        for (std::size_t k = part.begin(b); k < part.end(b); ++k) s += term(k);
        partial[b] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

} // namespace

double FieldSolution::phi(double x) const { return spline_eval(coeffs, x, x_min, dx, cubic_bspline_weights); }

double FieldSolution::e(double x) const {
    return -spline_eval(coeffs, x, x_min, dx, cubic_bspline_first) / dx;
}

double FieldSolution::de(double x) const {
    return -spline_eval(coeffs, x, x_min, dx, cubic_bspline_second) / (dx * dx);
}

SplinePoissonSolver::SplinePoissonSolver(double x_min, double length, std::size_t n_f, Species species)
    : x_min_(x_min), length_(length), dx_(length / static_cast<double>(n_f)), n_f_(n_f), species_(species) {
    if (n_f < 4) throw std::invalid_argument("SplinePoissonSolver: need at least 4 cells");
    if (!(length > 0.0)) throw std::invalid_argument("SplinePoissonSolver: length must be positive");

    // int N_0' N_d' by 3-point Gauss-Legendre per cell (exact for the quartic integrand).
    const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    // Derivative (in units of 1/dx) of the spline centred at knot 0 at offset s.
    auto dn = [](double s) {
        if (s <= -2.0 || s >= 2.0) return 0.0;
        const double fl = std::floor(s);
        const auto c = static_cast<int>(fl);
        return cubic_bspline_first(s - fl)[static_cast<std::size_t>(1 - c)];
    };
    for (int d = 0; d < 4; ++d) {
        double sum = 0.0;
        for (int c = -2; c < 2; ++c)
            for (int q = 0; q < 3; ++q) {
                const double s = c + gx[q];
                sum += gw[q] * dn(s) * dn(s - d);
            }
        stiffness_[static_cast<std::size_t>(d)] = sum / dx_;
    }

    const double n = static_cast<double>(n_f);
    std::vector<double> inv_lambda(n_f, 0.0);
    for (std::size_t m = 1; m < n_f; ++m) {
        double lambda = stiffness_[0];
        for (std::size_t d = 1; d < 4; ++d)
            lambda += 2.0 * stiffness_[d] * std::cos(2.0 * std::numbers::pi * static_cast<double>(m * d) / n);
        inv_lambda[m] = 1.0 / lambda;
    }
    inverse_row_.assign(n_f, 0.0);
    for (std::size_t j = 0; j < n_f; ++j) {
        double sum = 0.0;
        for (std::size_t m = 1; m < n_f; ++m)
            sum += inv_lambda[m] * std::cos(2.0 * std::numbers::pi * static_cast<double>((m * j) % n_f) / n);
        inverse_row_[j] = sum / n;
    }
}

template <bool Parallel>
std::vector<double> SplinePoissonSolver::deposit(std::span<const double> x, std::span<const double> w) const {
    if (x.size() != w.size()) throw std::invalid_argument("deposit_rhs: positions and weights differ in length");
    const std::size_t n = n_f_, np = x.size();
    std::vector<double> acc(n, 0.0);
    auto scatter = [&](std::size_t k, double* buf) {
        const CellPos p = locate(x[k], x_min_, dx_, n);
        const auto b = cubic_bspline_weights(p.tau);
        for (std::size_t r = 0; r < 4; ++r) buf[(p.cell + n - 1 + r) % n] += w[k] * b[r];
    };
    if constexpr (Parallel) {
        const BlockPartition part(np, n);
        std::vector<double> partial(part.blocks * n, 0.0);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(part.blocks); ++b)
            for (std::size_t k = part.begin(b); k < part.end(b); ++k) scatter(k, partial.data() + b * n);
        merge_blocks(partial, part.blocks, acc);
    } else {
        for (std::size_t k = 0; k < np; ++k) scatter(k, acc.data());
    }
    const double inv_np = np > 0 ? 1.0 / static_cast<double>(np) : 0.0;
    for (double& a : acc) a = species_.q * (a * inv_np - dx_);
    return acc;
}

std::vector<double> SplinePoissonSolver::deposit_rhs(std::span<const double> x, std::span<const double> w) const {
    return deposit<true>(x, w);
}

std::vector<double> SplinePoissonSolver::deposit_rhs_serial(std::span<const double> x,
                                                            std::span<const double> w) const {
    return deposit<false>(x, w);
}

FieldSolution SplinePoissonSolver::solve(std::span<const double> b) const {
    if (b.size() != n_f_) throw std::invalid_argument("SplinePoissonSolver::solve: wrong load vector size");
    const std::size_t n = n_f_;
    double mean = 0.0;
    for (double a : b) mean += a;
    mean /= static_cast<double>(n);
    FieldSolution f{std::vector<double>(n, 0.0), x_min_, dx_, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += inverse_row_[(j + n - i) % n] * (b[j] - mean);
        f.coeffs[i] = sum;
    }
    return f;
}

std::vector<double> SplinePoissonSolver::apply_stiffness(std::span<const double> c) const {
    const std::size_t n = n_f_;
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = stiffness_[0] * c[i];
        for (std::size_t d = 1; d < 4; ++d) sum += stiffness_[d] * (c[(i + d) % n] + c[(i + n * 4 - d) % n]);
        out[i] = sum;
    }
    return out;
}

double SplinePoissonSolver::field_energy(const FieldSolution& f) const {
    const std::vector<double> kc = apply_stiffness(f.coeffs);
    double sum = 0.0;
    for (std::size_t i = 0; i < n_f_; ++i) sum += f.coeffs[i] * kc[i];
    return 0.5 * sum;
}

SelfConsistentField::SelfConsistentField(SplinePoissonSolver solver, bool parallel)
    : solver_(std::move(solver)), parallel_(parallel) {
    field_ = FieldSolution{std::vector<double>(solver_.n_f(), 0.0), solver_.x_min(), solver_.dx(), 0.0};
}

void SelfConsistentField::update(std::span<const double> x, std::span<const double> w) {
    const std::vector<double> b = parallel_ ? solver_.deposit_rhs(x, w) : solver_.deposit_rhs_serial(x, w);
    field_ = solver_.solve(b);
}

std::string_view integrator_name(IntegratorKind k) {
    switch (k) {
    case IntegratorKind::explicit_euler: return "explicit_euler";
    case IntegratorKind::explicit_euler2: return "explicit_euler2";
    case IntegratorKind::symplectic_euler: return "symplectic_euler";
    case IntegratorKind::implicit_midpoint: return "implicit_midpoint";
    case IntegratorKind::crank_nicolson: return "crank_nicolson";
    case IntegratorKind::ruth3: return "ruth3";
    }
    return "unknown";
}

IntegratorKind parse_integrator(std::string_view name) {
    for (auto k : {IntegratorKind::explicit_euler, IntegratorKind::explicit_euler2, IntegratorKind::symplectic_euler,
                   IntegratorKind::implicit_midpoint, IntegratorKind::crank_nicolson, IntegratorKind::ruth3})
        if (integrator_name(k) == name) return k;
    throw std::invalid_argument("unknown integrator '" + std::string(name) + "'");
}

bool is_volume_preserving(IntegratorKind k) {
    return k != IntegratorKind::explicit_euler && k != IntegratorKind::explicit_euler2;
}

namespace {

void wrap_all(std::vector<double>& x, const ElectricField& field) {
    if (const auto dom = field.periodic_domain()) {
        const auto [x_min, length] = *dom;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(x.size()); ++k)
            x[k] = wrap_periodic(x[k], x_min, length);
    }
}

std::vector<double> wrapped(const std::vector<double>& x, const ElectricField& field) {
    std::vector<double> out = x;
    wrap_all(out, field);
    return out;
}

template <class Body>
void for_each_particle(std::size_t n, Body&& body) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) body(static_cast<std::size_t>(k));
}

void push_implicit_midpoint(ParticleEnsemble& e, ElectricField& field, double dt, double qm,
                            const std::vector<double>& w) {
    const std::size_t n = e.size();
    const std::vector<double> x0 = e.x, v0 = e.v;
    std::vector<double> x1(n), v1(n), xm(n);
    for_each_particle(n, [&](std::size_t k) {
        v1[k] = v0[k] + dt * qm * field.e(x0[k]);
        x1[k] = x0[k] + 0.5 * dt * (v0[k] + v1[k]);
    });
    double residual = 0.0;
    for (std::size_t it = 1; it <= kFixedPointMaxIterations; ++it) {
        for_each_particle(n, [&](std::size_t k) { xm[k] = 0.5 * (x0[k] + x1[k]); });
        field.update(wrapped(xm, field), w);
        std::vector<double> change(n);
        for_each_particle(n, [&](std::size_t k) {
            const double vn = v0[k] + dt * qm * field.e(xm[k]);
            const double xn = x0[k] + 0.5 * dt * (v0[k] + vn);
            change[k] = std::abs(xn - x1[k]);
            x1[k] = xn;
            v1[k] = vn;
        });
        residual = n ? *std::max_element(change.begin(), change.end()) : 0.0;
        if (residual <= kFixedPointTolerance) {
            e.x = std::move(x1);
            e.v = std::move(v1);
            wrap_all(e.x, field);
            field.update(e.x, w);
            return;
        }
    }
    throw FixedPointDiverged(kFixedPointMaxIterations, residual);
}

void push_crank_nicolson(ParticleEnsemble& e, ElectricField& field, double dt, double qm,
                         const std::vector<double>& w) {
    const std::size_t n = e.size();
    const std::vector<double> x0 = e.x, v0 = e.v;
    std::vector<double> e0(n), x1(n), v1(n);
    for_each_particle(n, [&](std::size_t k) {
        e0[k] = field.e(x0[k]);
        v1[k] = v0[k] + dt * qm * e0[k];
        x1[k] = x0[k] + 0.5 * dt * (v0[k] + v1[k]);
    });
    double residual = 0.0;
    for (std::size_t it = 1; it <= kFixedPointMaxIterations; ++it) {
        field.update(wrapped(x1, field), w);
        std::vector<double> change(n);
        for_each_particle(n, [&](std::size_t k) {
            const double vn = v0[k] + 0.5 * dt * qm * (e0[k] + field.e(x1[k]));
            const double xn = x0[k] + 0.5 * dt * (v0[k] + vn);
            change[k] = std::abs(xn - x1[k]);
            x1[k] = xn;
            v1[k] = vn;
        });
        residual = n ? *std::max_element(change.begin(), change.end()) : 0.0;
        if (residual <= kFixedPointTolerance) {
            e.x = std::move(x1);
            e.v = std::move(v1);
            wrap_all(e.x, field);
            field.update(e.x, w);
            return;
        }
    }
    throw FixedPointDiverged(kFixedPointMaxIterations, residual);
}

} // namespace

void push(IntegratorKind kind, ParticleEnsemble& e, ElectricField& field, double dt, const Species& species) {
    const double qm = species.charge_to_mass();
    const std::size_t n = e.size();
    std::vector<double> w = weights(e);
    switch (kind) {
    case IntegratorKind::symplectic_euler:
        for_each_particle(n, [&](std::size_t k) { e.x[k] += dt * e.v[k]; });
        wrap_all(e.x, field);
        field.update(e.x, w);
        for_each_particle(n, [&](std::size_t k) { e.v[k] += dt * qm * field.e(e.x[k]); });
        break;
    case IntegratorKind::explicit_euler:
    case IntegratorKind::explicit_euler2: {
        const bool rescale_f = kind == IntegratorKind::explicit_euler2;
        for_each_particle(n, [&](std::size_t k) {
            const double ek = field.e(e.x[k]);
            const double det = 1.0 - dt * dt * qm * field.de(e.x[k]);
            e.x[k] += dt * e.v[k];
            e.v[k] += dt * qm * ek;
            e.g_like[k] /= det;
            if (rescale_f) e.f_like[k] /= det;
        });
        wrap_all(e.x, field);
        w = weights(e);
        field.update(e.x, w);
        break;
    }
    case IntegratorKind::implicit_midpoint:
        push_implicit_midpoint(e, field, dt, qm, w);
        break;
    case IntegratorKind::crank_nicolson:
        push_crank_nicolson(e, field, dt, qm, w);
        break;
    case IntegratorKind::ruth3: {
        const SplitCoefficients c = SplitCoefficients::ruth3();
        for (std::size_t s = 0; s < c.kick.size(); ++s) {
            if (s > 0) field.update(e.x, w);
            const double kick = c.kick[s] * dt, drift = c.drift[s] * dt;
            for_each_particle(n, [&](std::size_t k) {
                e.v[k] += kick * qm * field.e(e.x[k]);
                e.x[k] += drift * e.v[k];
            });
            wrap_all(e.x, field);
        }
        field.update(e.x, w);
        break;
    }
    }
    e.t += dt;
}

namespace {

template <class Map>
PhasePoint iterate_single(Map&& map, PhasePoint guess) {
    PhasePoint z = guess;
    for (int it = 0; it < 500; ++it) {
        const PhasePoint next = map(z);
        const double change = std::abs(next.x - z.x) + std::abs(next.v - z.v);
        z = next;
        if (change <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(z.x) + std::abs(z.v))) return z;
    }
    const PhasePoint next = map(z);
    const double change = std::abs(next.x - z.x) + std::abs(next.v - z.v);
    if (change <= 1e-13 * (1.0 + std::abs(z.x) + std::abs(z.v))) return next;
    throw FixedPointDiverged(500, change);
}

} // namespace

PhasePoint single_step(IntegratorKind kind, PhasePoint z, double dt, const ElectricField& field,
                       const Species& species) {
    const double qm = species.charge_to_mass();
    switch (kind) {
    case IntegratorKind::symplectic_euler: {
        const double x1 = z.x + dt * z.v;
        return {x1, z.v + dt * qm * field.e(x1)};
    }
    case IntegratorKind::explicit_euler:
    case IntegratorKind::explicit_euler2:
        return {z.x + dt * z.v, z.v + dt * qm * field.e(z.x)};
    case IntegratorKind::implicit_midpoint:
        return iterate_single(
            [&](PhasePoint g) {
                const double v1 = z.v + dt * qm * field.e(0.5 * (z.x + g.x));
                return PhasePoint{z.x + 0.5 * dt * (z.v + v1), v1};
            },
            {z.x + dt * z.v, z.v});
    case IntegratorKind::crank_nicolson: {
        const double e0 = field.e(z.x);
        return iterate_single(
            [&](PhasePoint g) {
                const double v1 = z.v + 0.5 * dt * qm * (e0 + field.e(g.x));
                return PhasePoint{z.x + 0.5 * dt * (z.v + v1), v1};
            },
            {z.x + dt * z.v, z.v});
    }
    case IntegratorKind::ruth3: {
        const SplitCoefficients c = SplitCoefficients::ruth3();
        for (std::size_t s = 0; s < c.kick.size(); ++s) {
            z.v += c.kick[s] * dt * qm * field.e(z.x);
            z.x += c.drift[s] * dt * z.v;
        }
        return z;
    }
    }
    return z;
}

PhasePoint implicit_euler_step(PhasePoint z, double dt, const ElectricField& field, const Species& species) {
    const double qm = species.charge_to_mass();
    return iterate_single(
        [&](PhasePoint g) {
            const double v1 = z.v + dt * qm * field.e(g.x);
            return PhasePoint{z.x + dt * v1, v1};
        },
        {z.x + dt * z.v, z.v});
}

double map_jacobian_det(const std::function<PhasePoint(PhasePoint)>& map, PhasePoint z) {
    const double hx = 1e-5 * std::max(1.0, std::abs(z.x));
    const double hv = 1e-5 * std::max(1.0, std::abs(z.v));
    const PhasePoint xp = map({z.x + hx, z.v}), xm = map({z.x - hx, z.v});
    const PhasePoint vp = map({z.x, z.v + hv}), vm = map({z.x, z.v - hv});
    const double a = (xp.x - xm.x) / (2.0 * hx), b = (vp.x - vm.x) / (2.0 * hv);
    const double c = (xp.v - xm.v) / (2.0 * hx), d = (vp.v - vm.v) / (2.0 * hv);
    return a * d - b * c;
}

double flow_jacobian_det(IntegratorKind kind, double x, double v, double dt, const ElectricField& field,
                         const Species& species) {
    return map_jacobian_det([&](PhasePoint z) { return single_step(kind, z, dt, field, species); }, {x, v});
}

double kinetic_energy(const ParticleEnsemble& e) {
    if (e.size() == 0) return 0.0;
    const double s = ordered_sum(e.size(), [&](std::size_t k) { return e.v[k] * e.v[k] * weight(e, k); });
    return 0.5 * s / static_cast<double>(e.size());
}

double total_mass(const ParticleEnsemble& e) {
    if (e.size() == 0) return 0.0;
    return ordered_sum(e.size(), [&](std::size_t k) { return weight(e, k); }) / static_cast<double>(e.size());
}

double momentum(const ParticleEnsemble& e) {
    if (e.size() == 0) return 0.0;
    return ordered_sum(e.size(), [&](std::size_t k) { return e.v[k] * weight(e, k); }) /
           static_cast<double>(e.size());
}

EntropyEstimate discrete_entropy(const ParticleEnsemble& e) {
    if (e.size() == 0) return {};
    const double n = static_cast<double>(e.size());
    const double s = ordered_sum(e.size(), [&](std::size_t k) {
        const double f = e.f_like[k];
        return f > 0.0 ? f * std::log(f) / e.g_like[k] : 0.0;
    });
    const double skipped = ordered_sum(e.size(), [&](std::size_t k) { return e.f_like[k] > 0.0 ? 0.0 : 1.0; });
    return {s / n, skipped / n};
}

DiagnosticsRecord pic_record(const ParticleEnsemble& e, const ElectricField& field) {
    return make_record(e.t, Segment::pic, field.energy(), kinetic_energy(e), total_mass(e),
                       discrete_entropy(e).value);
}

PicRun run_pic(ParticleEnsemble e, double x_min, double length, const PicRunConfig& cfg,
               const std::function<void(const ParticleEnsemble&, std::size_t)>& observer) {
    if (cfg.output_stride < 1) throw std::invalid_argument("run_pic: output stride must be >= 1");
    SelfConsistentField field(SplinePoissonSolver(x_min, length, cfg.n_f, cfg.species));
    for (double& x : e.x) x = wrap_periodic(x, x_min, length);
    field.update(e.x, weights(e));

    PicRun run;
    auto record = [&](std::size_t k) {
        DiagnosticsRecord r = pic_record(e, field);
        if (cfg.disc_stride > 0 && cfg.disc_window && k % cfg.disc_stride == 0)
            r.star_disc = star_discrepancy_in_window(e, *cfg.disc_window, cfg.disc_cap).d_star;
        run.max_entropy_skipped = std::max(run.max_entropy_skipped, discrete_entropy(e).skipped_fraction);
        run.records.push_back(r);
    };
    const double t_start = e.t;
    const std::size_t n = step_count(cfg.t_max - t_start, cfg.dt);
    record(0);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t_next = k == n ? cfg.t_max : t_start + static_cast<double>(k) * cfg.dt;
        push(cfg.integrator, e, field, t_next - e.t, cfg.species);
        e.t = t_next;
        if (observer) observer(e, k);
        if (k % cfg.output_stride == 0 || k == n) record(k);
    }
    run.ensemble = std::move(e);
    return run;
}

} // namespace vqmc
