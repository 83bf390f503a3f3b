#include "vqmc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace vqmc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Signed mode number of FFT index m on n points.
double signed_mode(std::size_t m, std::size_t n) {
    return m <= n / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(n);
}

std::vector<double> exponential_filter(std::size_t n) {
    std::vector<double> w(n);
    const double kmax = static_cast<double>(n / 2);
    for (std::size_t m = 0; m < n; ++m) {
        const double r = kmax > 0.0 ? std::abs(signed_mode(m, n)) / kmax : 0.0;
        w[m] = std::exp(-36.0 * std::pow(r, 36.0));
    }
    return w;
}

FourierField poisson_with(const RealFft& fft, std::span<const double> rho, double length, const Species& species) {
    const std::size_t n = rho.size();
    std::vector<cplx> spec(n / 2 + 1);
    fft.forward(rho.data(), spec.data());
    FourierField out;
    out.mean_density = spec[0].real() / static_cast<double>(n);
    out.non_neutral = std::abs(out.mean_density - 1.0) > 1e-6;
    std::vector<cplx> phi_hat(spec.size()), e_hat(spec.size());
    for (std::size_t m = 1; m < spec.size(); ++m) {
        const double kappa = kTwoPi * static_cast<double>(m) / length;
        phi_hat[m] = species.q * spec[m] / (kappa * kappa);
        // The Nyquist derivative has no real representation; drop it.
        e_hat[m] = (n % 2 == 0 && m == n / 2) ? cplx{} : cplx(0.0, -kappa) * phi_hat[m];
    }
    out.phi.resize(n);
    out.e.resize(n);
    fft.backward(phi_hat.data(), out.phi.data());
    fft.backward(e_hat.data(), out.e.data());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.phi[i] *= inv_n;
        out.e[i] *= inv_n;
    }
    return out;
}

} // namespace

SpectralState::SpectralState(PhaseSpaceDomain domain, std::size_t nx, std::size_t nv)
    : domain_(domain), nx_(nx), nv_(nv), values_(nx * nv, 0.0) {
    if (!domain.valid()) throw std::invalid_argument("SpectralState: empty domain");
    if (nx < 2 || nv < 2) throw std::invalid_argument("SpectralState: need at least 2x2 nodes");
}

SpectralState spectral_initial_state(const InitialCondition& ic, const PhaseSpaceDomain& domain, std::size_t nx,
                                     std::size_t nv) {
    SpectralState s(domain, nx, nv);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < nv; ++j) s(i, j) = eval_initial_f(ic, s.x_node(i), s.v_node(j));
    return s;
}

bool SplitCoefficients::valid() const {
    if (drift.size() != kick.size() || drift.empty()) return false;
    const double sd = std::accumulate(drift.begin(), drift.end(), 0.0);
    const double sk = std::accumulate(kick.begin(), kick.end(), 0.0);
    return std::abs(sd - 1.0) < 1e-12 && std::abs(sk - 1.0) < 1e-12;
}

FourierField poisson_fourier(std::span<const double> rho, double length, const Species& species) {
    if (rho.size() < 2) throw std::invalid_argument("poisson_fourier: need at least 2 nodes");
    const RealFft fft(rho.size());
    return poisson_with(fft, rho, length, species);
}

SpectralSolver::SpectralSolver(std::size_t nx, std::size_t nv, Species species, bool filter)
    : nx_(nx), nv_(nv), species_(species), filter_(filter), fft_x_(nx), fft_v_(nv), fft_2d_(nx, nv),
      filter_x_(exponential_filter(nx)), filter_v_(exponential_filter(nv)) {}

void SpectralSolver::advect_x(SpectralState& s, double dt, bool parallel) const {
    const std::size_t nx = nx_, nv = nv_, nk = nx / 2 + 1;
    const double length = s.domain().length_x();
    const double inv_n = 1.0 / static_cast<double>(nx);
    double* f = s.values().data();
#pragma omp parallel if (parallel)
    {
        std::vector<double> line(nx);
        std::vector<cplx> spec(nk);
#pragma omp for schedule(static)
        for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(nv); ++jj) {
            const auto j = static_cast<std::size_t>(jj);
            for (std::size_t i = 0; i < nx; ++i) line[i] = f[i * nv + j];
            fft_x_.forward(line.data(), spec.data());
            const double shift = s.v_node(j) * dt;
            for (std::size_t m = 1; m < nk; ++m)
                spec[m] *= std::polar(1.0, -kTwoPi * static_cast<double>(m) / length * shift);
            fft_x_.backward(spec.data(), line.data());
            for (std::size_t i = 0; i < nx; ++i) f[i * nv + j] = line[i] * inv_n;
        }
    }
}

void SpectralSolver::kick_v(SpectralState& s, std::span<const double> accel, double dt, bool parallel) const {
    const std::size_t nx = nx_, nv = nv_, nk = nv / 2 + 1;
    const double length = s.domain().length_v();
    const double inv_n = 1.0 / static_cast<double>(nv);
    double* f = s.values().data();
#pragma omp parallel if (parallel)
    {
        std::vector<cplx> spec(nk);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(nx); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            double* row = f + i * nv;
            fft_v_.forward(row, spec.data());
            const double shift = accel[i] * dt;
            for (std::size_t m = 1; m < nk; ++m)
                spec[m] *= std::polar(1.0, -kTwoPi * static_cast<double>(m) / length * shift);
            fft_v_.backward(spec.data(), row);
            for (std::size_t j = 0; j < nv; ++j) row[j] *= inv_n;
        }
    }
}

std::vector<double> SpectralSolver::density(const SpectralState& s) const {
    std::vector<double> rho(nx_);
    for (std::size_t i = 0; i < nx_; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < nv_; ++j) sum += s(i, j);
        rho[i] = sum * s.dv();
    }
    return rho;
}

FourierField SpectralSolver::field(const SpectralState& s) const {
    const std::vector<double> rho = density(s);
    return poisson_with(fft_x_, rho, s.domain().length_x(), species_);
}

void SpectralSolver::step(SpectralState& s, double dt, const SplitCoefficients& c, bool parallel) const {
    std::vector<double> accel(nx_);
    for (std::size_t stage = 0; stage < c.kick.size(); ++stage) {
        const FourierField fld = field(s);
        for (std::size_t i = 0; i < nx_; ++i) accel[i] = species_.charge_to_mass() * fld.e[i];
        kick_v(s, accel, c.kick[stage] * dt, parallel);
        advect_x(s, c.drift[stage] * dt, parallel);
    }
    if (filter_) apply_filter(s);
    s.t += dt;
}

void SpectralSolver::apply_filter(SpectralState& s) const {
    const std::size_t nk = nv_ / 2 + 1;
    std::vector<cplx> spec(nx_ * nk);
    fft_2d_.forward(s.values().data(), spec.data());
    for (std::size_t m = 0; m < nx_; ++m)
        for (std::size_t l = 0; l < nk; ++l) spec[m * nk + l] *= filter_x_[m] * filter_v_[l];
    fft_2d_.backward(spec.data(), s.values().data());
    const double inv_n = 1.0 / static_cast<double>(nx_ * nv_);
    for (double& a : s.values()) a *= inv_n;
}

double spectral_mass(const SpectralState& s) {
    double sum = 0.0;
    for (double a : s.values()) sum += a;
    return sum * s.dx() * s.dv();
}

double spectral_kinetic_energy(const SpectralState& s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.nx(); ++i)
        for (std::size_t j = 0; j < s.nv(); ++j) {
            const double v = s.v_node(j);
            sum += v * v * s(i, j);
        }
    return 0.5 * sum * s.dx() * s.dv();
}

double spectral_field_energy(const FourierField& f, double dx) {
    double sum = 0.0;
    for (double e : f.e) sum += e * e;
    return 0.5 * dx * sum;
}

double spectral_entropy(const SpectralState& s) {
    double sum = 0.0;
    for (double a : s.values())
        if (a > 0.0) sum += a * std::log(a);
    return sum * s.dx() * s.dv();
}

double hk_variation(const SpectralState& s) {
    const std::size_t nx = s.nx(), nv = s.nv(), nk = nx / 2 + 1;
    const double length = s.domain().length_x();
    // Spectral x derivative, column by column.
    std::vector<double> fx(nx * nv);
    {
        const RealFft fft(nx);
        std::vector<double> line(nx);
        std::vector<cplx> spec(nk);
        for (std::size_t j = 0; j < nv; ++j) {
            for (std::size_t i = 0; i < nx; ++i) line[i] = s(i, j);
            fft.forward(line.data(), spec.data());
            for (std::size_t m = 0; m < nk; ++m) {
                const bool nyquist = nx % 2 == 0 && m == nx / 2;
                spec[m] = nyquist ? cplx{} : spec[m] * cplx(0.0, kTwoPi * static_cast<double>(m) / length);
            }
            fft.backward(spec.data(), line.data());
            for (std::size_t i = 0; i < nx; ++i) fx[i * nv + j] = line[i] / static_cast<double>(nx);
        }
    }
    const double inv12dv = 1.0 / (12.0 * s.dv());
    auto dv4 = [&](const double* row, std::size_t j) {
        const auto at = [&](std::ptrdiff_t o) {
            const auto jj = (static_cast<std::ptrdiff_t>(j) + o + 2 * static_cast<std::ptrdiff_t>(nv)) %
                            static_cast<std::ptrdiff_t>(nv);
            return row[jj];
        };
        return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) * inv12dv;
    };
    double total = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double* frow = s.values().data() + i * nv;
        const double* fxrow = fx.data() + i * nv;
        for (std::size_t j = 0; j < nv; ++j)
            total += std::abs(fxrow[j]) + std::abs(dv4(frow, j)) + std::abs(dv4(fxrow, j));
    }
    return total * s.dx() * s.dv();
}

GriddedDensity zero_pad(const SpectralState& s, std::size_t n_pad) {
    if (n_pad < 1) throw std::invalid_argument("zero_pad: padding factor must be >= 1");
    const std::size_t nx = s.nx(), nv = s.nv();
    const std::size_t bx = n_pad * nx, bv = n_pad * nv;
    GriddedDensity out(s.domain(), bx, bv + 1);
    if (n_pad == 1) {
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < nv; ++j) out(i, j) = s(i, j);
            out(i, nv) = s(i, 0);
        }
        return out;
    }
    const std::size_t nk = nv / 2 + 1, bk = bv / 2 + 1;
    std::vector<cplx> small(nx * nk), big(bx * bk, cplx{});
    RealFft2D(nx, nv).forward(s.values().data(), small.data());
    const bool x_nyq = nx % 2 == 0, v_nyq = nv % 2 == 0;
    for (std::size_t m = 0; m < nx; ++m) {
        const bool mx_nyq = x_nyq && m == nx / 2;
        // Target rows: the Nyquist row is split evenly between +nx/2 and -nx/2.
        std::size_t rows[2];
        std::size_t n_rows = 1;
        if (mx_nyq) {
            rows[0] = nx / 2;
            rows[1] = bx - nx / 2;
            n_rows = 2;
        } else {
            rows[0] = m < nx / 2 + 1 ? m : bx - (nx - m);
        }
        const double xw = mx_nyq ? 0.5 : 1.0;
        for (std::size_t l = 0; l < nk; ++l) {
            // The v Nyquist column keeps half its weight at +nv/2; the conjugate
            // half at -nv/2 is implied by the Hermitian half spectrum.
            const double w = xw * ((v_nyq && l == nv / 2) ? 0.5 : 1.0);
            for (std::size_t r = 0; r < n_rows; ++r) big[rows[r] * bk + l] += w * small[m * nk + l];
        }
    }
    std::vector<double> fine(bx * bv);
    RealFft2D(bx, bv).backward(big.data(), fine.data());
    const double inv_n = 1.0 / static_cast<double>(nx * nv);
    for (std::size_t i = 0; i < bx; ++i) {
        for (std::size_t j = 0; j < bv; ++j) out(i, j) = fine[i * bv + j] * inv_n;
        out(i, bv) = out(i, 0);
    }
    return out;
}

std::size_t step_count(double t_max, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_count: dt must be positive");
    if (!(t_max > 0.0)) return 0;
    return static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
}

DiagnosticsRecord spectral_record(const SpectralSolver& solver, const SpectralState& s, bool with_hk) {
    const FourierField fld = solver.field(s);
    DiagnosticsRecord r = make_record(s.t, Segment::spectral, spectral_field_energy(fld, s.dx()),
                                      spectral_kinetic_energy(s), spectral_mass(s), spectral_entropy(s));
    if (with_hk) r.hk_variation = hk_variation(s);
    return r;
}

SpectralRun run_spectral(const SpectralRunConfig& cfg, const SpectralState* initial,
                         const std::function<void(const SpectralState&, std::size_t)>& observer) {
    if (cfg.output_stride < 1) throw std::invalid_argument("run_spectral: output stride must be >= 1");
    const SpectralSolver solver(cfg.nx, cfg.nv, cfg.species, cfg.filter);
    SpectralRun run;
    run.state = initial ? *initial : spectral_initial_state(cfg.ic, cfg.domain, cfg.nx, cfg.nv);
    if (run.state.nx() != cfg.nx || run.state.nv() != cfg.nv)
        throw std::invalid_argument("run_spectral: initial state does not match the configured grid");
    SpectralState& s = run.state;
    const double t_start = s.t;
    const std::size_t n = step_count(cfg.t_max - t_start, cfg.dt);
    auto record = [&](std::size_t k) {
        const bool hk = cfg.hk_stride > 0 && k % cfg.hk_stride == 0;
        run.records.push_back(spectral_record(solver, s, hk));
        run.non_neutral_seen = run.non_neutral_seen || solver.field(s).non_neutral;
    };
    record(0);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t_next = k == n ? cfg.t_max : t_start + static_cast<double>(k) * cfg.dt;
        solver.step_order3(s, t_next - s.t);
        s.t = t_next;
        if (observer) observer(s, k);
        if (k % cfg.output_stride == 0 || k == n) record(k);
    }
    return run;
}

} // namespace vqmc
