#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "vqmc/core.hpp"
#include "vqmc/fft.hpp"

namespace vqmc {

/// Collocation values of f on a grid periodic in both directions:
/// x_i = x_min + i L_x / nx, v_j = v_min + j L_v / nv. Row-major, v contiguous.
/// Transforms are applied per sub-step, so the state itself is always real.
class SpectralState {
  public:
    SpectralState() = default;
    SpectralState(PhaseSpaceDomain domain, std::size_t nx, std::size_t nv);

    const PhaseSpaceDomain& domain() const { return domain_; }
    std::size_t nx() const { return nx_; }
    std::size_t nv() const { return nv_; }
    double dx() const { return domain_.length_x() / static_cast<double>(nx_); }
    double dv() const { return domain_.length_v() / static_cast<double>(nv_); }
    double x_node(std::size_t i) const { return domain_.x_min + static_cast<double>(i) * dx(); }
    double v_node(std::size_t j) const { return domain_.v_min + static_cast<double>(j) * dv(); }

    double operator()(std::size_t i, std::size_t j) const { return values_[i * nv_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values_[i * nv_ + j]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double t = 0.0;

  private:
    PhaseSpaceDomain domain_{};
    std::size_t nx_ = 0, nv_ = 0;
    std::vector<double> values_;
};

/// Samples an initial condition at the collocation nodes.
SpectralState spectral_initial_state(const InitialCondition& ic, const PhaseSpaceDomain& domain, std::size_t nx,
                                     std::size_t nv);

/// Fractions of a split-step composition: kick(kick[0]) drift(drift[0]) kick(kick[1]) ...
struct SplitCoefficients {
    std::vector<double> drift;
    std::vector<double> kick;

    /// Ruth's third-order symplectic scheme.
    static SplitCoefficients ruth3() { return {{2.0 / 3.0, -2.0 / 3.0, 1.0}, {7.0 / 24.0, 3.0 / 4.0, -1.0 / 24.0}}; }
    bool valid() const;
};

/// Electric field on the x collocation nodes.
struct FourierField {
    std::vector<double> phi;
    std::vector<double> e;
    double mean_density = 0.0;
    bool non_neutral = false; ///< |mean density - 1| > 1e-6
};

/// Solves dE/dx = q (rho - 1), E = -dPhi/dx on a periodic grid of length `length`:
/// Phi_hat = q rho_hat / kappa^2, E_hat = -i kappa Phi_hat, zero mean for both.
FourierField poisson_fourier(std::span<const double> rho, double length, const Species& species);

/// Pseudo-spectral split-step solver. Each sub-step is an exact shear per
/// resolved mode. Line transforms run in parallel; the result does not depend
/// on the thread count. `parallel = false` runs the same kernels serially.
class SpectralSolver {
  public:
    SpectralSolver(std::size_t nx, std::size_t nv, Species species = {}, bool filter = true);

    /// f(x, v) <- f(x - v dt, v).
    void advect_x(SpectralState& s, double dt, bool parallel = true) const;
    /// f(x, v) <- f(x, v - a(x) dt) for a per-x acceleration a.
    void kick_v(SpectralState& s, std::span<const double> accel, double dt, bool parallel = true) const;
    /// rho(x) = dv sum_j f(x, v_j).
    std::vector<double> density(const SpectralState& s) const;
    FourierField field(const SpectralState& s) const;
    /// One composition step; the filter is applied afterwards when enabled.
    void step(SpectralState& s, double dt, const SplitCoefficients& c, bool parallel = true) const;
    void step_order3(SpectralState& s, double dt, bool parallel = true) const {
        step(s, dt, SplitCoefficients::ruth3(), parallel);
    }
    /// Multiplies every mode by exp(-36 (|kappa| / kappa_max)^36) in both directions.
    void apply_filter(SpectralState& s) const;

    bool filter_enabled() const { return filter_; }
    const Species& species() const { return species_; }

  private:
    std::size_t nx_, nv_;
    Species species_;
    bool filter_;
    RealFft fft_x_, fft_v_;
    RealFft2D fft_2d_;
    std::vector<double> filter_x_, filter_v_;
};

double spectral_mass(const SpectralState& s);
double spectral_kinetic_energy(const SpectralState& s);
/// 1/2 dx sum E_i^2.
double spectral_field_energy(const FourierField& f, double dx);
/// Integral of f ln f over the nodes with f > 0.
double spectral_entropy(const SpectralState& s);

/// Hardy-Krause variation int|f_x| + int|f_v| + int|f_xv|: spectral derivative
/// in x, fourth-order periodic central difference in v, rectangle sums.
double hk_variation(const SpectralState& s);

/// Evaluates the trigonometric interpolant on an (n_pad nx) x (n_pad nv) grid
/// by embedding the spectrum in a larger zero spectrum (Nyquist modes split
/// symmetrically). The result uses the endpoint-inclusive v layout of
/// GriddedDensity, so the periodic v_max column is appended: n_pad nv + 1 nodes.
GriddedDensity zero_pad(const SpectralState& s, std::size_t n_pad);

/// Same grid, endpoint-inclusive v layout (appends the periodic v_max column).
inline GriddedDensity to_gridded(const SpectralState& s) { return zero_pad(s, 1); }

struct SpectralRunConfig {
    InitialCondition ic;
    PhaseSpaceDomain domain;
    std::size_t nx = 64, nv = 64;
    double dt = 0.05;
    double t_max = 10.0;
    std::size_t output_stride = 1;
    std::size_t hk_stride = 0; ///< 0 disables the variation diagnostic
    bool filter = true;
    Species species;
};

struct SpectralRun {
    std::vector<DiagnosticsRecord> records;
    SpectralState state;
    bool non_neutral_seen = false;
};

/// Number of steps covering [0, t_max] with step dt (the last may be shorter).
std::size_t step_count(double t_max, double dt);

DiagnosticsRecord spectral_record(const SpectralSolver& solver, const SpectralState& s, bool with_hk);

/// Steps from the initial condition (or `initial`, when given) to t_max,
/// recording diagnostics at step 0, every output stride and at the end.
/// `observer` is called after every step.
SpectralRun run_spectral(const SpectralRunConfig& cfg, const SpectralState* initial = nullptr,
                         const std::function<void(const SpectralState&, std::size_t)>& observer = {});

} // namespace vqmc
