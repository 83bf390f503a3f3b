#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace vqmc {

/// Rectangular phase space, periodic in x and truncated in v.
struct PhaseSpaceDomain {
    double x_min = 0.0;
    double x_max = 2.0 * std::numbers::pi;
    double v_min = -6.0;
    double v_max = 6.0;

    double length_x() const { return x_max - x_min; }
    double length_v() const { return v_max - v_min; }
    bool valid() const { return x_max > x_min && v_max > v_min; }
};

/// Charge and mass in normalized units. The default is the single electron
/// species used throughout (q = -1, m = 1).
struct Species {
    double q = -1.0;
    double m = 1.0;

    double charge_to_mass() const { return q / m; }
};

/// Perturbed two-Maxwellian initial condition
///   f = (1 - eps cos(k x)) / sqrt(2 pi) [ (1-n_b) e^{-v^2/2} + n_b/sigma_b e^{-(v-v_b)^2/(2 sigma_b^2)} ].
struct InitialCondition {
    double epsilon = 0.0;
    double k = 0.5;
    double n_b = 0.0;
    double sigma_b = 1.0;
    double v_b = 4.5;

    double period() const { return 2.0 * std::numbers::pi / k; }
    bool valid() const { return k > 0.0 && sigma_b > 0.0 && n_b >= 0.0 && n_b < 1.0; }

    static InitialCondition landau() { return {0.5, 0.5, 0.0, 1.0, 4.5}; }
    static InitialCondition linear_landau() { return {0.01, 0.5, 0.0, 1.0, 4.5}; }
    static InitialCondition bump_on_tail() { return {1e-3, 0.3, 0.1, 0.3, 4.5}; }
};

double eval_initial_f(const InitialCondition& ic, double x, double v);

/// Domain [0, 2 pi / k] x [v_min, v_max] for an initial condition.
inline PhaseSpaceDomain domain_for(const InitialCondition& ic, double v_max) {
    return {0.0, ic.period(), -v_max, v_max};
}

/// Maps x into [x_min, x_min + length).
inline double wrap_periodic(double x, double x_min, double length) {
    double r = std::fmod(x - x_min, length);
    if (r < 0.0) r += length;
    if (r >= length) r = 0.0;
    return x_min + r;
}

/// Node values on a phase-space grid. x nodes are periodic,
/// x_i = x_min + i * dx with dx = L / nx; v nodes include both endpoints,
/// v_j = v_min + j * dv with dv = (v_max - v_min) / (nv - 1).
/// Storage is row-major with v contiguous: value(i, j) = values[i * nv + j].
class GriddedDensity {
  public:
    GriddedDensity() = default;
    GriddedDensity(PhaseSpaceDomain domain, std::size_t nx, std::size_t nv);
    GriddedDensity(PhaseSpaceDomain domain, std::size_t nx, std::size_t nv, std::vector<double> values);

    const PhaseSpaceDomain& domain() const { return domain_; }
    std::size_t nx() const { return nx_; }
    std::size_t nv() const { return nv_; }
    double dx() const { return domain_.length_x() / static_cast<double>(nx_); }
    double dv() const { return domain_.length_v() / static_cast<double>(nv_ - 1); }
    double x_node(std::size_t i) const { return domain_.x_min + static_cast<double>(i) * dx(); }
    double v_node(std::size_t j) const { return domain_.v_min + static_cast<double>(j) * dv(); }

    double operator()(std::size_t i, std::size_t j) const { return values_[i * nv_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values_[i * nv_ + j]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    /// Trapezoid integral of the node values (periodic in x, endpoint-weighted in v).
    double trapezoid_mass() const;
    /// Trapezoid integral of |values|.
    double trapezoid_abs_mass() const;
    /// Bilinear interpolant; x is wrapped periodically, v outside the domain gives 0.
    double interpolate(double x, double v) const;

  private:
    PhaseSpaceDomain domain_{};
    std::size_t nx_ = 0;
    std::size_t nv_ = 0;
    std::vector<double> values_;
};

/// Samples an initial condition at the grid nodes.
GriddedDensity grid_initial_condition(const InitialCondition& ic, const PhaseSpaceDomain& domain, std::size_t nx,
                                      std::size_t nv);

/// g = |f| / trapezoid mass of |f|. Throws AllZeroDensity when f vanishes.
GriddedDensity normalize_to_sampling_density(const GriddedDensity& f);

/// Markers realizing the characteristics, stored as structure of arrays.
struct ParticleEnsemble {
    std::vector<double> x;
    std::vector<double> v;
    std::vector<double> f_like;
    std::vector<double> g_like;
    double t = 0.0;

    ParticleEnsemble() = default;
    explicit ParticleEnsemble(std::size_t n) : x(n), v(n), f_like(n), g_like(n) {}

    std::size_t size() const { return x.size(); }
    void resize(std::size_t n) {
        x.resize(n);
        v.resize(n);
        f_like.resize(n);
        g_like.resize(n);
    }
};

/// Time-independent marker weight f_k / g_k.
inline double weight(const ParticleEnsemble& e, std::size_t k) { return e.f_like[k] / e.g_like[k]; }

/// Weights of all markers.
std::vector<double> weights(const ParticleEnsemble& e);

enum class Segment { spectral, pic };

inline std::string_view segment_name(Segment s) { return s == Segment::spectral ? "spectral" : "pic"; }

/// One diagnostics sample.
struct DiagnosticsRecord {
    double t = 0.0;
    Segment segment = Segment::spectral;
    double field_energy = 0.0;
    double kinetic_energy = 0.0;
    double total_energy = 0.0;
    double total_mass = 0.0;
    double entropy = 0.0;
    std::optional<double> star_disc;
    std::optional<double> hk_variation;
};

/// Builds a record with total_energy = field_energy + kinetic_energy.
inline DiagnosticsRecord make_record(double t, Segment segment, double field_energy, double kinetic_energy,
                                     double mass, double entropy) {
    return {t, segment, field_energy, kinetic_energy, field_energy + kinetic_energy, mass, entropy, {}, {}};
}

} // namespace vqmc
