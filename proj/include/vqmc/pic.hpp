#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vqmc/core.hpp"
#include "vqmc/lowdisc.hpp"

namespace vqmc {

/// Periodic cubic B-spline N_i centred at knot x_min + i dx (support of four
/// cells), evaluated through the local cell offset tau in [0, 1). Entry r is the
/// value of N_{c-1+r} at x = x_min + (c + tau) dx.
std::array<double, 4> cubic_bspline_weights(double tau);
std::array<double, 4> cubic_bspline_first(double tau);
std::array<double, 4> cubic_bspline_second(double tau);

/// Cubic B-spline coefficients of the potential. E = -Phi'.
struct FieldSolution {
    std::vector<double> coeffs;
    double x_min = 0.0;
    double dx = 1.0;
    double t = 0.0;

    double phi(double x) const;
    double e(double x) const;
    /// dE/dx = -Phi''.
    double de(double x) const;
};

/// Galerkin Poisson solve -Phi'' = q (rho - 1) in the periodic cubic B-spline
/// space of n_f cells. The stiffness matrix is circulant; it is inverted through
/// its eigenvalues with the constant mode pinned to zero.
class SplinePoissonSolver {
  public:
    SplinePoissonSolver(double x_min, double length, std::size_t n_f, Species species = {});

    std::size_t n_f() const { return n_f_; }
    double dx() const { return dx_; }
    double x_min() const { return x_min_; }
    double length() const { return length_; }
    const Species& species() const { return species_; }
    /// Stiffness stencil (int N_0' N_d', d = 0..3).
    const std::array<double, 4>& stiffness_stencil() const { return stiffness_; }

    /// b_i = q [(1/n_p) sum_k w_k N_i(x_k) - dx]. Positions must lie in [x_min, x_min + L).
    std::vector<double> deposit_rhs(std::span<const double> x, std::span<const double> w) const;
    std::vector<double> deposit_rhs_serial(std::span<const double> x, std::span<const double> w) const;
    /// Solves K c = b after projecting out the mean of b; returns zero-mean coefficients.
    FieldSolution solve(std::span<const double> b) const;
    std::vector<double> apply_stiffness(std::span<const double> c) const;
    /// 1/2 int E^2 dx = 1/2 c^T K c.
    double field_energy(const FieldSolution& f) const;

  private:
    template <bool Parallel>
    std::vector<double> deposit(std::span<const double> x, std::span<const double> w) const;

    double x_min_, length_, dx_;
    std::size_t n_f_;
    Species species_;
    std::array<double, 4> stiffness_{};
    std::vector<double> inverse_row_; // first row of the pinned inverse
};

/// Source of the electric field seen by the markers.
class ElectricField {
  public:
    virtual ~ElectricField() = default;
    /// Recomputes the field from marker positions and weights (no-op for external fields).
    virtual void update(std::span<const double> x, std::span<const double> w) = 0;
    virtual double e(double x) const = 0;
    virtual double de(double x) const = 0;
    virtual double energy() const = 0;
    /// Positions are wrapped into this period when set.
    virtual std::optional<std::pair<double, double>> periodic_domain() const = 0;
};

/// Field from the spline Poisson solve of the current markers.
class SelfConsistentField final : public ElectricField {
  public:
    explicit SelfConsistentField(SplinePoissonSolver solver, bool parallel = true);
    void update(std::span<const double> x, std::span<const double> w) override;
    double e(double x) const override { return field_.e(x); }
    double de(double x) const override { return field_.de(x); }
    double energy() const override { return solver_.field_energy(field_); }
    std::optional<std::pair<double, double>> periodic_domain() const override {
        return std::pair{solver_.x_min(), solver_.length()};
    }
    const FieldSolution& solution() const { return field_; }
    const SplinePoissonSolver& solver() const { return solver_; }

  private:
    SplinePoissonSolver solver_;
    bool parallel_;
    FieldSolution field_;
};

/// Prescribed field E(x) with derivative; positions are not wrapped.
class ExternalField final : public ElectricField {
  public:
    ExternalField(std::function<double(double)> e, std::function<double(double)> de, double energy = 0.0)
        : e_(std::move(e)), de_(std::move(de)), energy_(energy) {}
    void update(std::span<const double>, std::span<const double>) override {}
    double e(double x) const override { return e_(x); }
    double de(double x) const override { return de_(x); }
    double energy() const override { return energy_; }
    std::optional<std::pair<double, double>> periodic_domain() const override { return std::nullopt; }

  private:
    std::function<double(double)> e_, de_;
    double energy_;
};

enum class IntegratorKind { explicit_euler, explicit_euler2, symplectic_euler, implicit_midpoint, crank_nicolson, ruth3 };

std::string_view integrator_name(IntegratorKind k);
/// Accepts the names printed by integrator_name; throws std::invalid_argument otherwise.
IntegratorKind parse_integrator(std::string_view name);
bool is_volume_preserving(IntegratorKind k);

inline constexpr double kFixedPointTolerance = 1e-12;
inline constexpr std::size_t kFixedPointMaxIterations = 100;

/// Advances the ensemble by one step. The field must be up to date with the
/// ensemble on entry and is left up to date on exit. Implicit kinds iterate the
/// global particle/field fixed point and throw FixedPointDiverged.
void push(IntegratorKind kind, ParticleEnsemble& e, ElectricField& field, double dt, const Species& species = {});

/// One step of a single marker under a frozen field (field.update is never called).
struct PhasePoint {
    double x = 0.0, v = 0.0;
};
PhasePoint single_step(IntegratorKind kind, PhasePoint z, double dt, const ElectricField& field,
                       const Species& species = {});
/// Implicit Euler step, the adjoint of the explicit Euler step.
PhasePoint implicit_euler_step(PhasePoint z, double dt, const ElectricField& field, const Species& species = {});

/// Determinant of the central-difference Jacobian of a one-step map
/// (h = 1e-5 max(1, |x|) and 1e-5 max(1, |v|)).
double map_jacobian_det(const std::function<PhasePoint(PhasePoint)>& map, PhasePoint z);
double flow_jacobian_det(IntegratorKind kind, double x, double v, double dt, const ElectricField& field,
                         const Species& species = {});

/// (1 / 2 n_p) sum v_k^2 w_k.
double kinetic_energy(const ParticleEnsemble& e);
/// (1 / n_p) sum w_k.
double total_mass(const ParticleEnsemble& e);
/// (1 / n_p) sum v_k w_k.
double momentum(const ParticleEnsemble& e);

struct EntropyEstimate {
    double value = 0.0;
    double skipped_fraction = 0.0; ///< markers with f_like <= 0
};
/// (1 / n_p) sum f_k ln f_k / g_k over markers with f_k > 0.
EntropyEstimate discrete_entropy(const ParticleEnsemble& e);

struct PicRunConfig {
    std::size_t n_f = 16;
    double dt = 0.05;
    double t_max = 10.0;
    IntegratorKind integrator = IntegratorKind::ruth3;
    std::size_t output_stride = 1;
    std::optional<AxisBox> disc_window;
    std::size_t disc_stride = 0; ///< 0 disables the windowed discrepancy
    std::size_t disc_cap = kDefaultDiscrepancyCap;
    Species species;
};

struct PicRun {
    std::vector<DiagnosticsRecord> records;
    ParticleEnsemble ensemble;
    double max_entropy_skipped = 0.0;
};

DiagnosticsRecord pic_record(const ParticleEnsemble& e, const ElectricField& field);

/// Runs the self-consistent PIC loop from e.t to cfg.t_max on [x_min, x_min + length).
PicRun run_pic(ParticleEnsemble e, double x_min, double length, const PicRunConfig& cfg,
               const std::function<void(const ParticleEnsemble&, std::size_t)>& observer = {});

} // namespace vqmc
