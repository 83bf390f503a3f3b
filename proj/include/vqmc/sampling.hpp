#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vqmc/core.hpp"
#include "vqmc/lowdisc.hpp"

namespace vqmc {

/// Offset s in [0,1] solving width * (g0 s + (g1 - g0) s^2 / 2) = mass, i.e. the
/// inverse of the CDF of a linear density across one cell. Evaluated in the
/// conjugate form 2r / (g0 + sqrt(g0^2 + 2 (g1-g0) r)), which stays finite when
/// g1 = g0 (where it reduces to the linear inversion r / g0).
double invert_linear_cell(double g0, double g1, double width, double mass);

/// Exact inverse-transform sampler for the bilinear interpolant of a gridded
/// sampling density (Rosenblatt transform: marginal in x, conditional in v).
/// Immutable after construction and safe to share between threads.
class BilinearSampler {
  public:
    /// Requires g >= 0 with unit trapezoid mass (to 1e-10).
    explicit BilinearSampler(GriddedDensity g);

    const GriddedDensity& density() const { return g_; }
    std::span<const double> marginal_x_nodes() const { return marginal_x_; }
    /// Trapezoid partial sums of the x marginal, nx + 1 entries ending at 1.
    std::span<const double> cum_x() const { return cum_x_; }

    double sample_marginal_x(double u_x) const;
    /// Throws ZeroConditional when the x marginal vanishes at x.
    double sample_conditional_v(double x, double u_v) const;
    /// Forward map (G_X(x), G_{V|X=x}(v)).
    std::pair<double, double> forward_cdf(double x, double v) const;
    double marginal_x(double x) const;
    double eval(double x, double v) const { return g_.interpolate(x, v); }

    /// Maps each pair through the inverse transform and stores g at the sample
    /// in g_like. f_like is zero-filled for the caller.
    ParticleEnsemble rosenblatt_sample(std::span<const Point2> pairs) const;
    ParticleEnsemble rosenblatt_sample_serial(std::span<const Point2> pairs) const;

  private:
    struct Column {
        std::size_t i, i1;
        double alpha;
    };
    Column locate_x(double x) const;
    double conditional_partial(const Column& c, std::size_t j) const;
    void sample_one(const Point2& p, ParticleEnsemble& out, std::size_t k) const;

    GriddedDensity g_;
    std::vector<double> marginal_x_;
    std::vector<double> cum_x_;
    std::vector<double> cum_v_; // per x node: trapezoid partial sums over v, nv entries
};

/// Inverse-transform sampling of an analytic initial condition as a product of
/// 1-D densities: x from (1 - eps cos kx) by Newton inversion of its CDF,
/// v from the two-Gaussian mixture truncated to [v_min, v_max].
/// f_like = eval_initial_f, g_like = product of the two 1-D densities.
ParticleEnsemble its_tensor_product(const InitialCondition& ic, std::span<const Point2> pairs,
                                    const PhaseSpaceDomain& domain);

/// Markers uniform on `box` with g_like = 1 / area and f_like = eval_initial_f.
ParticleEnsemble uniform_sample(const InitialCondition& ic, std::span<const Point2> pairs, const AxisBox& box);

/// Inverse CDF of (1 - eps cos kx) on [x_min, x_max]; throws NewtonNoConvergence.
double invert_spatial_cdf(const InitialCondition& ic, const PhaseSpaceDomain& domain, double u);
/// Inverse CDF of the truncated velocity mixture; throws NewtonNoConvergence.
double invert_velocity_cdf(const InitialCondition& ic, const PhaseSpaceDomain& domain, double u);

/// Standard normal quantile (Acklam's rational approximation, relative error ~1e-9).
double normal_quantile_approx(double p);

} // namespace vqmc
