#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "vqmc/core.hpp"
#include "vqmc/fft.hpp"

namespace vqmc {

/// Tensor product of hat functions on the GriddedDensity node layout: periodic
/// in x (nx nodes), bounded in v (nv nodes including both endpoints, half-support
/// hats at the ends).
class LinearSplineBasis2D {
  public:
    LinearSplineBasis2D(PhaseSpaceDomain domain, std::size_t nx, std::size_t nv);

    const PhaseSpaceDomain& domain() const { return domain_; }
    std::size_t nx() const { return nx_; }
    std::size_t nv() const { return nv_; }
    std::size_t size() const { return nx_ * nv_; }
    double dx() const { return domain_.length_x() / static_cast<double>(nx_); }
    double dv() const { return domain_.length_v() / static_cast<double>(nv_ - 1); }

    /// Circulant x mass stencil (int N_{i-1} N_i, int N_i^2, int N_{i+1} N_i).
    std::array<double, 3> mass_x_stencil() const;
    /// Interior v mass stencil; the two end diagonals are dv / 3.
    std::array<double, 3> mass_v_stencil() const;

    struct Support {
        std::size_t i0, i1, j0, j1; ///< nodes of the containing cell
        double wx0, wx1, wv0, wv1;  ///< hat values
    };
    /// Cell and hat values at (x, v); x is wrapped, v must lie in [v_min, v_max].
    Support support(double x, double v) const;
    bool contains_v(double v) const { return v >= domain_.v_min && v <= domain_.v_max; }

    /// (M_x kron M_v) c for coefficients laid out like GriddedDensity values.
    std::vector<double> apply_mass(std::span<const double> c) const;
    /// Inverse of apply_mass: FFT circulant solve along x, Thomas solve along v.
    std::vector<double> solve_mass(std::span<const double> m) const;

  private:
    PhaseSpaceDomain domain_;
    std::size_t nx_, nv_;
};

/// m_ij = (1/n_p) sum_k omega_k N_ij(x_k, v_k) with omega_k = w_k (use_weights) or 1.
/// Markers with v outside the basis range contribute nothing.
std::vector<double> moments(const ParticleEnsemble& e, const LinearSplineBasis2D& basis, bool use_weights);
std::vector<double> moments_serial(const ParticleEnsemble& e, const LinearSplineBasis2D& basis, bool use_weights);

/// Linear-spline orthogonal series density estimate: coefficients (M_x kron M_v)^{-1} m.
GriddedDensity osde_linear(const ParticleEnsemble& e, const LinearSplineBasis2D& basis, bool use_weights);

/// Mass-matrix norm sqrt(c^T M c) of a coefficient field.
double mass_norm(const LinearSplineBasis2D& basis, std::span<const double> c);
/// ||estimate - reference||_M / ||reference||_M.
double relative_l2_error(const LinearSplineBasis2D& basis, std::span<const double> estimate,
                         std::span<const double> reference);

struct Sample3 {
    double x = 0.0, v = 0.0, value = 0.0;
};

/// Default ridge weight: 1e-8 times the largest diagonal entry of A^T A.
inline constexpr double kDefaultRidgeScale = 1e-8;

/// Minimizes sum_s (sum_ij c_ij N_ij(x_s, v_s) - value_s)^2 + lambda |c|^2 through
/// the sparse normal equations (Eigen SimplicialLDLT). lambda = nullopt selects the
/// default. Throws SingularSystem when lambda = 0 and A^T A is singular.
GriddedDensity bilinear_ridge_fit(std::span<const Sample3> samples, const LinearSplineBasis2D& basis,
                                  std::optional<double> lambda = std::nullopt);

/// |1 - sinc(k h / 2)^(m + 1)|, sinc(z) = sin(z) / z.
double spline_mode_error(double k, double h, int m);

} // namespace vqmc
