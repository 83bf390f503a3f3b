#include "vqmc/densest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "vqmc/errors.hpp"
#include "vqmc/parallel.hpp"

namespace vqmc {

LinearSplineBasis2D::LinearSplineBasis2D(PhaseSpaceDomain domain, std::size_t nx, std::size_t nv)
    : domain_(domain), nx_(nx), nv_(nv) {
    if (!domain.valid()) throw std::invalid_argument("LinearSplineBasis2D: empty domain");
    if (nx < 2 || nv < 2) throw std::invalid_argument("LinearSplineBasis2D: need at least 2x2 nodes");
}

std::array<double, 3> LinearSplineBasis2D::mass_x_stencil() const {
    const double h = dx();
    return {h / 6.0, 2.0 * h / 3.0, h / 6.0};
}

std::array<double, 3> LinearSplineBasis2D::mass_v_stencil() const {
    const double h = dv();
    return {h / 6.0, 2.0 * h / 3.0, h / 6.0};
}

LinearSplineBasis2D::Support LinearSplineBasis2D::support(double x, double v) const {
    const double sx = (wrap_periodic(x, domain_.x_min, domain_.length_x()) - domain_.x_min) / dx();
    const std::size_t i0 = std::min(static_cast<std::size_t>(sx), nx_ - 1);
    const double a = std::clamp(sx - static_cast<double>(i0), 0.0, 1.0);
    const double sv = (v - domain_.v_min) / dv();
    const std::size_t j0 = sv <= 0.0 ? 0 : std::min(static_cast<std::size_t>(sv), nv_ - 2);
    const double b = std::clamp(sv - static_cast<double>(j0), 0.0, 1.0);
    return {i0, (i0 + 1) % nx_, j0, j0 + 1, 1.0 - a, a, 1.0 - b, b};
}

std::vector<double> LinearSplineBasis2D::apply_mass(std::span<const double> c) const {
    if (c.size() != size()) throw std::invalid_argument("apply_mass: wrong coefficient count");
    const auto sx = mass_x_stencil();
    const auto sv = mass_v_stencil();
    const double end = dv() / 3.0;
    std::vector<double> tmp(size()), out(size());
    for (std::size_t i = 0; i < nx_; ++i) {
        const std::size_t im = (i + nx_ - 1) % nx_, ip = (i + 1) % nx_;
        for (std::size_t j = 0; j < nv_; ++j)
            tmp[i * nv_ + j] = sx[0] * c[im * nv_ + j] + sx[1] * c[i * nv_ + j] + sx[2] * c[ip * nv_ + j];
    }
    for (std::size_t i = 0; i < nx_; ++i) {
        const double* r = tmp.data() + i * nv_;
        double* o = out.data() + i * nv_;
        for (std::size_t j = 0; j < nv_; ++j) {
            const double diag = (j == 0 || j + 1 == nv_) ? end : sv[1];
            double s = diag * r[j];
            if (j > 0) s += sv[0] * r[j - 1];
            if (j + 1 < nv_) s += sv[2] * r[j + 1];
            o[j] = s;
        }
    }
    return out;
}

std::vector<double> LinearSplineBasis2D::solve_mass(std::span<const double> m) const {
    if (m.size() != size()) throw std::invalid_argument("solve_mass: wrong moment count");
    std::vector<double> out(m.begin(), m.end());
    // x: circulant, diagonal in Fourier space.
    {
        const std::size_t nk = nx_ / 2 + 1;
        const RealFft fft(nx_);
        const auto sx = mass_x_stencil();
        std::vector<double> inv_lambda(nk);
        for (std::size_t k = 0; k < nk; ++k)
            inv_lambda[k] = 1.0 / (sx[1] + 2.0 * sx[0] * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                                                  static_cast<double>(nx_)));
        std::vector<double> line(nx_);
        std::vector<cplx> spec(nk);
        for (std::size_t j = 0; j < nv_; ++j) {
            for (std::size_t i = 0; i < nx_; ++i) line[i] = out[i * nv_ + j];
            fft.forward(line.data(), spec.data());
            for (std::size_t k = 0; k < nk; ++k) spec[k] *= inv_lambda[k];
            fft.backward(spec.data(), line.data());
            for (std::size_t i = 0; i < nx_; ++i) out[i * nv_ + j] = line[i] / static_cast<double>(nx_);
        }
    }
    // v: symmetric tridiagonal, Thomas algorithm per row.
    {
        const auto sv = mass_v_stencil();
        const double end = dv() / 3.0;
        std::vector<double> cprime(nv_), dprime(nv_);
        for (std::size_t i = 0; i < nx_; ++i) {
            double* r = out.data() + i * nv_;
            double diag = end;
            cprime[0] = sv[2] / diag;
            dprime[0] = r[0] / diag;
            for (std::size_t j = 1; j < nv_; ++j) {
                diag = (j + 1 == nv_) ? end : sv[1];
                const double denom = diag - sv[0] * cprime[j - 1];
                cprime[j] = j + 1 < nv_ ? sv[2] / denom : 0.0;
                dprime[j] = (r[j] - sv[0] * dprime[j - 1]) / denom;
            }
            r[nv_ - 1] = dprime[nv_ - 1];
            for (std::size_t j = nv_ - 1; j-- > 0;) r[j] = dprime[j] - cprime[j] * r[j + 1];
        }
    }
    return out;
}

namespace {

void scatter_moment(const LinearSplineBasis2D& basis, double x, double v, double omega, double* buf) {
    if (!basis.contains_v(v)) return;
    const auto s = basis.support(x, v);
    const std::size_t nv = basis.nv();
    buf[s.i0 * nv + s.j0] += omega * s.wx0 * s.wv0;
    buf[s.i0 * nv + s.j1] += omega * s.wx0 * s.wv1;
    buf[s.i1 * nv + s.j0] += omega * s.wx1 * s.wv0;
    buf[s.i1 * nv + s.j1] += omega * s.wx1 * s.wv1;
}

} // namespace

std::vector<double> moments(const ParticleEnsemble& e, const LinearSplineBasis2D& basis, bool use_weights) {
    const std::size_t n = e.size(), width = basis.size();
    const BlockPartition part(n, width);
    std::vector<double> partial(part.blocks * width, 0.0), out(width, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(part.blocks); ++b)
        for (std::size_t k = part.begin(b); k < part.end(b); ++k)
            scatter_moment(basis, e.x[k], e.v[k], use_weights ? weight(e, k) : 1.0, partial.data() + b * width);
    merge_blocks(partial, part.blocks, out);
    if (n > 0)
        for (double& a : out) a /= static_cast<double>(n);
    return out;
}

std::vector<double> moments_serial(const ParticleEnsemble& e, const LinearSplineBasis2D& basis, bool use_weights) {
    std::vector<double> out(basis.size(), 0.0);
    for (std::size_t k = 0; k < e.size(); ++k)
        scatter_moment(basis, e.x[k], e.v[k], use_weights ? weight(e, k) : 1.0, out.data());
    if (e.size() > 0)
        for (double& a : out) a /= static_cast<double>(e.size());
    return out;
}

GriddedDensity osde_linear(const ParticleEnsemble& e, const LinearSplineBasis2D& basis, bool use_weights) {
    if (e.size() == 0) throw std::invalid_argument("osde_linear: empty ensemble");
    return GriddedDensity(basis.domain(), basis.nx(), basis.nv(),
                          basis.solve_mass(moments(e, basis, use_weights)));
}

double mass_norm(const LinearSplineBasis2D& basis, std::span<const double> c) {
    const std::vector<double> mc = basis.apply_mass(c);
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * mc[k];
    return std::sqrt(std::max(0.0, s));
}

double relative_l2_error(const LinearSplineBasis2D& basis, std::span<const double> estimate,
                         std::span<const double> reference) {
    if (estimate.size() != reference.size()) throw std::invalid_argument("relative_l2_error: size mismatch");
    std::vector<double> d(estimate.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = estimate[k] - reference[k];
    return mass_norm(basis, d) / mass_norm(basis, reference);
}

GriddedDensity bilinear_ridge_fit(std::span<const Sample3> samples, const LinearSplineBasis2D& basis,
                                  std::optional<double> lambda) {
    if (lambda && *lambda < 0.0) throw std::invalid_argument("bilinear_ridge_fit: lambda must be >= 0");
    const std::size_t nv = basis.nv(), n = basis.size();
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> triplets;
    triplets.reserve(16 * samples.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (const Sample3& s : samples) {
        if (!basis.contains_v(s.v)) continue;
        const auto sp = basis.support(s.x, s.v);
        const std::size_t idx[4] = {sp.i0 * nv + sp.j0, sp.i0 * nv + sp.j1, sp.i1 * nv + sp.j0, sp.i1 * nv + sp.j1};
        const double val[4] = {sp.wx0 * sp.wv0, sp.wx0 * sp.wv1, sp.wx1 * sp.wv0, sp.wx1 * sp.wv1};
        for (int a = 0; a < 4; ++a) {
            rhs[static_cast<Eigen::Index>(idx[a])] += val[a] * s.value;
            for (int b = 0; b < 4; ++b)
                if (val[a] != 0.0 && val[b] != 0.0)
                    triplets.emplace_back(static_cast<int>(idx[a]), static_cast<int>(idx[b]), val[a] * val[b]);
        }
    }
    Eigen::SparseMatrix<double> normal(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    normal.setFromTriplets(triplets.begin(), triplets.end());
    double max_diag = 0.0;
    for (Eigen::Index k = 0; k < normal.rows(); ++k) max_diag = std::max(max_diag, normal.coeff(k, k));
    const double lam = lambda ? *lambda : kDefaultRidgeScale * max_diag;
    if (lam > 0.0) {
        Eigen::SparseMatrix<double> id(normal.rows(), normal.cols());
        id.setIdentity();
        normal += lam * id;
    }
    normal.makeCompressed();

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(normal);
    if (ldlt.info() != Eigen::Success) throw SingularSystem("bilinear_ridge_fit: factorization failed");
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (!(dmax > 0.0) || d.minCoeff() <= 1e-13 * dmax)
        throw SingularSystem("bilinear_ridge_fit: normal equations are singular; use a positive ridge weight");
    const Eigen::VectorXd c = ldlt.solve(rhs);
    const double res = (normal * c - rhs).norm();
    if (!(res <= 1e-10 * std::max(1.0, rhs.norm())))
        throw SingularSystem("bilinear_ridge_fit: normal-equation residual " + std::to_string(res) +
                             " exceeds tolerance");
    std::vector<double> values(c.data(), c.data() + c.size());
    return GriddedDensity(basis.domain(), basis.nx(), nv, std::move(values));
}

double spline_mode_error(double k, double h, int m) {
    if (m < 0) throw std::invalid_argument("spline_mode_error: order must be >= 0");
    const double z = 0.5 * k * h;
    const double sinc = z == 0.0 ? 1.0 : std::sin(z) / z;
    return std::abs(1.0 - std::pow(sinc, m + 1));
}

} // namespace vqmc
