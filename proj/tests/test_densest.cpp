#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "vqmc/densest.hpp"
#include "vqmc/errors.hpp"
#include "vqmc/sampling.hpp"

using namespace vqmc;

namespace {

/// Hat function centred at node c with spacing h, evaluated on the periodic x axis.
double hat_x(double x, double c, double h, double length) {
    double d = std::fmod(std::abs(x - c), length);
    d = std::min(d, length - d);
    return std::max(0.0, 1.0 - d / h);
}

double hat_v(double v, double c, double h) { return std::max(0.0, 1.0 - std::abs(v - c) / h); }

/// Dense (M_x kron M_v) built by quadrature of the basis products.
std::vector<double> dense_mass(const LinearSplineBasis2D& b) {
    const auto& d = b.domain();
    const std::size_t nx = b.nx(), nv = b.nv(), n = b.size();
    std::vector<double> mx(nx * nx), mv(nv * nv), m(n * n);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t k = 0; k < nx; ++k)
            mx[i * nx + k] = oracle::integrate(
                [&](double x) {
                    return hat_x(x, d.x_min + i * b.dx(), b.dx(), d.length_x()) * hat_x(x, d.x_min + k * b.dx(), b.dx(), d.length_x());
                },
                d.x_min, d.x_max, 4 * nx);
    for (std::size_t j = 0; j < nv; ++j)
        for (std::size_t l = 0; l < nv; ++l)
            mv[j * nv + l] = oracle::integrate(
                [&](double v) { return hat_v(v, d.v_min + j * b.dv(), b.dv()) * hat_v(v, d.v_min + l * b.dv(), b.dv()); },
                d.v_min, d.v_max, 4 * (nv - 1));
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < nv; ++j)
            for (std::size_t k = 0; k < nx; ++k)
                for (std::size_t l = 0; l < nv; ++l) m[(i * nv + j) * n + k * nv + l] = mx[i * nx + k] * mv[j * nv + l];
    return m;
}

ParticleEnsemble sample_density(const GriddedDensity& g, const SequenceKind& kind, std::size_t n) {
    return BilinearSampler(g).rosenblatt_sample(generate_pairs(kind, n));
}

GriddedDensity bump_density(const PhaseSpaceDomain& d, std::size_t nx, std::size_t nv) {
    GriddedDensity f(d, nx, nv);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < nv; ++j) {
            const double x = f.x_node(i), v = f.v_node(j);
            f(i, j) = (1.0 + 0.4 * std::cos(x)) * std::exp(-0.5 * v * v);
        }
    return normalize_to_sampling_density(f);
}

} // namespace

TEST_SUITE("densest") {

TEST_CASE("mass stencils") {
    const LinearSplineBasis2D b({0.0, 2.0, -1.0, 1.0}, 8, 9);
    const auto sx = b.mass_x_stencil();
    CHECK(sx[0] == doctest::Approx(b.dx() / 6.0));
    CHECK(sx[1] == doctest::Approx(2.0 * b.dx() / 3.0));
    const auto sv = b.mass_v_stencil();
    CHECK(sv[0] == doctest::Approx(b.dv() / 6.0));
    CHECK(sv[1] == doctest::Approx(2.0 * b.dv() / 3.0));
    // Row sums equal the basis integrals (partition of unity).
    const auto m = b.apply_mass(std::vector<double>(b.size(), 1.0));
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(m[i * 9 + 0] == doctest::Approx(b.dx() * b.dv() / 2.0));
        CHECK(m[i * 9 + 4] == doctest::Approx(b.dx() * b.dv()));
    }
}

TEST_CASE("mass apply and solve against the dense oracle") {
    const LinearSplineBasis2D b({0.0, 3.0, -2.0, 1.0}, 8, 8);
    const auto dense = dense_mass(b);
    Xoshiro256 rng(2);
    std::vector<double> c(b.size());
    for (double& a : c) a = rng.uniform() - 0.3;
    const auto mc = b.apply_mass(c);
    const std::size_t n = b.size();
    for (std::size_t r = 0; r < n; ++r) {
        double ref = 0.0;
        for (std::size_t k = 0; k < n; ++k) ref += dense[r * n + k] * c[k];
        CHECK(mc[r] == doctest::Approx(ref).epsilon(1e-12).scale(1.0));
    }
    const auto back = b.solve_mass(mc);
    for (std::size_t k = 0; k < n; ++k) CHECK(back[k] == doctest::Approx(c[k]).epsilon(1e-11).scale(1.0));
}

TEST_CASE("osde agrees with a dense solve") {
    const PhaseSpaceDomain d{0.0, 2.0 * std::numbers::pi, -4.0, 4.0};
    const LinearSplineBasis2D b(d, 8, 8);
    const ParticleEnsemble e = sample_density(bump_density(d, 8, 8), PseudoRandom{5}, 3000);
    const auto m = moments(e, b, false);
    const GriddedDensity est = osde_linear(e, b, false);
    const auto ref = oracle::dense_solve(dense_mass(b), m);
    for (std::size_t k = 0; k < ref.size(); ++k) CHECK(est.values()[k] == doctest::Approx(ref[k]).epsilon(1e-10).scale(1.0));
    // Moments by direct evaluation of the hats.
    const std::size_t probe = 3 * 8 + 5;
    double direct = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k)
        direct += hat_x(e.x[k], d.x_min + 3 * b.dx(), b.dx(), d.length_x()) * hat_v(e.v[k], d.v_min + 5 * b.dv(), b.dv());
    CHECK(m[probe] == doctest::Approx(direct / e.size()).epsilon(1e-13));
}

TEST_CASE("stratified constant sample gives constant coefficients") {
    const PhaseSpaceDomain d{0.0, 2.0, -1.0, 1.0};
    const LinearSplineBasis2D b(d, 4, 5);
    const std::size_t s = 4; // points per cell and direction
    ParticleEnsemble e;
    for (std::size_t a = 0; a < 4 * s; ++a)
        for (std::size_t c = 0; c < 4 * s; ++c) {
            e.x.push_back(d.x_min + (a + 0.5) * b.dx() / s);
            e.v.push_back(d.v_min + (c + 0.5) * b.dv() / s);
        }
    e.f_like.assign(e.x.size(), 0.25);
    e.g_like.assign(e.x.size(), 0.25);
    const GriddedDensity est = osde_linear(e, b, false);
    for (double a : est.values()) CHECK(a == doctest::Approx(0.25).epsilon(1e-12));
    const GriddedDensity w = osde_linear(e, b, true);
    for (double a : w.values()) CHECK(a == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("osde properties") {
    const PhaseSpaceDomain d{0.0, 2.0 * std::numbers::pi, -5.0, 5.0};
    const LinearSplineBasis2D b(d, 16, 17);
    ParticleEnsemble e = sample_density(bump_density(d, 16, 17), PseudoRandom{8}, 5000);
    const GriddedDensity est = osde_linear(e, b, false);
    // Unit integral: 1^T M c equals the summed moments.
    const auto mc = b.apply_mass(est.values());
    double integral = 0.0;
    for (double a : mc) integral += a;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-12));
    // Permutation invariance.
    ParticleEnsemble r = e;
    std::reverse(r.x.begin(), r.x.end());
    std::reverse(r.v.begin(), r.v.end());
    const GriddedDensity est_r = osde_linear(r, b, false);
    for (std::size_t k = 0; k < b.size(); ++k) CHECK(est_r.values()[k] == doctest::Approx(est.values()[k]).epsilon(1e-12).scale(1.0));
    // Linearity in the empirical measure.
    ParticleEnsemble first = e, second = e;
    first.resize(2000);
    second.x.erase(second.x.begin(), second.x.begin() + 2000);
    second.v.erase(second.v.begin(), second.v.begin() + 2000);
    second.f_like.erase(second.f_like.begin(), second.f_like.begin() + 2000);
    second.g_like.erase(second.g_like.begin(), second.g_like.begin() + 2000);
    const auto m1 = moments(first, b, false), m2 = moments(second, b, false), m = moments(e, b, false);
    for (std::size_t k = 0; k < m.size(); ++k) CHECK(m[k] == doctest::Approx(0.4 * m1[k] + 0.6 * m2[k]).epsilon(1e-12).scale(1.0));
    // Markers outside the velocity range are ignored.
    ParticleEnsemble out = e;
    out.x.push_back(1.0);
    out.v.push_back(9.0);
    out.f_like.push_back(1.0);
    out.g_like.push_back(1.0);
    const auto mo = moments(out, b, false);
    for (std::size_t k = 0; k < m.size(); ++k) CHECK(mo[k] == doctest::Approx(m[k] * 5000.0 / 5001.0).epsilon(1e-12).scale(1.0));
    // Parallel and serial accumulation agree.
    const auto ms = moments_serial(e, b, true), mp = moments(e, b, true);
    for (std::size_t k = 0; k < m.size(); ++k) CHECK(ms[k] == doctest::Approx(mp[k]).epsilon(1e-13).scale(1.0));
}

TEST_CASE("sobol osde beats pseudo-random") {
    const PhaseSpaceDomain d{0.0, 2.0 * std::numbers::pi, -5.0, 5.0};
    const LinearSplineBasis2D b(d, 16, 17);
    const GriddedDensity g = bump_density(d, 16, 17);
    auto err = [&](const SequenceKind& kind) {
        const GriddedDensity est = osde_linear(sample_density(g, kind, 10000), b, false);
        return relative_l2_error(b, est.values(), g.values());
    };
    CHECK(err(Sobol{1}) < err(PseudoRandom{3}));
}

TEST_CASE("norms") {
    const LinearSplineBasis2D b({0.0, 2.0, 0.0, 3.0}, 6, 7);
    CHECK(mass_norm(b, std::vector<double>(b.size(), 1.0)) == doctest::Approx(std::sqrt(6.0)));
    const std::vector<double> a(b.size(), 2.0), c(b.size(), 1.5);
    CHECK(relative_l2_error(b, c, a) == doctest::Approx(0.25));
}

TEST_CASE("ridge fit") {
    const PhaseSpaceDomain d{0.0, 2.0, -1.0, 1.0};
    const LinearSplineBasis2D b(d, 5, 6);
    SUBCASE("interpolation at the nodes") {
        std::vector<Sample3> s;
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 6; ++j) {
                const double x = d.x_min + i * b.dx(), v = d.v_min + j * b.dv();
                s.push_back({x, v, std::sin(3 * x) + v * v});
            }
        const GriddedDensity c = bilinear_ridge_fit(s, b, 0.0);
        for (std::size_t k = 0; k < s.size(); ++k) CHECK(c.values()[k] == doctest::Approx(s[k].value).epsilon(1e-12).scale(1.0));
    }
    SUBCASE("bilinear data is reproduced from scattered samples") {
        Xoshiro256 rng(4);
        std::vector<Sample3> s;
        for (int k = 0; k < 400; ++k) {
            const double x = 2.0 * rng.uniform(), v = 2.0 * rng.uniform() - 1.0;
            s.push_back({x, v, 1.0 + 0.5 * v});
        }
        const GriddedDensity c = bilinear_ridge_fit(s, b);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 6; ++j) CHECK(c(i, j) == doctest::Approx(1.0 + 0.5 * c.v_node(j)).epsilon(1e-6));
    }
    SUBCASE("unregularized underdetermined system is singular") {
        const std::vector<Sample3> s{{0.1, 0.1, 1.0}, {1.1, -0.5, 2.0}};
        CHECK_THROWS_AS(bilinear_ridge_fit(s, b, 0.0), SingularSystem);
        CHECK_NOTHROW(bilinear_ridge_fit(s, b));
    }
    SUBCASE("larger ridge weight never increases the coefficient norm") {
        Xoshiro256 rng(9);
        std::vector<Sample3> s;
        for (int k = 0; k < 20; ++k) s.push_back({2.0 * rng.uniform(), 2.0 * rng.uniform() - 1.0, rng.uniform()});
        double prev = INFINITY;
        for (double lambda : {1e-8, 1e-4, 1e-2, 1.0, 100.0}) {
            const GriddedDensity c = bilinear_ridge_fit(s, b, lambda);
            double norm = 0.0;
            for (double a : c.values()) norm += a * a;
            CHECK(norm <= prev);
            prev = norm;
        }
    }
}

TEST_CASE("spline mode error") {
    CHECK(spline_mode_error(2.0, 1.0, 1) == doctest::Approx(0.2919).epsilon(5e-4));
    CHECK(spline_mode_error(1.0, 1.0 / 16.0, 1) == doctest::Approx(3.2548e-4).epsilon(5e-5));
    const double z = 0.3;
    CHECK(spline_mode_error(2.0 * z, 1.0, 3) == doctest::Approx(1.0 - std::pow(std::sin(z) / z, 4)).epsilon(1e-14));
    CHECK(spline_mode_error(0.0, 1.0, 1) == 0.0);
}

}
