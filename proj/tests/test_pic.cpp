#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "vqmc/errors.hpp"
#include "vqmc/pic.hpp"
#include "vqmc/sampling.hpp"

using namespace vqmc;

namespace {

constexpr double pi = std::numbers::pi;

/// Exact Galerkin load vector q int (rho - 1) N_i for rho - 1 = a cos(k x).
std::vector<double> cosine_load(const SplinePoissonSolver& s, double a, double k) {
    std::vector<double> b(s.n_f());
    for (std::size_t i = 0; i < s.n_f(); ++i) {
        const double c = s.x_min() + static_cast<double>(i) * s.dx();
        b[i] = s.species().q *
               oracle::integrate([&](double x) { return a * std::cos(k * x) * oracle::cubic_bspline((x - c) / s.dx()); },
                                 c - 2.0 * s.dx(), c + 2.0 * s.dx(), 4);
    }
    return b;
}

ParticleEnsemble landau_markers(std::size_t n, const SequenceKind& seq) {
    const InitialCondition ic = InitialCondition::landau();
    return its_tensor_product(ic, generate_pairs(seq, n), domain_for(ic, 8.0));
}

} // namespace

TEST_SUITE("pic") {

TEST_CASE("cubic b-spline weights against Cox-de Boor") {
    for (double tau : {0.0, 0.13, 0.5, 0.77, 0.999}) {
        const auto w = cubic_bspline_weights(tau);
        double sum = 0.0;
        for (std::size_t r = 0; r < 4; ++r) {
            CHECK(w[r] == doctest::Approx(oracle::cubic_bspline(tau + 1.0 - static_cast<double>(r))).epsilon(1e-14));
            sum += w[r];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
        // Derivatives against central differences of the oracle.
        const auto d1 = cubic_bspline_first(tau);
        const auto d2 = cubic_bspline_second(tau);
        const double h = 1e-4;
        for (std::size_t r = 0; r < 4; ++r) {
            const double s = tau + 1.0 - static_cast<double>(r);
            const double fd1 = (oracle::cubic_bspline(s + h) - oracle::cubic_bspline(s - h)) / (2 * h);
            CHECK(d1[r] == doctest::Approx(fd1).epsilon(1e-6).scale(1.0));
            if (tau > 2 * h && tau < 1 - 2 * h) {
                const double fd2 = (oracle::cubic_bspline(s + h) - 2 * oracle::cubic_bspline(s) + oracle::cubic_bspline(s - h)) / (h * h);
                CHECK(d2[r] == doctest::Approx(fd2).epsilon(1e-5).scale(1.0));
            }
        }
    }
}

TEST_CASE("deposit examples") {
    const SplinePoissonSolver s(0.0, 8.0, 8);
    SUBCASE("no particles leaves the background") {
        const auto b = s.deposit_rhs({}, {});
        for (double a : b) CHECK(a == doctest::Approx(-s.species().q * s.dx()));
    }
    SUBCASE("one particle at a knot") {
        const std::vector<double> x{3.0}, w{1.0};
        const auto b = s.deposit_rhs(x, w);
        const double q = s.species().q;
        CHECK(b[2] == doctest::Approx(q * (1.0 / 6.0 - 1.0)));
        CHECK(b[3] == doctest::Approx(q * (2.0 / 3.0 - 1.0)));
        CHECK(b[4] == doctest::Approx(q * (1.0 / 6.0 - 1.0)));
        CHECK(b[0] == doctest::Approx(-q));
    }
    SUBCASE("periodic wrap of the stencil") {
        const std::vector<double> x{0.5}, w{1.0};
        const auto b = s.deposit_rhs(x, w);
        double sum = 0.0;
        for (double a : b) sum += a;
        CHECK(sum == doctest::Approx(s.species().q * (1.0 - 8.0)));
        CHECK(b[7] != doctest::Approx(-s.species().q));
    }
    SUBCASE("parallel matches serial") {
        const ParticleEnsemble e = landau_markers(50000, PseudoRandom{4});
        const SplinePoissonSolver t(0.0, 4.0 * pi, 32);
        const auto w = weights(e);
        const auto a = t.deposit_rhs(e.x, w), c = t.deposit_rhs_serial(e.x, w);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(c[i]).epsilon(1e-13));
    }
}

TEST_CASE("stiffness stencil") {
    const SplinePoissonSolver s(0.0, 4.0, 16);
    const double dx = s.dx();
    const auto& k = s.stiffness_stencil();
    CHECK(k[0] * dx == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(k[1] * dx == doctest::Approx(-1.0 / 8.0).epsilon(1e-14));
    CHECK(k[2] * dx == doctest::Approx(-1.0 / 5.0).epsilon(1e-14));
    CHECK(k[3] * dx == doctest::Approx(-1.0 / 120.0).epsilon(1e-14));
    // Independent quadrature of int N_0' N_d' with finite-difference derivatives.
    for (int d = 0; d < 4; ++d) {
        const double h = 1e-5;
        auto dn = [&](double u) { return (oracle::cubic_bspline(u + h) - oracle::cubic_bspline(u - h)) / (2 * h); };
        double ref = 0.0;
        for (int c = -2; c < 2; ++c)
            for (const auto& [u, wq] : oracle::gauss_legendre(6, c, c + 1)) ref += wq * dn(u) * dn(u - d);
        CHECK(k[static_cast<std::size_t>(d)] * dx == doctest::Approx(ref).epsilon(1e-8).scale(1.0));
    }
    // Constants lie in the kernel.
    for (double a : s.apply_stiffness(std::vector<double>(16, 2.5))) CHECK(std::abs(a) <= 1e-14);
}

TEST_CASE("galerkin poisson solve") {
    SUBCASE("zero load") {
        const SplinePoissonSolver s(0.0, 2.0 * pi, 8);
        const FieldSolution f = s.solve(std::vector<double>(8, 0.0));
        for (double c : f.coeffs) CHECK(c == 0.0);
        CHECK(f.e(1.0) == 0.0);
    }
    SUBCASE("solve inverts the stiffness on zero-mean loads") {
        const SplinePoissonSolver s(0.0, 2.0 * pi, 12);
        std::vector<double> b(12);
        for (std::size_t i = 0; i < 12; ++i) b[i] = std::sin(0.7 * i) - std::cos(1.3 * i * i);
        const FieldSolution f = s.solve(b);
        double mean = 0.0;
        for (double a : b) mean += a / 12.0;
        const auto kb = s.apply_stiffness(f.coeffs);
        for (std::size_t i = 0; i < 12; ++i) CHECK(kb[i] == doctest::Approx(b[i] - mean).epsilon(1e-12).scale(1.0));
    }
    SUBCASE("convergence on the cosine case") {
        const double k = 0.5, L = 4.0 * pi, a = 0.3;
        std::vector<double> logh, log_phi, log_e, log_w;
        for (std::size_t n : {8u, 16u, 32u}) {
            const SplinePoissonSolver s(0.0, L, n);
            const FieldSolution f = s.solve(cosine_load(s, a, k));
            const double q = s.species().q;
            double ephi = 0.0, ee = 0.0;
            for (int m = 0; m < 400; ++m) {
                const double x = L * m / 400.0;
                ephi = std::max(ephi, std::abs(f.phi(x) - q * a * std::cos(k * x) / (k * k)));
                ee = std::max(ee, std::abs(f.e(x) - q * a * std::sin(k * x) / k));
            }
            const double w_exact = 0.5 * L * 0.5 * (q * a / k) * (q * a / k);
            logh.push_back(std::log(s.dx()));
            log_phi.push_back(std::log(ephi));
            log_e.push_back(std::log(ee));
            log_w.push_back(std::log(std::abs(s.field_energy(f) - w_exact)));
        }
        const double p_phi = oracle::fit_slope(logh, log_phi), p_e = oracle::fit_slope(logh, log_e);
        MESSAGE("potential order " << p_phi << ", field order " << p_e << ", energy order " << oracle::fit_slope(logh, log_w));
        CHECK(p_phi >= 3.8);
        CHECK(p_e >= 2.8);
    }
}

TEST_CASE("field continuity and periodicity") {
    const ParticleEnsemble e = landau_markers(20000, Sobol{1});
    SelfConsistentField field(SplinePoissonSolver(0.0, 4.0 * pi, 16));
    field.update(e.x, weights(e));
    const double L = 4.0 * pi;
    CHECK(field.e(0.0) == doctest::Approx(field.e(std::nextafter(L, 0.0))).epsilon(1e-12).scale(1.0));
    CHECK(field.e(-1.0) == doctest::Approx(field.e(L - 1.0)).epsilon(1e-12).scale(1.0));
    // Continuity across a knot.
    const double knot = 5 * L / 16;
    CHECK(field.e(knot - 1e-12) == doctest::Approx(field.e(knot + 1e-12)).epsilon(1e-9).scale(1.0));
    CHECK(field.de(knot - 1e-12) == doctest::Approx(field.de(knot + 1e-12)).epsilon(1e-9).scale(1.0));
    // Landau perturbation: density 1 - eps cos(kx) gives E = eps sin(kx) / k for electrons.
    const double amp = 0.5 / 0.5;
    CHECK(field.e(pi) == doctest::Approx(amp * std::sin(0.5 * pi)).epsilon(0.05));
}

TEST_CASE("zero field reduces every scheme to free streaming") {
    const ExternalField zero([](double) { return 0.0; }, [](double) { return 0.0; });
    for (auto kind : {IntegratorKind::explicit_euler, IntegratorKind::explicit_euler2, IntegratorKind::symplectic_euler,
                      IntegratorKind::implicit_midpoint, IntegratorKind::crank_nicolson, IntegratorKind::ruth3}) {
        const PhasePoint z = single_step(kind, {1.0, 0.7}, 0.1, zero);
        CHECK(z.x == doctest::Approx(1.07));
        CHECK(z.v == 0.7);
        ExternalField f = zero;
        ParticleEnsemble e(2);
        e.x = {1.0, -2.0};
        e.v = {0.7, 0.3};
        e.f_like = {1.0, 1.0};
        e.g_like = {2.0, 2.0};
        push(kind, e, f, 0.1);
        CHECK(e.x[0] == doctest::Approx(1.07));
        CHECK(e.x[1] == doctest::Approx(-1.97));
        CHECK(e.v[1] == 0.3);
        CHECK(e.g_like[0] == 2.0);
        CHECK(e.t == doctest::Approx(0.1));
    }
}

TEST_CASE("harmonic oscillator") {
    // E = -x with unit charge: x'' = -x.
    ExternalField field([](double x) { return -x; }, [](double) { return -1.0; });
    const Species unit{1.0, 1.0};
    const double dt = 0.05;
    auto energy = [](PhasePoint z) { return 0.5 * (z.x * z.x + z.v * z.v); };
    for (auto kind : {IntegratorKind::symplectic_euler, IntegratorKind::ruth3, IntegratorKind::implicit_midpoint}) {
        PhasePoint z{1.0, 0.0};
        double worst = 0.0;
        for (int n = 0; n < 10000; ++n) {
            z = single_step(kind, z, dt, field, unit);
            worst = std::max(worst, std::abs(energy(z) - 0.5));
        }
        CHECK(worst <= 0.05);
    }
    // Ruth3 tracks the closed-form rotation.
    PhasePoint z{1.0, 0.0};
    for (int n = 0; n < 200; ++n) z = single_step(IntegratorKind::ruth3, z, dt, field, unit);
    CHECK(z.x == doctest::Approx(std::cos(10.0)).epsilon(1e-3).scale(1.0));
    CHECK(z.v == doctest::Approx(-std::sin(10.0)).epsilon(1e-3).scale(1.0));
    // Explicit Euler gains energy every step, by the factor 1 + dt^2.
    z = {1.0, 0.0};
    double prev = energy(z);
    for (int n = 0; n < 1000; ++n) {
        z = single_step(IntegratorKind::explicit_euler, z, dt, field, unit);
        CHECK(energy(z) > prev);
        CHECK(energy(z) / prev == doctest::Approx(1.0 + dt * dt).epsilon(1e-12));
        prev = energy(z);
    }
}

TEST_CASE("explicit euler likelihood rescaling") {
    const double c = 0.8, dt = 0.2;
    ExternalField field([&](double x) { return c * x; }, [&](double) { return c; });
    const Species sp{};
    const double det = 1.0 - dt * dt * sp.charge_to_mass() * c;
    ParticleEnsemble e(1);
    e.x = {0.3};
    e.v = {0.1};
    e.f_like = {0.5};
    e.g_like = {0.25};
    ParticleEnsemble e2 = e;
    push(IntegratorKind::explicit_euler, e, field, dt, sp);
    CHECK(e.g_like[0] == doctest::Approx(0.25 / det).epsilon(1e-15));
    CHECK(e.f_like[0] == 0.5);
    push(IntegratorKind::explicit_euler2, e2, field, dt, sp);
    CHECK(e2.g_like[0] == doctest::Approx(0.25 / det).epsilon(1e-15));
    CHECK(weight(e2, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("one-step jacobians") {
    ExternalField field([](double x) { return 0.4 * std::sin(x) + 0.1 * std::cos(2 * x); },
                        [](double x) { return 0.4 * std::cos(x) - 0.2 * std::sin(2 * x); });
    const Species sp{};
    for (double x : {-1.0, 0.3, 2.2})
        for (double v : {-2.0, 0.5})
            for (double dt : {0.05, 0.3}) {
                CHECK(flow_jacobian_det(IntegratorKind::symplectic_euler, x, v, dt, field) == doctest::Approx(1.0).epsilon(1e-6));
                CHECK(flow_jacobian_det(IntegratorKind::implicit_midpoint, x, v, dt, field) == doctest::Approx(1.0).epsilon(1e-6));
                CHECK(flow_jacobian_det(IntegratorKind::ruth3, x, v, dt, field) == doctest::Approx(1.0).epsilon(1e-6));
                CHECK(flow_jacobian_det(IntegratorKind::explicit_euler, x, v, dt, field) ==
                      doctest::Approx(1.0 - dt * dt * sp.charge_to_mass() * field.de(x)).epsilon(1e-6));
                // Implicit midpoint = explicit Euler half step after implicit Euler half step.
                const PhasePoint z{x, v};
                const PhasePoint mid = implicit_euler_step(z, 0.5 * dt, field);
                const PhasePoint composed = single_step(IntegratorKind::explicit_euler, mid, 0.5 * dt, field);
                const PhasePoint direct = single_step(IntegratorKind::implicit_midpoint, z, dt, field);
                CHECK(composed.x == doctest::Approx(direct.x).epsilon(1e-12));
                CHECK(composed.v == doctest::Approx(direct.v).epsilon(1e-12));
                const double d_ie = map_jacobian_det([&](PhasePoint p) { return implicit_euler_step(p, 0.5 * dt, field); }, z);
                const double d_ee = flow_jacobian_det(IntegratorKind::explicit_euler, mid.x, mid.v, 0.5 * dt, field);
                CHECK(d_ie * d_ee == doctest::Approx(1.0).epsilon(1e-6));
            }
}

TEST_CASE("estimators") {
    SUBCASE("uniform density equal to the sampling density") {
        const double area = 8.0;
        ParticleEnsemble e(1000);
        const PointSet2D p = generate_pairs(Sobol{1}, 1000);
        for (std::size_t k = 0; k < 1000; ++k) {
            e.x[k] = 4.0 * p[k].u;
            e.v[k] = 2.0 * p[k].w - 1.0;
            e.f_like[k] = e.g_like[k] = 1.0 / area;
        }
        CHECK(total_mass(e) == 1.0);
        CHECK(discrete_entropy(e).value == doctest::Approx(-std::log(area)).epsilon(1e-14));
        CHECK(discrete_entropy(e).skipped_fraction == 0.0);
    }
    SUBCASE("maxwellian kinetic energy") {
        const InitialCondition ic{0.0, 0.5, 0.0, 1.0, 4.5};
        const std::size_t n = 100000;
        const ParticleEnsemble e = its_tensor_product(ic, generate_pairs(PseudoRandom{17}, n), domain_for(ic, 8.0));
        const double h = kinetic_energy(e);
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double term = 0.5 * e.v[k] * e.v[k] * weight(e, k);
            s1 += term;
            s2 += term * term;
        }
        const double sigma = std::sqrt((s2 / n - (s1 / n) * (s1 / n)) / n);
        CHECK(std::abs(h - 2.0 * pi) <= 3.0 * sigma);
        CHECK(total_mass(e) == doctest::Approx(4.0 * pi).epsilon(1e-6));
    }
    SUBCASE("negative likelihoods are skipped by the entropy") {
        ParticleEnsemble e(4);
        e.f_like = {0.5, -0.1, 0.0, 0.5};
        e.g_like = {1.0, 1.0, 1.0, 1.0};
        const EntropyEstimate s = discrete_entropy(e);
        CHECK(s.skipped_fraction == 0.5);
        CHECK(s.value == doctest::Approx(0.25 * std::log(0.5)));
    }
}

TEST_CASE("self-consistent pushes") {
    const InitialCondition ic = InitialCondition::landau();
    const double L = ic.period();
    for (auto kind : {IntegratorKind::symplectic_euler, IntegratorKind::implicit_midpoint,
                      IntegratorKind::crank_nicolson, IntegratorKind::ruth3}) {
        CAPTURE(integrator_name(kind));
        PicRunConfig cfg;
        cfg.n_f = 16;
        cfg.dt = 0.1;
        cfg.t_max = 5.0;
        cfg.integrator = kind;
        const ParticleEnsemble e0 = landau_markers(5000, Sobol{1});
        const PicRun run = run_pic(e0, 0.0, L, cfg);
        // Weights never change under volume-preserving schemes: the mass estimator is bitwise constant.
        for (const auto& r : run.records) CHECK(r.total_mass == run.records.front().total_mass);
        CHECK(run.ensemble.f_like == e0.f_like);
        CHECK(run.ensemble.g_like == e0.g_like);
        for (double x : run.ensemble.x) {
            CHECK(x >= 0.0);
            CHECK(x < L);
        }
        const double e_start = run.records.front().total_energy;
        CHECK(std::abs(run.records.back().total_energy - e_start) / e_start <= 0.05);
        // The finite-element field conserves momentum only approximately; drift stays small.
        CHECK(std::abs(momentum(run.ensemble) - momentum(e0)) <= 0.05);
    }
}

TEST_CASE("pic run bookkeeping and determinism") {
    PicRunConfig cfg;
    cfg.dt = 0.1;
    cfg.t_max = 1.0;
    cfg.output_stride = 5;
    cfg.disc_window = AxisBox{0.0, 2.0, -1.0, 1.0};
    cfg.disc_stride = 10;
    const ParticleEnsemble e0 = landau_markers(3000, Sobol{1});
    const PicRun a = run_pic(e0, 0.0, 4.0 * pi, cfg), b = run_pic(e0, 0.0, 4.0 * pi, cfg);
    REQUIRE(a.records.size() == 3);
    CHECK(a.records[0].star_disc.has_value());
    CHECK(!a.records[1].star_disc.has_value());
    CHECK(a.records[2].star_disc.has_value());
    CHECK(a.records[2].t == 1.0);
    CHECK(a.ensemble.x == b.ensemble.x);
    CHECK(a.ensemble.v == b.ensemble.v);
    CHECK(a.records[2].field_energy == b.records[2].field_energy);
}

TEST_CASE("integrator names") {
    for (auto kind : {IntegratorKind::explicit_euler, IntegratorKind::explicit_euler2, IntegratorKind::symplectic_euler,
                      IntegratorKind::implicit_midpoint, IntegratorKind::crank_nicolson, IntegratorKind::ruth3})
        CHECK(parse_integrator(integrator_name(kind)) == kind);
    CHECK_THROWS_AS(parse_integrator("leapfrog"), std::invalid_argument);
    CHECK(!is_volume_preserving(IntegratorKind::explicit_euler));
    CHECK(is_volume_preserving(IntegratorKind::ruth3));
}

TEST_CASE("fixed point divergence is reported") {
    // A stiff field makes the particle/field fixed point a contraction with factor > 1.
    ExternalField stiff([](double x) { return 400.0 * x; }, [](double) { return 400.0; });
    ParticleEnsemble e(1);
    e.x = {0.5};
    e.v = {0.0};
    e.f_like = {1.0};
    e.g_like = {1.0};
    try {
        push(IntegratorKind::implicit_midpoint, e, stiff, 0.5, Species{1.0, 1.0});
        FAIL("expected FixedPointDiverged");
    } catch (const FixedPointDiverged& err) {
        CHECK(err.iterations() == kFixedPointMaxIterations);
        CHECK(err.residual() > kFixedPointTolerance);
    }
}

}
