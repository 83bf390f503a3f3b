#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "vqmc/core.hpp"
#include "vqmc/errors.hpp"

using namespace vqmc;

TEST_SUITE("core") {

TEST_CASE("initial condition values") {
    CHECK(eval_initial_f({0.0, 0.7, 0.0, 1.0, 4.5}, 1.3, 0.0) == doctest::Approx(0.3989422804).epsilon(1e-10));
    CHECK(eval_initial_f(InitialCondition::landau(), 0.0, 0.0) == doctest::Approx(0.1994711402).epsilon(1e-10));
    CHECK(eval_initial_f(InitialCondition::landau(), 0.0, 60.0) == 0.0);
    CHECK(eval_initial_f(InitialCondition::bump_on_tail(), 1.0, -60.0) == 0.0);
}

TEST_CASE("initial condition integrates to the period length") {
    for (const auto& ic : {InitialCondition::landau(), InitialCondition::linear_landau(),
                           InitialCondition::bump_on_tail(), InitialCondition{0.9, 1.3, 0.3, 0.5, 2.0}}) {
        const double L = ic.period();
        const double total = oracle::integrate(
            [&](double x) {
                return oracle::integrate([&](double v) { return eval_initial_f(ic, x, v); }, -10.0, 10.0, 40);
            },
            0.0, L, 16);
        CHECK(std::abs(total - L) <= 1e-8);
    }
}

TEST_CASE("initial condition is periodic and nonnegative") {
    const InitialCondition ic{1.0, 0.5, 0.1, 0.3, 4.5};
    const double L = ic.period();
    for (double x = -3.0; x < 15.0; x += 0.37)
        for (double v = -8.0; v < 8.0; v += 0.53) {
            const double f = eval_initial_f(ic, x, v);
            CHECK(f >= 0.0);
            CHECK(std::abs(eval_initial_f(ic, x + L, v) - f) <= 1e-15);
            CHECK(std::abs(eval_initial_f(ic, x - L, v) - f) <= 1e-15);
        }
}

TEST_CASE("periodic wrap") {
    CHECK(wrap_periodic(-0.5, 0.0, 2.0) == doctest::Approx(1.5));
    CHECK(wrap_periodic(2.0, 0.0, 2.0) == 0.0);
    CHECK(wrap_periodic(5.25, 1.0, 2.0) == doctest::Approx(1.25));
    const double w = wrap_periodic(-1e-18, 0.0, 4.0 * std::numbers::pi);
    CHECK(w >= 0.0);
    CHECK(w < 4.0 * std::numbers::pi);
}

TEST_CASE("gridded density validation and layout") {
    const PhaseSpaceDomain d{0.0, 2.0, 0.0, 1.0};
    CHECK_THROWS_AS(GriddedDensity(d, 1, 4), std::invalid_argument);
    CHECK_THROWS_AS(GriddedDensity(d, 4, 4, std::vector<double>(15)), std::invalid_argument);
    CHECK_THROWS_AS(GriddedDensity(PhaseSpaceDomain{1.0, 1.0, 0.0, 1.0}, 4, 4), std::invalid_argument);
    GriddedDensity g(d, 4, 3);
    g(2, 1) = 7.0;
    CHECK(g.values()[2 * 3 + 1] == 7.0);
    CHECK(g.dx() == 0.5);
    CHECK(g.dv() == 0.5);
    CHECK(g.x_node(3) == 1.5);
    CHECK(g.v_node(2) == 1.0);
}

TEST_CASE("normalize to sampling density") {
    const PhaseSpaceDomain d{0.0, 2.0, 0.0, 1.0};
    SUBCASE("scaling") {
        GriddedDensity f(d, 4, 5);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 5; ++j) f(i, j) = 1.0 + 0.1 * i + 0.2 * j * j;
        const double m = f.trapezoid_mass();
        for (double& a : f.values()) a *= 2.0 / m;
        const GriddedDensity g = normalize_to_sampling_density(f);
        CHECK(std::abs(g.trapezoid_mass() - 1.0) <= 1e-12);
        for (std::size_t k = 0; k < f.values().size(); ++k)
            CHECK(g.values()[k] == doctest::Approx(f.values()[k] / 2.0).epsilon(1e-14));
        // Idempotent on unit-mass nonnegative input.
        const GriddedDensity gg = normalize_to_sampling_density(g);
        for (std::size_t k = 0; k < g.values().size(); ++k)
            CHECK(gg.values()[k] == doctest::Approx(g.values()[k]).epsilon(1e-14));
    }
    SUBCASE("absolute value") {
        GriddedDensity f(d, 4, 5, std::vector<double>(20, 1.0));
        f(1, 2) = -1.0;
        const GriddedDensity g = normalize_to_sampling_density(f);
        CHECK(g(1, 2) == g(0, 2));
        CHECK(g(1, 2) > 0.0);
    }
    SUBCASE("constant") {
        const GriddedDensity g = normalize_to_sampling_density(GriddedDensity(d, 8, 6, std::vector<double>(48, 3.0)));
        for (double a : g.values()) CHECK(a == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("all zero") {
        CHECK_THROWS_AS(normalize_to_sampling_density(GriddedDensity(d, 4, 4)), AllZeroDensity);
    }
}

TEST_CASE("bilinear interpolation of the grid") {
    const PhaseSpaceDomain d{0.0, 2.0, -1.0, 1.0};
    GriddedDensity g(d, 4, 5);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) g(i, j) = 3.0 + g.v_node(j); // linear in v, constant in x
    CHECK(g.interpolate(0.3, 0.25) == doctest::Approx(3.25));
    CHECK(g.interpolate(2.3, -0.75) == doctest::Approx(2.25));
    CHECK(g.interpolate(0.3, 1.5) == 0.0);
    CHECK(g.interpolate(1.0, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("particle weights") {
    ParticleEnsemble e(3);
    e.f_like = {0.2, 0.5, -0.01};
    e.g_like = {0.1, 0.5, 0.02};
    CHECK(weight(e, 0) == doctest::Approx(2.0));
    CHECK(weight(e, 1) == 1.0);
    CHECK(weight(e, 2) == doctest::Approx(-0.5));
    const auto w = weights(e);
    CHECK(w.size() == 3);
    CHECK(w[2] == doctest::Approx(-0.5));
}

TEST_CASE("diagnostics record total energy") {
    const DiagnosticsRecord r = make_record(1.0, Segment::pic, 0.25, 2.5, 12.0, -3.0);
    CHECK(r.total_energy == r.field_energy + r.kinetic_energy);
    CHECK(!r.star_disc);
    CHECK(segment_name(r.segment) == "pic");
}

TEST_CASE("error kinds") {
    CHECK(std::string(AllZeroDensity("x").kind()) == "AllZeroDensity");
    const FixedPointDiverged e(100, 0.5);
    CHECK(e.iterations() == 100);
    CHECK(std::string(e.kind()) == "FixedPointDiverged");
}

}
