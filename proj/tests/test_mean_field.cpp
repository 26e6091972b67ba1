#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"

#include "qcp/mean_field.hpp"

using namespace qcp;

TEST_SUITE("mean_field") {

TEST_CASE("nonzero roots solve v^2 - v + eta / (beta (1 - eta)) = 0") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int tried = 0;
    while (tried < 50) {
        const Params p{U(gen), 0.3 * U(gen)};
        if (!p.bistable()) continue;
        ++tried;
        const double q = p.eta / (p.beta * (1.0 - p.eta));
        const double disc = std::sqrt(1.0 - 4.0 * q);
        const Equilibria eq = equilibria(p);
        REQUIRE(eq.roots.size() == 3);
        CHECK(eq.roots[0].value == 0.0);
        CHECK(eq.rho_u() == doctest::Approx(0.5 * (1.0 - disc)).epsilon(1e-9));
        CHECK(eq.rho_s() == doctest::Approx(0.5 * (1.0 + disc)).epsilon(1e-12));
        CHECK(eq.roots[0].stability == Stability::Stable);
        CHECK(eq.roots[1].stability == Stability::Unstable);
        CHECK(eq.roots[2].stability == Stability::Stable);
    }
}

TEST_CASE("below threshold only zero survives") {
    const Equilibria eq = equilibria(Params{0.3, 0.2});
    REQUIRE(eq.roots.size() == 1);
    CHECK(!eq.has_nontrivial());
    CHECK_THROWS(eq.rho_u());
}

TEST_CASE("threshold double root") {
    const Equilibria eq = equilibria(Params{1.0, 0.2});
    REQUIRE(eq.roots.size() == 2);
    CHECK(eq.roots[1].value == 0.5);
}

TEST_CASE("iterates separate at rho_u") {
    const Params p{1.0, 0.05};
    const Equilibria eq = equilibria(p);
    CHECK(iterate_mean_field(p, eq.rho_u() - 1e-3, 2000) < 1e-12);
    CHECK(iterate_mean_field(p, eq.rho_u() + 1e-3, 2000) == doctest::Approx(eq.rho_s()).epsilon(1e-12));
    const auto tr = mean_field_trace(p, 0.6, 10);
    REQUIRE(tr.size() == 11);
    CHECK(tr[0] == 0.6);
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] == mean_field_map(p, tr[i - 1]));
}

TEST_CASE("derivative agrees with finite differences") {
    const Params p{0.8, 0.1};
    for (double v : {0.1, 0.4, 0.9}) {
        const double h = 1e-6;
        const double fd = (mean_field_map(p, v + h) - mean_field_map(p, v - h)) / (2 * h);
        CHECK(mean_field_map_derivative(p, v) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(validate(Params{1.5, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Params{0.5, -0.1}), std::invalid_argument);
    CHECK_NOTHROW(validate(Params{1.0, 0.0}));
}

}  // TEST_SUITE
