#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "doctest.h"

#include "qcp/kernel.hpp"
#include "qcp/rng.hpp"

using namespace qcp;

TEST_SUITE("kernel") {

TEST_CASE("uniform square cells integrate exactly") {
    const int L = 8;
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), L);
    CHECK(dk.reach() == L);
    // Density 1/4 on [-1, 1]^2: interior cells carry (1/L)^2 / 4, edge cells
    // half of that, corners a quarter.
    const double cell = 0.25 / (L * L);
    for (int dy = -L; dy <= L; ++dy)
        for (int dx = -L; dx <= L; ++dx) {
            const double fx = std::abs(dx) == L ? 0.5 : 1.0;
            const double fy = std::abs(dy) == L ? 0.5 : 1.0;
            CHECK(dk.mass(dx, dy) == doctest::Approx(cell * fx * fy).epsilon(1e-12));
        }
    double total = 0.0;
    for (double m : dk.masses()) total += m;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(dk.support_diameter() == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("discretized kernels are reflection symmetric") {
    for (const KernelSpec& ks : {KernelSpec::uniform_square(0.7), KernelSpec::truncated_gaussian(0.4, 1.1)}) {
        const DiscreteKernel dk = discretize(build_kernel(ks), 13);
        for (int dy = -dk.reach(); dy <= dk.reach(); ++dy)
            for (int dx = -dk.reach(); dx <= dk.reach(); ++dx) {
                CHECK(dk.mass(dx, dy) == dk.mass(-dx, dy));
                CHECK(dk.mass(dx, dy) == dk.mass(dx, -dy));
            }
    }
}

TEST_CASE("point mass") {
    const DiscreteKernel dk = discretize(KernelSpec::point_mass(), 50);
    CHECK(dk.mass(0, 0) == 1.0);
    CHECK(dk.support_diameter() == 0.0);
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(build_kernel(KernelSpec::uniform_square(0.0)), std::invalid_argument);
    CHECK_THROWS_AS(build_kernel(KernelSpec::uniform_square(-1.0)), std::invalid_argument);
    CHECK_THROWS_AS(build_kernel(KernelSpec::truncated_gaussian(-0.1, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(build_kernel(KernelSpec::from_table(1.0, {{1.0, 2.0}, {3.0, 4.0}})), std::invalid_argument);
    CHECK_THROWS_AS(build_kernel(KernelSpec::from_table(1.0, {{0, 1, 0}, {0, 1, 2}, {0, 1, 0}})),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_kernel(KernelSpec::from_table(1.0, {{0, -1, 0}, {0, 1, 0}, {0, -1, 0}})),
                    std::invalid_argument);
    CHECK_THROWS_AS(kernel_family_from_string("cauchy"), std::invalid_argument);
}

TEST_CASE("table weights are normalized") {
    const KernelSpec k = build_kernel(KernelSpec::from_table(0.5, {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}}));
    const DiscreteKernel dk = discretize(k, 2);
    CHECK(dk.mass(0, 0) == doctest::Approx(0.25));
    CHECK(dk.mass(1, 1) == doctest::Approx(1.0 / 16));
    CHECK(dk.mass(1, 0) == doctest::Approx(0.125));
}

TEST_CASE("axis marginal sums kernel columns") {
    const DiscreteKernel dk = discretize(build_kernel(KernelSpec::truncated_gaussian(0.5, 1.0)), 6);
    const Kernel1D k1 = marginal_1d(dk, Direction::from_degrees(0.0), 1.0 / 6);
    CHECK(k1.reach == dk.reach());
    for (int m = -dk.reach(); m <= dk.reach(); ++m) {
        double col = 0.0;
        for (int dy = -dk.reach(); dy <= dk.reach(); ++dy) col += dk.mass(m, dy);
        CHECK(k1.at(m) == doctest::Approx(col).epsilon(1e-13));
    }
}

TEST_CASE("marginals of opposite directions coincide") {
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 10);
    for (double a : {0.0, 30.0, 45.0, 100.0}) {
        const Kernel1D f = marginal_1d(dk, Direction::from_degrees(a), 0.05);
        const Kernel1D g = marginal_1d(dk, Direction::from_degrees(a + 180.0), 0.05);
        CHECK(f.masses == g.masses);
        for (int m = 0; m <= f.reach; ++m) CHECK(f.at(m) == f.at(-m));
    }
}

TEST_CASE("alias sampling matches masses") {
    const DiscreteKernel dk = discretize(build_kernel(KernelSpec::from_table(1.0, {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}})), 1);
    CounterRng rng(derive_key(7, 1));
    std::map<std::pair<int, int>, int> hits;
    const int n = 160000;
    for (int i = 0; i < n; ++i) {
        const Offset o = dk.sample(rng);
        ++hits[{o.dx, o.dy}];
    }
    for (const auto& [off, count] : hits) {
        const double p = dk.mass(off.first, off.second);
        const double sd = std::sqrt(n * p * (1 - p));
        CHECK(std::abs(count - n * p) < 5 * sd);
    }
}

}  // TEST_SUITE
