#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"

#include "qcp/field.hpp"
#include "qcp/ide.hpp"

using namespace qcp;

TEST_SUITE("field") {

TEST_CASE("bilinear sampling reproduces affine functions") {
    const auto f = Field2D::from_function(-1.0, -1.0, 0.1, 20, 20, Boundary::Clamped,
                                          [](double x, double y) { return 0.3 + 0.2 * x - 0.1 * y; });
    for (double x : {-0.95, -0.3, 0.0, 0.44})
        for (double y : {-0.77, 0.05, 0.8}) CHECK(f.sample(x, y) == doctest::Approx(0.3 + 0.2 * x - 0.1 * y));
}

TEST_CASE("periodic sampling wraps") {
    const auto f = Field2D::from_function(0.0, 0.0, 0.25, 8, 8, Boundary::Periodic,
                                          [](double x, double y) { return x + 10 * y; });
    CHECK(f.sample(0.5, 0.25) == doctest::Approx(f.sample(2.5, -1.75)));
}

TEST_CASE("clamped reads outside use the clamp value") {
    const auto f = Field2D::constant(0.0, 0.0, 0.5, 4, 4, Boundary::Clamped, 0.7, 0.1);
    CHECK(f.sample(-3.0, 0.5) == doctest::Approx(0.1));
}

TEST_CASE("csv round trip") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto f = Field2D::constant(-0.5, 0.25, 0.125, 5, 3, Boundary::Periodic, 0.0);
    for (double& v : f.values) v = U(gen);
    std::stringstream ss;
    write_field_csv(ss, f);
    const Field2D g = read_field_csv(ss);
    CHECK(g.nx == f.nx);
    CHECK(g.ny == f.ny);
    CHECK(g.x0 == f.x0);
    CHECK(g.spacing == f.spacing);
    CHECK(g.values == f.values);
}

}  // TEST_SUITE

TEST_SUITE("ide") {

TEST_CASE("constant fields follow the spatially constant map") {
    const Params p{0.9, 0.07};
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 5);
    const auto u = Field2D::constant(0.0, 0.0, 0.2, 20, 20, Boundary::Periodic, 0.42);
    const Field2D q = apply_Q_2d(u, dk, p);
    for (double v : q.values) CHECK(v == doctest::Approx(mean_field_map(p, 0.42)).epsilon(1e-13));
}

TEST_CASE("direct convolution oracle") {
    const Params p{1.0, 0.05};
    const DiscreteKernel dk = discretize(build_kernel(KernelSpec::truncated_gaussian(0.3, 0.6)), 5);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto u = Field2D::constant(0.0, 0.0, 0.2, 12, 10, Boundary::Periodic, 0.0);
    for (double& v : u.values) v = U(gen);
    const Field2D q = apply_Q_2d(u, dk, p);
    const int R = dk.reach();
    for (int j = 0; j < u.ny; ++j)
        for (int i = 0; i < u.nx; ++i) {
            double conv = 0.0;
            for (int dy = -R; dy <= R; ++dy)
                for (int dx = -R; dx <= R; ++dx) {
                    const double w = u.at(((i + dx) % u.nx + u.nx) % u.nx, ((j + dy) % u.ny + u.ny) % u.ny);
                    conv += dk.mass(dx, dy) * w * w;
                }
            const double v = u.at(i, j);
            CHECK(q.at(i, j) == doctest::Approx((1 - p.eta) * (v + p.beta * (1 - v) * conv)).epsilon(1e-12));
        }
}

TEST_CASE("thread count does not change results") {
    const Params p{1.0, 0.05};
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 10);
    const auto u = Field2D::from_function(-3, -3, 0.1, 60, 60, Boundary::Clamped, [](double x, double y) {
        return std::exp(-(x * x + 2 * y * y));
    });
    CHECK(apply_Q_2d(u, dk, p, 1).values == apply_Q_2d(u, dk, p, 3).values);
}

TEST_CASE("evolve taps") {
    const Params p{1.0, 0.05};
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(0.5), 4);
    const auto u = Field2D::constant(0.0, 0.0, 0.25, 8, 8, Boundary::Periodic, 0.6);
    const auto out = evolve(u, dk, p, 4, {0, 4, 2});
    REQUIRE(out.size() == 3);
    CHECK(out[0].values == u.values);
    CHECK(out[2].values == apply_Q_2d(apply_Q_2d(u, dk, p), dk, p).values);
    CHECK(out[1].values[0] == doctest::Approx(iterate_mean_field(p, 0.6, 4)).epsilon(1e-13));
}

TEST_CASE("incompatible grid spacing is rejected") {
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 10);
    CHECK_THROWS_AS(grid_kernel(dk, 0.07), std::invalid_argument);
    CHECK_NOTHROW(grid_kernel(dk, 0.05));
    CHECK_NOTHROW(grid_kernel(dk, 0.2));
}

TEST_CASE("Q preserves order of fields") {
    const Params p{0.7, 0.1};
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 5);
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto u = Field2D::constant(0.0, 0.0, 0.2, 15, 15, Boundary::Periodic, 0.0);
    auto v = u;
    for (std::size_t k = 0; k < u.values.size(); ++k) {
        u.values[k] = U(gen);
        v.values[k] = u.values[k] + (1 - u.values[k]) * U(gen);
    }
    const Field2D qu = apply_Q_2d(u, dk, p);
    const Field2D qv = apply_Q_2d(v, dk, p);
    for (std::size_t k = 0; k < u.values.size(); ++k) CHECK(qu.values[k] <= qv.values[k]);
}

}  // TEST_SUITE
