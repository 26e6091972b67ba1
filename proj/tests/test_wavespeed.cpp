#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "qcp/ide.hpp"
#include "qcp/wavespeed.hpp"

using namespace qcp;

namespace {

const Params kP{1.0, 0.05};

const DiscreteKernel& dk10() {
    static const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 10);
    return dk;
}

}  // namespace

TEST_SUITE("wavespeed") {

TEST_CASE("psi shape") {
    const PsiSpec spec{0.5, 2.0};
    const Profile1D psi = make_psi(spec, kP, 0.1, -5.0, 5.0);
    CHECK(psi(-3.0) == doctest::Approx(0.5));
    CHECK(psi(-1.0) == doctest::Approx(0.25));
    CHECK(psi(0.5) == 0.0);
    CHECK(psi.nonincreasing());
    CHECK_THROWS_AS(make_psi(PsiSpec{0.99, 1.0}, kP, 0.1, -5, 5), std::invalid_argument);
}

TEST_CASE("weinberger step is monotone in its argument") {
    const Kernel1D k1 = marginal_1d(dk10(), Direction::from_degrees(0.0), 0.1);
    const Profile1D psi = make_psi(default_psi(kP, dk10().support_diameter()), kP, 0.1, -30, 30);
    Profile1D lo = psi, hi = psi;
    for (std::size_t i = 0; i < hi.size(); ++i) hi.values[i] = std::min(0.9, psi.values[i] + 0.1);
    const Profile1D a = weinberger_step(lo, 0.1, k1, kP, psi);
    const Profile1D b = weinberger_step(hi, 0.1, k1, kP, psi);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.values[i] <= b.values[i]);
        CHECK(a.values[i] >= psi.values[i]);
    }
}

TEST_CASE("classification far from c*") {
    const Direction d = Direction::from_degrees(0.0);
    CHECK(classify_speed(-0.5, d, dk10(), kP) == SpeedClass::BelowCstar);
    CHECK(classify_speed(1.0, d, dk10(), kP) == SpeedClass::AtOrAbove);
    CHECK_THROWS_AS(classify_speed(0.0, d, dk10(), Params{0.2, 0.2}), std::invalid_argument);
}

TEST_CASE("point-mass kernel gives a standing front") {
    // With no spatial spread every site follows the scalar map, so nothing
    // invades from either side: c* = 0.
    const DiscreteKernel pm = discretize(KernelSpec::point_mass(), 10);
    const SpeedResult r = estimate_cstar(Direction::from_degrees(0.0), pm, kP, 0.02);
    CHECK(r.c_lo <= 0.0);
    CHECK(r.c_hi >= 0.0);
    CHECK(r.c_hi - r.c_lo <= 0.02 + 1e-12);
}

TEST_CASE("bracket contract") {
    const SpeedResult r = estimate_cstar(Direction::from_degrees(90.0), dk10(), kP, 0.02);
    CHECK(r.c_hi - r.c_lo <= 0.02 + 1e-12);
    CHECK(r.c_lo <= r.c_star);
    CHECK(r.c_star <= r.c_hi);
    for (const auto& [c, cls] : r.trace) {
        if (c <= r.c_lo) CHECK(cls == SpeedClass::BelowCstar);
        if (c >= r.c_hi) CHECK(cls == SpeedClass::AtOrAbove);
    }
    SpeedOptions two;
    two.threads = 2;
    const SpeedResult r2 = estimate_cstar(Direction::from_degrees(90.0), dk10(), kP, 0.02, two);
    CHECK(r2.c_star == r.c_star);
}

TEST_CASE("triangle normals") {
    CHECK_NOTHROW(validate_triangle_normals(default_normals()));
    CHECK_THROWS_AS(validate_triangle_normals({Direction::from_degrees(0), Direction::from_degrees(80),
                                               Direction::from_degrees(220)}),
                    std::invalid_argument);
}

TEST_CASE("phi construction") {
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 20);
    const PhiData phi = build_phi(default_normals(), dk, kP);
    const Equilibria eq = equilibria(kP);
    CHECK(phi.phi.nonincreasing());
    CHECK(phi.alpha > eq.rho_u());
    CHECK(phi.alpha <= eq.rho_s() + 1e-12);
    CHECK(phi.phi.right_limit == 0.0);
    CHECK(phi.m < phi.M);
    CHECK(phi.l == doctest::Approx(phi.M - phi.m));
    CHECK(phi.c == doctest::Approx(0.5 * std::min({phi.alphas[0], phi.alphas[1], phi.alphas[2]})));
    // phi(s - c) <= Q_i[phi](s) in every direction, and Q_i[phi] crosses
    // from alpha to 0 inside [m, M].
    for (int i = 0; i < 3; ++i) {
        const Profile1D q = apply_Q_1d(phi.phi, phi.marginals[static_cast<std::size_t>(i)], kP);
        CHECK(q(phi.m) >= phi.alpha - 1e-6);
        CHECK(q(phi.M) <= 1e-6);
        for (double s = phi.m - 3; s < phi.M + 3; s += 0.05) CHECK(phi.phi(s - phi.c) <= q(s) + 1e-6);
    }
}

}  // TEST_SUITE
