#include "qcp/mean_field.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qcp {

namespace {
constexpr double kStabilityTol = 1e-9;

Stability classify(const Params& p, double v) {
    return std::abs(mean_field_map_derivative(p, v)) < 1.0 - kStabilityTol ? Stability::Stable
                                                                            : Stability::Unstable;
}
}  // namespace

void validate(const Params& p) {
    if (!(p.beta >= 0.0 && p.beta <= 1.0))
        throw std::invalid_argument("beta must lie in [0, 1]");
    if (!(p.eta >= 0.0 && p.eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
}

double mean_field_map(const Params& p, double v) noexcept {
    return (1.0 - p.eta) * (v + p.beta * (1.0 - v) * v * v);
}

double mean_field_map_derivative(const Params& p, double v) noexcept {
    return (1.0 - p.eta) * (1.0 + p.beta * (2.0 * v - 3.0 * v * v));
}

double Equilibria::rho_u() const {
    if (roots.size() < 2) throw std::logic_error("no nontrivial equilibria");
    return roots[1].value;
}

double Equilibria::rho_s() const {
    if (roots.size() < 2) throw std::logic_error("no nontrivial equilibria");
    return roots.back().value;
}

Equilibria equilibria(const Params& p) {
    validate(p);
    Equilibria eq;
    eq.roots.push_back({0.0, classify(p, 0.0)});
    if (p.beta <= 0.0 || p.eta >= 1.0) return eq;

    // Nonzero roots solve v(1 - v) = eta / (beta (1 - eta)).
    const double denom = p.beta * (1.0 - p.eta);
    const double disc = (denom - 4.0 * p.eta) / denom;
    // Within a few ulps of zero the two roots are numerically one tangent root.
    if (std::abs(disc) <= 8.0 * std::numeric_limits<double>::epsilon()) {
        eq.roots.push_back({0.5, classify(p, 0.5)});
        return eq;
    }
    if (disc < 0.0) return eq;
    const double sq = std::sqrt(disc);
    // rho_u = (1 - sq)/2 is computed as eta' / rho_s to avoid cancellation.
    const double rho_s = 0.5 * (1.0 + sq);
    const double rho_u = (p.eta / denom) / rho_s;
    if (rho_u > 0.0) eq.roots.push_back({rho_u, classify(p, rho_u)});
    eq.roots.push_back({rho_s, classify(p, rho_s)});
    return eq;
}

double iterate_mean_field(const Params& p, double v0, int n) {
    if (!(v0 >= 0.0 && v0 <= 1.0)) throw std::invalid_argument("v0 must lie in [0, 1]");
    double v = v0;
    for (int i = 0; i < n; ++i) v = mean_field_map(p, v);
    return v;
}

std::vector<double> mean_field_trace(const Params& p, double v0, int n) {
    if (!(v0 >= 0.0 && v0 <= 1.0)) throw std::invalid_argument("v0 must lie in [0, 1]");
    std::vector<double> out{v0};
    out.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i) out.push_back(mean_field_map(p, out.back()));
    return out;
}

}  // namespace qcp
