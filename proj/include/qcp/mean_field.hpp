#pragma once

#include <vector>

namespace qcp {

/// Per-step birth attempt probability (beta) and death probability (eta).
struct Params {
    double beta = 1.0;
    double eta = 0.05;

    /// beta (1 - eta) > 4 eta: the spatially constant map has two nonzero
    /// fixed points.
    bool bistable() const noexcept { return beta * (1.0 - eta) > 4.0 * eta; }
};

/// Throws std::invalid_argument unless 0 <= beta, eta <= 1.
void validate(const Params& p);

/// One step of the spatially constant recursion v -> (1-eta)[v + beta(1-v)v^2].
double mean_field_map(const Params& p, double v) noexcept;
double mean_field_map_derivative(const Params& p, double v) noexcept;

enum class Stability { Stable, Unstable };

struct FixedPoint {
    double value = 0.0;
    Stability stability = Stability::Stable;
};

/// Fixed points in [0, 1] in increasing order; always starts with 0. When
/// bistable the list is {0, rho_u, rho_s}; at the threshold the double root
/// 1/2 is reported once.
struct Equilibria {
    std::vector<FixedPoint> roots;

    bool has_nontrivial() const noexcept { return roots.size() > 1; }
    double rho_u() const;
    double rho_s() const;
};

Equilibria equilibria(const Params& p);

/// Iterate the spatially constant map n times from v0.
double iterate_mean_field(const Params& p, double v0, int n);

/// Trajectory v_0, ..., v_n.
std::vector<double> mean_field_trace(const Params& p, double v0, int n);

}  // namespace qcp
