#pragma once

#include <vector>

#include "qcp/field.hpp"
#include "qcp/kernel.hpp"
#include "qcp/mean_field.hpp"

namespace qcp {

/// Discrete kernel re-expressed in grid-node offsets of a field with a given
/// spacing. Either the kernel lattice is a refinement of the grid (offsets are
/// binned to the nearest node, ties away from zero) or the grid refines the
/// kernel lattice (offsets land on nodes). Anything else is incompatible.
struct GridKernel {
    struct Row {
        int dy = 0;
        std::vector<int> dx;
        std::vector<double> mass;
    };
    std::vector<Row> rows;
    int reach_x = 0;
    int reach_y = 0;
};

GridKernel grid_kernel(const DiscreteKernel& dk, double spacing);

/// Q[u] = (1 - eta)[u + beta (1 - u)(k * u^2)] with
/// (k * u^2)(x) = sum_w k(w) u(x + w)^2 under the field's boundary mode.
/// Output rows are independent, so `threads` only changes wall time.
Field2D apply_Q_2d(const Field2D& u, const DiscreteKernel& dk, const Params& p,
                   int threads = 1);
Field2D apply_Q_2d(const Field2D& u, const GridKernel& gk, const Params& p, int threads = 1);

/// Plane-wave reduction: the same operator with the line marginal. Limits are
/// mapped through the spatially constant recursion.
Profile1D apply_Q_1d(const Profile1D& f, const Kernel1D& k1, const Params& p);

/// Iterate Q n times; returns the iterates at the requested tap times
/// (each in [0, n], in the order given).
std::vector<Field2D> evolve(const Field2D& u0, const DiscreteKernel& dk, const Params& p, int n,
                            const std::vector<int>& taps, int threads = 1);

}  // namespace qcp
