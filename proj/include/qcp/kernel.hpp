#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qcp/rng.hpp"

namespace qcp {

enum class KernelFamily { UniformSquare, TruncatedGaussian, Table };

/// Continuous description of the dispersal kernel k. Every family is
/// symmetric under x1 -> -x1 and x2 -> -x2 and compactly supported.
///
///  - UniformSquare: density 1/(4 radius^2) on [-radius, radius]^2.
///  - TruncatedGaussian: isotropic Gaussian with scale `sigma`, restricted to
///    the disk |x| <= radius and renormalized.
///  - Table: point masses `table[j][i]` at ((i - n) * spacing, (j - n) * spacing)
///    for an odd (2n+1) x (2n+1) table.
struct KernelSpec {
    KernelFamily family = KernelFamily::UniformSquare;
    double radius = 1.0;
    double sigma = 1.0;
    double spacing = 1.0;
    std::vector<std::vector<double>> table;

    static KernelSpec uniform_square(double radius);
    static KernelSpec truncated_gaussian(double sigma, double cutoff);
    static KernelSpec point_mass();
    static KernelSpec from_table(double spacing, std::vector<std::vector<double>> weights);
};

/// Validate a spec and normalize table weights to sum 1. Throws
/// std::invalid_argument for non-positive/non-finite parameters, empty or
/// even-sized tables, negative weights, or tables that are not symmetric
/// under either axis reflection.
KernelSpec build_kernel(KernelSpec spec);

/// Density of a continuous family at x. Table kernels have no density.
double kernel_density(const KernelSpec& spec, double x, double y);

/// Diameter of the support of k (continuous description).
double kernel_support_diameter(const KernelSpec& spec);

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

struct Offset {
    int dx = 0;
    int dy = 0;
    friend bool operator==(const Offset&, const Offset&) = default;
};

/// k_L: kernel restricted to the lattice Z^2/L. Offsets are in lattice units.
/// Masses sum to 1 and are exactly symmetric under both axis reflections.
class DiscreteKernel {
public:
    DiscreteKernel() = default;
    DiscreteKernel(int resolution, int reach, std::vector<double> dense);

    int resolution() const noexcept { return resolution_; }
    /// Max |dx| or |dy| of any stored offset.
    int reach() const noexcept { return reach_; }
    double mass(int dx, int dy) const noexcept {
        if (dx < -reach_ || dx > reach_ || dy < -reach_ || dy > reach_) return 0.0;
        return dense_[index(dx, dy)];
    }
    std::span<const Offset> offsets() const noexcept { return offsets_; }
    std::span<const double> masses() const noexcept { return masses_; }
    /// Max distance between two offsets of nonzero mass, in spatial units.
    double support_diameter() const noexcept { return diameter_; }

    /// Draw an offset distributed per the masses (alias method, two draws).
    template <class Rng>
    Offset sample(Rng& rng) const {
        const std::uint64_t n = alias_prob_.size();
        const auto i = static_cast<std::size_t>(
            (static_cast<unsigned __int128>(rng()) * n) >> 64);
        const double u = to_unit(rng());
        return offsets_[u < alias_prob_[i] ? i : alias_[i]];
    }

private:
    std::size_t index(int dx, int dy) const noexcept {
        const auto w = static_cast<std::size_t>(2 * reach_ + 1);
        return static_cast<std::size_t>(dy + reach_) * w + static_cast<std::size_t>(dx + reach_);
    }
    void build_alias();

    int resolution_ = 1;
    int reach_ = 0;
    std::vector<double> dense_;
    std::vector<Offset> offsets_;
    std::vector<double> masses_;
    std::vector<double> alias_prob_;
    std::vector<std::uint32_t> alias_;
    double diameter_ = 0.0;
};

/// Voronoi-cell discretization at L points per unit length. Cells are
/// half-open [y - 1/2L, y + 1/2L) per coordinate. Uniform squares integrate
/// exactly; Gaussians use a 4x4 midpoint rule per cell; table atoms go to the
/// cell containing them. The result is symmetrized and renormalized.
DiscreteKernel discretize(const KernelSpec& spec, int L);

template <class Rng>
Offset sample_offset(const DiscreteKernel& dk, Rng& rng) {
    return dk.sample(rng);
}

/// Line marginal of a discrete kernel: mass at m * spacing is the kernel mass
/// with (w . direction) in [m*spacing - spacing/2, m*spacing + spacing/2).
struct Kernel1D {
    double spacing = 1.0;
    int reach = 0;
    std::vector<double> masses;  ///< index m + reach, m in [-reach, reach]

    double at(int m) const noexcept {
        return (m < -reach || m > reach) ? 0.0 : masses[static_cast<std::size_t>(m + reach)];
    }
};

struct Direction {
    double x = 1.0;
    double y = 0.0;
    static Direction from_degrees(double deg);
    double degrees() const;
};

Kernel1D marginal_1d(const DiscreteKernel& dk, Direction dir, double spacing);
Kernel1D point_mass_1d(double spacing);

void write_kernel_csv(std::ostream& os, const DiscreteKernel& dk);

}  // namespace qcp
