#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qcp/field.hpp"
#include "qcp/kernel.hpp"
#include "qcp/mean_field.hpp"

namespace qcp {

/// Occupancy of the torus window [ox, ox + W) x [oy, oy + W) of Z^2/L.
/// Site (i, j) sits at (ox + i/L, oy + j/L); rows are packed 64 sites per word.
class LatticeState {
public:
    LatticeState() = default;
    LatticeState(int L, int W, double origin_x = 0.0, double origin_y = 0.0);

    int L() const noexcept { return L_; }
    int W() const noexcept { return W_; }
    int N() const noexcept { return N_; }  ///< sites per side, W * L
    double origin_x() const noexcept { return ox_; }
    double origin_y() const noexcept { return oy_; }
    long time() const noexcept { return n_; }
    void set_time(long n) noexcept { n_ = n; }

    bool get(int i, int j) const noexcept {
        return (rows_[word(i, j)] >> (static_cast<unsigned>(i) & 63u)) & 1u;
    }
    void set(int i, int j, bool v) noexcept {
        const std::uint64_t bit = std::uint64_t{1} << (static_cast<unsigned>(i) & 63u);
        if (v) rows_[word(i, j)] |= bit;
        else rows_[word(i, j)] &= ~bit;
    }
    double x(int i) const noexcept { return ox_ + static_cast<double>(i) / L_; }
    double y(int j) const noexcept { return oy_ + static_cast<double>(j) / L_; }

    std::size_t count() const noexcept;
    double density() const noexcept;

    int words_per_row() const noexcept { return wpr_; }
    const std::uint64_t* row(int j) const noexcept { return &rows_[static_cast<std::size_t>(j) * wpr_]; }
    std::uint64_t* row(int j) noexcept { return &rows_[static_cast<std::size_t>(j) * wpr_]; }

    friend bool operator==(const LatticeState& a, const LatticeState& b) {
        return a.L_ == b.L_ && a.W_ == b.W_ && a.rows_ == b.rows_;
    }
    /// Sitewise a <= b.
    friend bool dominated_by(const LatticeState& a, const LatticeState& b);

private:
    std::size_t word(int i, int j) const noexcept {
        return static_cast<std::size_t>(j) * wpr_ + (static_cast<unsigned>(i) >> 6);
    }
    int L_ = 1;
    int W_ = 1;
    int N_ = 1;
    int wpr_ = 1;
    double ox_ = 0.0;
    double oy_ = 0.0;
    long n_ = 0;
    std::vector<std::uint64_t> rows_;
};

enum class InitMode { AllOnes, Product, FiniteSet, FromField };

struct InitSpec {
    InitMode mode = InitMode::AllOnes;
    double p = 0.5;                                  ///< Product
    std::vector<std::pair<double, double>> points;  ///< FiniteSet, spatial coordinates
    Field2D field;                                   ///< FromField, sampled bilinearly
    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument for FiniteSet points outside the window or
/// Product probabilities outside [0, 1].
LatticeState init(const InitSpec& spec, int L, int W, double origin_x = 0.0,
                  double origin_y = 0.0);

/// Box side in sites: round(L^(1 - gamma)), at least 1. Rejects gamma outside
/// (0, 1/2).
int box_side(int L, double gamma);

/// Where the first parent's kernel is centered: at the site itself (xi), or at
/// the bottom-left corner x* of the site's box (the modified process xi-hat).
struct Anchor {
    enum Kind { Site, BoxCorner } kind = Site;
    double gamma = 0.3;

    static Anchor site() { return {Site, 0.3}; }
    static Anchor box_corner(double gamma) { return {BoxCorner, gamma}; }
};

struct StepOptions {
    Anchor anchor;
    int threads = 1;
    /// Fill StepReport::expected / K (costs one kernel sum per box).
    bool report_expectation = false;
    double gamma = 0.3;  ///< box scale for the expectation report
};

struct StepReport {
    std::uint64_t births_attempted = 0;  ///< vacant sites whose birth coin came up
    std::uint64_t births = 0;
    std::uint64_t deaths = 0;
    /// Per box (row-major over complete boxes) when requested:
    /// K_L(x*) = sum_y k_L(y - x*) xi(y) (1/4) sum_{z~y} xi(z), and the one-step
    /// expected density (1 - eta)[S/m + beta (1 - S/m) K_L].
    std::vector<double> K;
    std::vector<double> expected;
};

/// One synchronous step. Births are read from the time-n configuration; every
/// particle, newborn or not, then dies with probability eta. All randomness is
/// keyed by (seed, time, site) or (seed, time, row), so the result does not
/// depend on the thread count. dk must have resolution L.
StepReport step(LatticeState& s, const DiscreteKernel& dk, const Params& p, std::uint64_t seed,
                const StepOptions& opt = {});

struct BoxStats {
    double gamma = 0.3;
    int side = 1;      ///< sites per box side
    long m = 1;        ///< sites per box
    int nbx = 0;       ///< complete boxes per row
    int nby = 0;
    double box_len = 1.0;  ///< side / L
    double ox = 0.0;
    double oy = 0.0;
    std::vector<long> S;       ///< particles per box
    std::vector<long> pairs2;  ///< 2 R: adjacent occupied pairs with both sites in the box

    std::size_t boxes() const noexcept { return S.size(); }
    std::size_t index(int bx, int by) const noexcept {
        return static_cast<std::size_t>(by) * nbx + bx;
    }
    double density(std::size_t b) const noexcept { return static_cast<double>(S[b]) / m; }
    double R(std::size_t b) const noexcept { return 0.5 * static_cast<double>(pairs2[b]); }
    /// Bottom-left corner x* of box (bx, by).
    double corner_x(int bx) const noexcept { return ox + bx * box_len; }
    double corner_y(int by) const noexcept { return oy + by * box_len; }
};

/// Per-box counts on the grid of complete b x b boxes anchored at the window
/// origin (boxes cut by the torus seam are left out).
BoxStats box_stats(const LatticeState& s, double gamma);

/// One coupled step of xi (site anchor) and xi-hat (box-corner anchor) from
/// the same state: shared birth coins, maximal coupling of the first parent,
/// shared deaths. Returns the fraction of sites where the two disagree,
/// averaged over seeds.
double coupling_discrepancy(const LatticeState& s0, const DiscreteKernel& dk, const Params& p,
                            double gamma, const std::vector<std::uint64_t>& seeds,
                            int threads = 1);

}  // namespace qcp
