#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qcp/comparison.hpp"
#include "qcp/field.hpp"
#include "qcp/kernel.hpp"
#include "qcp/mean_field.hpp"

namespace qcp {

/// Throws std::invalid_argument on repeated seeds.
void check_distinct_seeds(const std::vector<std::uint64_t>& seeds);

// ------------------------------------------------------------ hydro

struct HydroConfig {
    Params params{1.0, 0.05};
    KernelSpec kernel = KernelSpec::uniform_square(1.0);
    std::vector<int> Ls{50, 100, 200, 400};
    double gamma = 0.3;
    int W = 2;             ///< torus side; window [-W/2, W/2)^2
    double K = 0.5;        ///< boxes with corner in [-K, K]^2 are scored
    int steps = 5;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4};
    int groups = 10;       ///< group g uses seeds offset by g * 1000003
    int ide_resolution = 50;  ///< reference IDE grid spacing 1/ide_resolution
    int threads = 1;
};

/// 0.7 + 0.05 cos(pi x) cos(pi y) on the default torus.
Field2D default_hydro_u0(const HydroConfig& cfg);

struct HydroRow {
    int group = 0;
    int L = 0;
    double err_S = 0.0;  ///< seed average of sup_boxes |S/m - u_n(x*)|
    double err_R = 0.0;  ///< seed average of sup_boxes |R/m - u_n(x*)^2|
    int side = 0;
};

struct HydroResult {
    std::vector<HydroRow> rows;  ///< group-major, L ascending
    int decreasing_groups = 0;   ///< groups whose max(err_S, err_R) strictly decreases in L
};

/// Throws std::invalid_argument when [-K, K + box] does not fit in the window.
HydroResult hydro_convergence(const HydroConfig& cfg, const Field2D& u0);

// ------------------------------------------------------------ one-step moments

struct MomentConfig {
    Params params{1.0, 0.05};
    KernelSpec kernel = KernelSpec::uniform_square(1.0);
    int L = 100;
    int W = 4;
    double gamma = 0.3;
    double p0 = 0.7;  ///< product initial state, drawn once
    int seeds = 200;
    std::uint64_t base_seed = 1;
    int threads = 1;
};

struct MomentResult {
    std::size_t boxes = 0;
    double max_abs_z = 0.0;  ///< max over boxes of |mean S - E S| / (sd / sqrt(seeds))
    /// max over boxes of (sample var - C m) / se(var), se from the sample
    /// fourth moment; the bound holds at 3 sigma when this is <= 3.
    double max_var_excess_z = 0.0;
    double C = 1.0;
    std::size_t boxes_mean_ok = 0;  ///< |z| <= 4
    std::size_t boxes_var_ok = 0;
};

/// One step of the box-corner-anchored process from a fixed product state,
/// compared with the closed-form conditional mean and the C m variance bound.
MomentResult one_step_moments(const MomentConfig& cfg);

// ------------------------------------------------------------ growth from a block

struct GrowthConfig {
    Params params{1.0, 0.05};
    KernelSpec kernel = KernelSpec::uniform_square(1.0);
    int kernel_resolution = 20;
    double spacing = 0.25;
    double K = 0.0;      ///< 0: 5 d(k)
    double delta = 0.0;  ///< 0: (rho_s - rho_u) / 8
    double y_margin = 0.0;  ///< 0: 3 K
    int n_max = 3000;
    int hold = 100;  ///< steps past N_K that must also pass
    int threads = 1;
};

struct GrowthResult {
    double K = 0.0;
    double delta = 0.0;
    int N = -1;  ///< first n with u_n > rho_s - delta on the slab; -1 if none
    bool holds = false;  ///< condition true for every n in [N, N + hold]
    double slab_min_at_N = 0.0;
    double slab_min_final = 0.0;
};

/// u0 = (rho_u + delta) on [-K, K]^2 and 0 elsewhere on a clamped grid (the
/// clamp value 0 makes the run a lower bound for the whole-plane solution).
GrowthResult block_growth(const GrowthConfig& cfg);

// ------------------------------------------------------------ block goodness

struct BlockConfig {
    Params params{1.0, 0.05};
    KernelSpec kernel = KernelSpec::uniform_square(1.0);
    int L = 40;
    double gamma = 0.3;
    double K = 2.0;
    double delta = 0.0;  ///< 0: (rho_s - rho_u) / 8
    int N = 30;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
    /// Goodness threshold; defaults to rho_u + 2 delta and is required when
    /// the parameters are not bistable.
    std::optional<double> threshold;
    int threads = 1;
};

struct BlockResult {
    double threshold = 0.0;
    int trials = 0;
    int successes = 0;
    double p_hat = 0.0;  ///< estimate of 1 - epsilon
    double ci_lo = 0.0;  ///< 95% Wilson interval
    double ci_hi = 0.0;
};

/// Start with I_0 = [-K, K]^2 filled at density rho_s (product measure, every
/// box of I_0 checked good) and nothing elsewhere; after N steps record
/// whether every box of I_1 = 2K e_1 + I_0 and I_-1 is good.
BlockResult block_goodness(const BlockConfig& cfg);

// ------------------------------------------------------------ phase scan

enum class ScanInit { AllOnes, FiniteSquare };
std::string to_string(ScanInit s);

struct PhaseScanConfig {
    std::vector<double> betas;
    std::vector<double> etas;
    KernelSpec kernel = KernelSpec::uniform_square(1.0);
    int L = 10;
    int W = 8;
    int horizon = 500;
    ScanInit init = ScanInit::AllOnes;
    double square_side = 2.0;  ///< FiniteSquare, spatial units, centered
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    int threads = 1;
};

struct PhaseCell {
    double beta = 0.0;
    double eta = 0.0;
    int survived = 0;
    int trials = 0;
    double freq = 0.0;
    double floor = 0.0;  ///< AllOnes survival floor (rho_u / 2, or 1/4 if not bistable)
};

struct PhaseScanResult {
    std::vector<PhaseCell> cells;  ///< eta-major, beta ascending
    /// Per eta: smallest beta on the grid with freq >= 1/2 (NaN if none).
    std::vector<double> thresholds;
    /// Largest number of sites (over cells and seeds) where the run at a
    /// smaller beta was occupied and the next beta was not, at any step.
    std::size_t coupling_violations = 0;
};

/// Same seeds for every beta, so runs are sitewise ordered in beta.
PhaseScanResult phase_scan(const PhaseScanConfig& cfg);

// ------------------------------------------------------------ error rate

struct ErrorRateConfig {
    Params params{1.0, 0.05};
    KernelSpec kernel = KernelSpec::uniform_square(1.0);
    std::vector<int> Ls{200};
    double gamma = 0.3;
    int W = 8;
    int steps = 300;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int phi_kernel_resolution = 20;
    int threads = 1;
    int p5_samples = 2000;
    int p6_families = 100;
    std::uint64_t test_seed = 12345;
};

struct PropertyTest {
    std::string name;
    double statistic = 0.0;  ///< worst tail probability found
    double level = 0.01;
    bool pass = true;
    std::string detail;
};

struct ErrorRateRow {
    int L = 0;
    std::size_t box_steps = 0;
    std::size_t type1 = 0;
    std::size_t type2 = 0;
    double rate = 0.0;
    double bound = 0.0;
    std::size_t violations = 0;
    std::size_t overlaps = 0;
    std::vector<PropertyTest> tests;
};

struct ErrorRateResult {
    std::vector<ErrorRateRow> rows;
    ComparisonConfig config;  ///< of the last L
};

/// Per-run error points; epsilon is the per-box-step error probability bound.
struct ErrorSample {
    std::vector<std::vector<ErrorPoint>> runs;  ///< one list per seed
    double window = 0.0;    ///< torus side
    double t_max = 0.0;     ///< steps
    double epsilon = 0.0;
    double box_area = 0.0;  ///< L^(-2 gamma) with the integer box side
};

/// P(|B cap P| >= 2) against the Poisson tail with intensity eps / box_area,
/// on random space-time boxes of volume below the box scale.
PropertyTest property5_test(const ErrorSample& s, int samples, std::uint64_t seed);
/// P(all B_j hit) <= prod_j 2 eps lambda(B_j) / box_area over random families
/// of disjoint cubes, Bonferroni-corrected across families.
PropertyTest property6_test(const ErrorSample& s, int families, std::uint64_t seed);

ErrorRateResult error_rate(const ErrorRateConfig& cfg);

}  // namespace qcp
