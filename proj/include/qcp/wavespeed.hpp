#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qcp/field.hpp"
#include "qcp/kernel.hpp"
#include "qcp/mean_field.hpp"

namespace qcp {

/// Piecewise-linear initial profile: `plateau` for s <= -width, linear down to
/// 0 at s = 0, and 0 afterwards.
struct PsiSpec {
    double plateau = 0.5;
    double width = 1.0;
};

/// plateau = (rho_u + rho_s)/2, width = 5 d(k).
PsiSpec default_psi(const Params& p, double kernel_diameter);

/// Sample psi on [s_min, s_max] (grid must straddle [-width, 0]). Throws
/// std::invalid_argument unless rho_u < plateau < rho_s.
Profile1D make_psi(const PsiSpec& spec, const Params& p, double spacing, double s_min,
                   double s_max);

/// R_{c,xi}[f](s) = max{psi(s), Q_1d[f](s + c)} on the grid of f. The shift is
/// linear interpolation of Q_1d[f]; psi must share f's grid.
Profile1D weinberger_step(const Profile1D& f, double c, const Kernel1D& k1, const Params& p,
                          const Profile1D& psi);

enum class SpeedClass { BelowCstar, AtOrAbove };
std::string to_string(SpeedClass s);

struct SpeedOptions {
    double spacing = 0.0;       ///< 1D grid spacing; 0 means 1/resolution of the kernel
    double density_tol = 1e-4;  ///< growth threshold rho_s - tol, stall threshold tol/10
    int max_iter = 200000;
    std::optional<PsiSpec> psi;  ///< default_psi when empty
    double probe_factor = 20.0;  ///< probe at s_max = probe_factor * d(k)
    int threads = 1;             ///< concurrent probes in estimate_cstar
};

struct ClassifyOutcome {
    SpeedClass cls = SpeedClass::AtOrAbove;
    int iterations = 0;
    /// "probe", "translate" (f_n dominates a right-translate of an earlier
    /// iterate, which forces f(inf) = rho_s) or "stall".
    std::string reason;
};

/// Iterate f_{n+1} = R_{c,xi}[f_n] from psi and decide on which side of c*(xi)
/// the trial speed lies. Throws std::runtime_error("indeterminate ...") when
/// neither criterion fires within max_iter, and std::invalid_argument for
/// non-bistable parameters.
ClassifyOutcome classify_speed_detail(double c, Direction dir, const DiscreteKernel& dk,
                                      const Params& p, const SpeedOptions& opt = {});
SpeedClass classify_speed(double c, Direction dir, const DiscreteKernel& dk, const Params& p,
                          const SpeedOptions& opt = {});

struct SpeedResult {
    Direction dir;
    double c_star = 0.0;
    double c_lo = 0.0;
    double c_hi = 0.0;
    long iterations = 0;
    std::vector<std::pair<double, SpeedClass>> trace;  ///< probes in evaluation order
};

/// Quadrisection on [-d(k) - 1, d(k) + 1] down to a bracket of width <= tol.
/// Three probes per round (concurrent when opt.threads > 1); the probe set does
/// not depend on the thread count.
SpeedResult estimate_cstar(Direction dir, const DiscreteKernel& dk, const Params& p, double tol,
                           const SpeedOptions& opt = {});

/// Independent speed estimate: iterate Q_1d on a Heaviside profile (rho_s left
/// of 0, 0 right of it), track the rho_s/2 crossing and return the least-squares
/// slope over the last half of the run.
double front_speed_tracking(Direction dir, const DiscreteKernel& dk, const Params& p, int steps,
                            double spacing = 0.0);

struct PhiOptions {
    SpeedOptions speed;
    double speed_tol = 0.01;
    std::optional<std::array<double, 3>> alphas;  ///< skip speed estimation when given
    /// Initial profile for the phi iterates. Default: plateau (rho_u + rho_s)/2,
    /// width d(k)/2. A wide psi keeps the domination check failing in its
    /// sub-rho_u tail until alpha = g^n(plateau) has saturated at rho_s.
    std::optional<PsiSpec> psi;
    int n_max = 200;
    double tol = 1e-6;  ///< threshold tolerance for m, M and the domination check
};

PsiSpec default_phi_psi(const Params& p, double kernel_diameter);

struct PhiData {
    Profile1D phi;
    double alpha = 0.0;  ///< phi(-inf)
    double m = 0.0;
    double M = 0.0;
    double l = 0.0;
    std::array<Direction, 3> dirs;
    std::array<double, 3> alphas{};  ///< c*(xi_i)
    double c = 0.0;                  ///< min alpha_i / 2
    int n = 0;                       ///< Weinberger iterations used
    std::array<Kernel1D, 3> marginals;
    Params params;
};

/// Throws std::invalid_argument unless every pairwise angle between the
/// three normals lies strictly in (90, 180) degrees.
void validate_triangle_normals(const std::array<Direction, 3>& dirs);
std::array<Direction, 3> default_normals();

/// Build phi = min_i f_{n,i} for the smallest n in [1, n_max] such that
/// phi(s - c) <= Q_i[phi](s) + tol on the grid for every direction.
PhiData build_phi(const std::array<Direction, 3>& dirs, const DiscreteKernel& dk, const Params& p,
                  const PhiOptions& opt = {});

}  // namespace qcp
