#include "qcp/wavespeed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qcp/ide.hpp"
#include "qcp/parallel.hpp"

namespace qcp {

namespace {

double grid_spacing(const SpeedOptions& opt, const DiscreteKernel& dk) {
    const double h = opt.spacing > 0.0 ? opt.spacing : 1.0 / dk.resolution();
    if (!(h > 0.0)) throw std::invalid_argument("speed grid spacing must be positive");
    return h;
}

// Kernel diameter used to size grids; a point mass still needs a few nodes.
double effective_diameter(const DiscreteKernel& dk, double h) {
    return std::max(dk.support_diameter(), 10.0 * h);
}

void require_bistable(const Params& p) {
    validate(p);
    if (!p.bistable())
        throw std::invalid_argument("wave speeds need bistable parameters (beta(1-eta) > 4 eta)");
}

// Node-aligned grid covering [lo, hi] with 0 on a node.
Profile1D zero_grid(double lo, double hi, double h) {
    const long i0 = static_cast<long>(std::floor(lo / h));
    const long i1 = static_cast<long>(std::ceil(hi / h));
    Profile1D f;
    f.s_min = static_cast<double>(i0) * h;
    f.spacing = h;
    f.values.assign(static_cast<std::size_t>(i1 - i0 + 1), 0.0);
    return f;
}

double sup_change(const Profile1D& a, const Profile1D& b) {
    double d = std::max(std::abs(a.left_limit - b.left_limit), std::abs(a.right_limit - b.right_limit));
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
    return d;
}

// f >= (earlier shifted right by one node), limits included.
bool dominates_translate(const Profile1D& f, const Profile1D& earlier) {
    if (f.left_limit < earlier.left_limit || f.right_limit < earlier.right_limit) return false;
    for (long i = 0; i < static_cast<long>(f.size()); ++i)
        if (f.values[static_cast<std::size_t>(i)] < earlier.node(i - 1)) return false;
    return true;
}

}  // namespace

PsiSpec default_psi(const Params& p, double kernel_diameter) {
    const Equilibria eq = equilibria(p);
    if (eq.roots.size() < 3) throw std::invalid_argument("default psi needs bistable parameters");
    return {0.5 * (eq.rho_u() + eq.rho_s()), 5.0 * kernel_diameter};
}

PsiSpec default_phi_psi(const Params& p, double kernel_diameter) {
    PsiSpec s = default_psi(p, kernel_diameter);
    s.width = 0.5 * kernel_diameter;
    return s;
}

Profile1D make_psi(const PsiSpec& spec, const Params& p, double spacing, double s_min,
                   double s_max) {
    const Equilibria eq = equilibria(p);
    if (eq.roots.size() < 3 || !(spec.plateau > eq.rho_u() && spec.plateau < eq.rho_s()))
        throw std::invalid_argument("psi plateau must lie strictly between rho_u and rho_s");
    if (!(spec.width > 0.0)) throw std::invalid_argument("psi width must be positive");
    if (!(spacing > 0.0) || !(s_max >= s_min))
        throw std::invalid_argument("psi grid must be non-empty with positive spacing");
    Profile1D f;
    f.s_min = s_min;
    f.spacing = spacing;
    const auto n = static_cast<std::size_t>(std::floor((s_max - s_min) / spacing + 1e-9)) + 1;
    f.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = f.s(i);
        f.values[i] = s <= -spec.width ? spec.plateau
                      : s >= 0.0       ? 0.0
                                       : spec.plateau * (-s / spec.width);
    }
    f.left_limit = spec.plateau;
    f.right_limit = 0.0;
    return f;
}

Profile1D weinberger_step(const Profile1D& f, double c, const Kernel1D& k1, const Params& p,
                          const Profile1D& psi) {
    if (psi.size() != f.size() || std::abs(psi.s_min - f.s_min) > 1e-9 * f.spacing ||
        std::abs(psi.spacing - f.spacing) > 1e-12 * f.spacing)
        throw std::invalid_argument("psi and f must share a grid");
    const Profile1D q = apply_Q_1d(f, k1, p);
    Profile1D out = f;
    const double shift = c / f.spacing;
    const double rs = std::round(shift);
    if (std::abs(shift - rs) < 1e-9) {
        const long k = static_cast<long>(rs);
        for (long i = 0; i < static_cast<long>(f.size()); ++i)
            out.values[static_cast<std::size_t>(i)] =
                std::max(psi.values[static_cast<std::size_t>(i)], q.node(i + k));
    } else {
        for (std::size_t i = 0; i < f.size(); ++i)
            out.values[i] = std::max(psi.values[i], q(f.s(i) + c));
    }
    out.left_limit = std::max(psi.left_limit, q.left_limit);
    out.right_limit = std::max(psi.right_limit, q.right_limit);
    return out;
}

std::string to_string(SpeedClass s) {
    return s == SpeedClass::BelowCstar ? "below_cstar" : "at_or_above";
}

ClassifyOutcome classify_speed_detail(double c, Direction dir, const DiscreteKernel& dk,
                                      const Params& p, const SpeedOptions& opt) {
    require_bistable(p);
    if (opt.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    const double rho_s = equilibria(p).rho_s();
    const double h = grid_spacing(opt, dk);
    const double d = effective_diameter(dk, h);
    const PsiSpec ps = opt.psi ? *opt.psi : default_psi(p, d);
    const double s_probe_end = opt.probe_factor * d;
    Profile1D grid = zero_grid(-ps.width - 2.0 * d, s_probe_end + 5.0 * d, h);
    const Profile1D psi = make_psi(ps, p, h, grid.s_min, grid.s_max());
    const Kernel1D k1 = marginal_1d(dk, dir, h);
    const double probe = s_probe_end - d;
    const double tol = opt.density_tol;

    struct Checkpoint {
        int iter;
        Profile1D f;
    };
    std::vector<Checkpoint> checkpoints;
    constexpr int kCheckEvery = 64;
    int next_checkpoint = kCheckEvery;

    Profile1D f = psi;
    for (int it = 1; it <= opt.max_iter; ++it) {
        Profile1D next = weinberger_step(f, c, k1, p, psi);
        if (next(probe) > rho_s - tol) return {SpeedClass::BelowCstar, it, "probe"};
        if (sup_change(next, f) < tol / 10.0) return {SpeedClass::AtOrAbove, it, "stall"};
        f = std::move(next);
        if (it % kCheckEvery == 0) {
            for (const auto& cp : checkpoints)
                if (dominates_translate(f, cp.f)) return {SpeedClass::BelowCstar, it, "translate"};
            if (it == next_checkpoint) {
                checkpoints.push_back({it, f});
                next_checkpoint *= 2;
            }
        }
    }
    throw std::runtime_error("indeterminate speed classification at c = " + std::to_string(c) +
                             " after " + std::to_string(opt.max_iter) +
                             " iterations; raise max_iter");
}

SpeedClass classify_speed(double c, Direction dir, const DiscreteKernel& dk, const Params& p,
                          const SpeedOptions& opt) {
    return classify_speed_detail(c, dir, dk, p, opt).cls;
}

SpeedResult estimate_cstar(Direction dir, const DiscreteKernel& dk, const Params& p, double tol,
                           const SpeedOptions& opt) {
    require_bistable(p);
    if (!(tol > 0.0)) throw std::invalid_argument("speed tolerance must be positive");
    SpeedResult res;
    res.dir = dir;
    double lo = -dk.support_diameter() - 1.0;
    double hi = dk.support_diameter() + 1.0;

    auto run = [&](const std::vector<double>& cs) {
        std::vector<ClassifyOutcome> out(cs.size());
        parallel_for(cs.size(), opt.threads, [&](std::size_t a, std::size_t b) {
            for (std::size_t k = a; k < b; ++k) out[k] = classify_speed_detail(cs[k], dir, dk, p, opt);
        });
        for (std::size_t k = 0; k < cs.size(); ++k) {
            res.trace.emplace_back(cs[k], out[k].cls);
            res.iterations += out[k].iterations;
        }
        return out;
    };

    const auto ends = run({lo, hi});
    if (ends[0].cls != SpeedClass::BelowCstar || ends[1].cls != SpeedClass::AtOrAbove)
        throw std::runtime_error("speed bracket endpoints misclassified");
    while (hi - lo > tol) {
        const double w = hi - lo;
        const std::vector<double> cs{lo + 0.25 * w, lo + 0.5 * w, lo + 0.75 * w};
        const auto out = run(cs);
        std::size_t j = 0;
        while (j < 3 && out[j].cls == SpeedClass::BelowCstar) ++j;
        if (j < 3) hi = cs[j];
        if (j > 0) lo = cs[j - 1];
    }
    res.c_lo = lo;
    res.c_hi = hi;
    res.c_star = 0.5 * (lo + hi);
    return res;
}

double front_speed_tracking(Direction dir, const DiscreteKernel& dk, const Params& p, int steps,
                            double spacing) {
    require_bistable(p);
    if (steps < 2) throw std::invalid_argument("front tracking needs at least 2 steps");
    const double h = spacing > 0.0 ? spacing : 1.0 / dk.resolution();
    const Kernel1D k1 = marginal_1d(dk, dir, h);
    const double rho_s = equilibria(p).rho_s();
    const double level = 0.5 * rho_s;
    const double extent = steps * (k1.reach + 1) * h + 4.0 * h;
    Profile1D f = zero_grid(-extent, extent, h);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = f.s(i) < -0.5 * h ? rho_s : 0.0;
    f.left_limit = rho_s;
    f.right_limit = 0.0;

    auto crossing = [&](const Profile1D& g) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.values[i] < level) {
                const double a = g.node(static_cast<long>(i) - 1), b = g.values[i];
                return g.s(i) - h + h * (a - level) / (a - b);
            }
        }
        throw std::runtime_error("front left the tracking grid");
    };

    std::vector<double> pos;
    pos.reserve(static_cast<std::size_t>(steps) + 1);
    pos.push_back(crossing(f));
    for (int n = 1; n <= steps; ++n) {
        f = apply_Q_1d(f, k1, p);
        pos.push_back(crossing(f));
    }
    // Least squares slope over n in [steps/2, steps].
    const int n0 = steps / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int cnt = steps - n0 + 1;
    for (int n = n0; n <= steps; ++n) {
        sx += n;
        sy += pos[static_cast<std::size_t>(n)];
        sxx += static_cast<double>(n) * n;
        sxy += n * pos[static_cast<std::size_t>(n)];
    }
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

std::array<Direction, 3> default_normals() {
    return {Direction::from_degrees(45.0), Direction::from_degrees(165.0),
            Direction::from_degrees(285.0)};
}

void validate_triangle_normals(const std::array<Direction, 3>& dirs) {
    for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
            const double dot = dirs[a].x * dirs[b].x + dirs[a].y * dirs[b].y;
            const double na = std::hypot(dirs[a].x, dirs[a].y), nb = std::hypot(dirs[b].x, dirs[b].y);
            const double ang = std::acos(std::clamp(dot / (na * nb), -1.0, 1.0)) * 180.0 /
                               std::numbers::pi;
            if (!(ang > 90.0 && ang < 180.0))
                throw std::invalid_argument("triangle normals must be pairwise more than 90 and "
                                            "less than 180 degrees apart");
        }
    }
}

PhiData build_phi(const std::array<Direction, 3>& dirs, const DiscreteKernel& dk, const Params& p,
                  const PhiOptions& opt) {
    require_bistable(p);
    validate_triangle_normals(dirs);
    if (opt.n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    PhiData out;
    out.dirs = dirs;
    out.params = p;
    if (opt.alphas) {
        out.alphas = *opt.alphas;
    } else {
        for (int i = 0; i < 3; ++i)
            out.alphas[i] = estimate_cstar(dirs[i], dk, p, opt.speed_tol, opt.speed).c_star;
    }
    for (double a : out.alphas)
        if (!(a > 0.0)) throw std::invalid_argument("every triangle normal needs a positive wave speed");
    out.c = 0.5 * std::min({out.alphas[0], out.alphas[1], out.alphas[2]});

    const double h = grid_spacing(opt.speed, dk);
    const double d = effective_diameter(dk, h);
    const PsiSpec ps = opt.psi ? *opt.psi : default_phi_psi(p, d);
    int reach = 0;
    for (int i = 0; i < 3; ++i) {
        out.marginals[i] = marginal_1d(dk, dirs[i], h);
        reach = std::max(reach, out.marginals[i].reach);
    }
    // Influence travels at most reach + |c| per step in either direction, so on
    // this grid the iterates carry no truncation error.
    const double spread = opt.n_max * (reach * h + out.c) + 4.0 * h;
    const Profile1D grid = zero_grid(-ps.width - spread, spread, h);
    const Profile1D psi = make_psi(ps, p, h, grid.s_min, grid.s_max());

    std::array<Profile1D, 3> f{psi, psi, psi};
    for (int n = 1; n <= opt.n_max; ++n) {
        for (int i = 0; i < 3; ++i) f[i] = weinberger_step(f[i], out.c, out.marginals[i], p, psi);
        Profile1D phi = f[0];
        for (std::size_t j = 0; j < phi.size(); ++j)
            phi.values[j] = std::min({f[0].values[j], f[1].values[j], f[2].values[j]});
        phi.left_limit = std::min({f[0].left_limit, f[1].left_limit, f[2].left_limit});
        phi.right_limit = 0.0;

        bool dominated = true;
        std::array<Profile1D, 3> q;
        for (int i = 0; i < 3 && dominated; ++i) {
            q[i] = apply_Q_1d(phi, out.marginals[i], p);
            for (std::size_t j = 0; j < phi.size(); ++j) {
                if (phi(phi.s(j) - out.c) > q[i].values[j] + opt.tol) {
                    dominated = false;
                    break;
                }
            }
        }
        if (!dominated) continue;

        out.n = n;
        out.alpha = phi.left_limit;
        double m = std::numeric_limits<double>::infinity();
        double M = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i) {
            double mi = phi.s_min - h;
            for (std::size_t j = phi.size(); j-- > 0;) {
                if (q[i].values[j] >= out.alpha - opt.tol) {
                    mi = phi.s(j);
                    break;
                }
            }
            double Mi = phi.s_max() + h;
            for (std::size_t j = 0; j < phi.size(); ++j) {
                if (q[i].values[j] <= opt.tol) {
                    Mi = phi.s(j);
                    break;
                }
            }
            m = std::min(m, mi);
            M = std::max(M, Mi);
        }
        out.m = m;
        out.M = M;
        out.l = M - m;

        // Trim the flat tails (plateau on the left, zero on the right).
        std::size_t a = 0, b = phi.size();
        while (a + 1 < b && std::abs(phi.values[a + 1] - phi.left_limit) <= 1e-14) ++a;
        while (b > a + 2 && phi.values[b - 2] == 0.0) --b;
        Profile1D trimmed;
        trimmed.spacing = h;
        trimmed.s_min = phi.s(a);
        trimmed.values.assign(phi.values.begin() + static_cast<long>(a),
                              phi.values.begin() + static_cast<long>(b));
        trimmed.left_limit = phi.left_limit;
        trimmed.right_limit = 0.0;
        out.phi = std::move(trimmed);
        return out;
    }
    throw std::runtime_error("phi domination check failed up to n_max = " +
                             std::to_string(opt.n_max));
}

}  // namespace qcp
