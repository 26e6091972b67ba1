#include "qcp/ide.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "qcp/parallel.hpp"

namespace qcp {

namespace {

int round_half_away(double v) {
    return static_cast<int>(v < 0.0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5));
}

}  // namespace

GridKernel grid_kernel(const DiscreteKernel& dk, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    const double ratio = dk.resolution() * spacing;  // kernel lattice steps per grid node
    const double rr = std::round(ratio);
    const double inv = 1.0 / ratio;
    const double ri = std::round(inv);
    bool coarse = false;
    int refine = 1;
    if (rr >= 1.0 && std::abs(ratio - rr) <= 1e-9 * rr) {
        coarse = true;
    } else if (ri >= 1.0 && std::abs(inv - ri) <= 1e-9 * ri) {
        refine = static_cast<int>(ri);
    } else {
        throw std::invalid_argument("incompatible grids: kernel lattice 1/" +
                                    std::to_string(dk.resolution()) + " vs field spacing " +
                                    std::to_string(spacing));
    }

    std::map<std::pair<int, int>, long double> acc;  // (dy, dx) ordered
    const auto offs = dk.offsets();
    const auto mass = dk.masses();
    for (std::size_t k = 0; k < offs.size(); ++k) {
        int gx, gy;
        if (coarse) {
            gx = round_half_away(offs[k].dx / rr);
            gy = round_half_away(offs[k].dy / rr);
        } else {
            gx = offs[k].dx * refine;
            gy = offs[k].dy * refine;
        }
        acc[{gy, gx}] += mass[k];
    }
    GridKernel gk;
    for (const auto& [key, m] : acc) {
        const auto [gy, gx] = key;
        if (gk.rows.empty() || gk.rows.back().dy != gy) gk.rows.push_back({gy, {}, {}});
        gk.rows.back().dx.push_back(gx);
        gk.rows.back().mass.push_back(static_cast<double>(m));
        gk.reach_x = std::max(gk.reach_x, std::abs(gx));
        gk.reach_y = std::max(gk.reach_y, std::abs(gy));
    }
    return gk;
}

Field2D apply_Q_2d(const Field2D& u, const DiscreteKernel& dk, const Params& p, int threads) {
    return apply_Q_2d(u, grid_kernel(dk, u.spacing), p, threads);
}

Field2D apply_Q_2d(const Field2D& u, const GridKernel& gk, const Params& p, int threads) {
    const int nx = u.nx, ny = u.ny;
    const int rx = gk.reach_x, ry = gk.reach_y;
    const int pw = nx + 2 * rx, ph = ny + 2 * ry;

    // Squared field with a halo holding the boundary values.
    std::vector<double> sq(static_cast<std::size_t>(pw) * ph);
    for (int j = 0; j < ph; ++j) {
        const int sj = j - ry;
        for (int i = 0; i < pw; ++i) {
            const int si = i - rx;
            double v;
            if (u.boundary == Boundary::Periodic) {
                v = u.at(((si % nx) + nx) % nx, ((sj % ny) + ny) % ny);
            } else if (si < 0 || sj < 0 || si >= nx || sj >= ny) {
                v = u.clamp_value;
            } else {
                v = u.at(si, sj);
            }
            sq[static_cast<std::size_t>(j) * pw + i] = v * v;
        }
    }

    Field2D out = u;
    const double keep = 1.0 - p.eta;
    parallel_for(static_cast<std::size_t>(ny), threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> conv(static_cast<std::size_t>(nx));
        for (std::size_t jj = lo; jj < hi; ++jj) {
            const int j = static_cast<int>(jj);
            std::fill(conv.begin(), conv.end(), 0.0);
            for (const auto& row : gk.rows) {
                const double* base = &sq[static_cast<std::size_t>(j + ry + row.dy) * pw + rx];
                for (std::size_t k = 0; k < row.dx.size(); ++k) {
                    const double m = row.mass[k];
                    const double* src = base + row.dx[k];
                    for (int i = 0; i < nx; ++i) conv[i] += m * src[i];
                }
            }
            for (int i = 0; i < nx; ++i) {
                const double v = u.at(i, j);
                out.at(i, j) = keep * (v + p.beta * (1.0 - v) * conv[i]);
            }
        }
    });
    return out;
}

Profile1D apply_Q_1d(const Profile1D& f, const Kernel1D& k1, const Params& p) {
    if (std::abs(k1.spacing - f.spacing) > 1e-12 * f.spacing)
        throw std::invalid_argument("kernel marginal spacing does not match profile spacing");
    const long n = static_cast<long>(f.size());
    const long r = k1.reach;
    std::vector<double> sq(static_cast<std::size_t>(n + 2 * r));
    for (long i = 0; i < n + 2 * r; ++i) {
        const double v = f.node(i - r);
        sq[static_cast<std::size_t>(i)] = v * v;
    }
    Profile1D out = f;
    const double keep = 1.0 - p.eta;
    for (long i = 0; i < n; ++i) {
        double conv = 0.0;
        const double* src = &sq[static_cast<std::size_t>(i)];
        for (long m = 0; m <= 2 * r; ++m) conv += k1.masses[static_cast<std::size_t>(m)] * src[m];
        const double v = f.values[static_cast<std::size_t>(i)];
        out.values[static_cast<std::size_t>(i)] = keep * (v + p.beta * (1.0 - v) * conv);
    }
    out.left_limit = mean_field_map(p, f.left_limit);
    out.right_limit = mean_field_map(p, f.right_limit);
    return out;
}

std::vector<Field2D> evolve(const Field2D& u0, const DiscreteKernel& dk, const Params& p, int n,
                            const std::vector<int>& taps, int threads) {
    if (n < 0) throw std::invalid_argument("step count must be >= 0");
    for (int t : taps)
        if (t < 0 || t > n) throw std::invalid_argument("tap time outside [0, n]");
    const GridKernel gk = grid_kernel(dk, u0.spacing);
    std::vector<Field2D> out(taps.size());
    Field2D u = u0;
    for (int step = 0;; ++step) {
        for (std::size_t k = 0; k < taps.size(); ++k)
            if (taps[k] == step) out[k] = u;
        if (step == n) break;
        u = apply_Q_2d(u, gk, p, threads);
    }
    return out;
}

}  // namespace qcp
