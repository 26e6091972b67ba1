#include "qcp/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "qcp/ide.hpp"
#include "qcp/lattice.hpp"
#include "qcp/parallel.hpp"
#include "qcp/rng.hpp"
#include "qcp/wavespeed.hpp"

namespace qcp {

namespace {

constexpr std::uint64_t kTagInit = 101;
constexpr std::uint64_t kTagTests = 103;
constexpr std::uint64_t kGroupStride = 1000003;

// P(Bin(n, p) >= k).
double binomial_upper_tail(long n, double p, long k) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    double sum = 0.0;
    for (long i = k; i <= n; ++i) {
        const double lt = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                          i * lp + (n - i) * lq;
        sum += std::exp(lt);
    }
    return std::min(1.0, sum);
}

bool box_inside(const BoxStats& bs, int bx, int by, double x0, double x1, double y0, double y1) {
    const double cx = bs.corner_x(bx);
    const double cy = bs.corner_y(by);
    const double eps = 1e-9;
    return cx >= x0 - eps && cx + bs.box_len <= x1 + eps && cy >= y0 - eps &&
           cy + bs.box_len <= y1 + eps;
}

std::size_t count_not_dominated(const LatticeState& a, const LatticeState& b) {
    std::size_t n = 0;
    for (int j = 0; j < a.N(); ++j) {
        const std::uint64_t* ra = a.row(j);
        const std::uint64_t* rb = b.row(j);
        for (int w = 0; w < a.words_per_row(); ++w)
            n += static_cast<std::size_t>(std::popcount(ra[w] & ~rb[w]));
    }
    return n;
}

}  // namespace

void check_distinct_seeds(const std::vector<std::uint64_t>& seeds) {
    std::set<std::uint64_t> s(seeds.begin(), seeds.end());
    if (s.size() != seeds.size()) throw std::invalid_argument("seeds must be distinct");
}

// ------------------------------------------------------------ hydro

Field2D default_hydro_u0(const HydroConfig& cfg) {
    const int n = cfg.ide_resolution * cfg.W;
    const double h = 1.0 / cfg.ide_resolution;
    return Field2D::from_function(-0.5 * cfg.W, -0.5 * cfg.W, h, n, n, Boundary::Periodic,
                                  [](double x, double y) {
                                      return 0.7 + 0.05 * std::cos(std::numbers::pi * x) *
                                                       std::cos(std::numbers::pi * y);
                                  });
}

HydroResult hydro_convergence(const HydroConfig& cfg, const Field2D& u0) {
    validate(cfg.params);
    check_distinct_seeds(cfg.seeds);
    if (cfg.Ls.empty() || cfg.groups < 1 || cfg.steps < 0)
        throw std::invalid_argument("hydro: empty L list or bad group/step count");
    if (u0.boundary != Boundary::Periodic || std::abs(u0.width() - cfg.W) > 1e-9 ||
        std::abs(u0.height() - cfg.W) > 1e-9 || std::abs(u0.x0 + 0.5 * cfg.W) > 1e-9 ||
        std::abs(u0.y0 + 0.5 * cfg.W) > 1e-9)
        throw std::invalid_argument("hydro: u0 must be periodic on the window [-W/2, W/2)^2");
    const double half = 0.5 * cfg.W;
    for (int L : cfg.Ls) {
        const double len = box_side(L, cfg.gamma) / static_cast<double>(L);
        if (cfg.K + len > half + 1e-9 || -cfg.K < -half)
            throw std::invalid_argument("hydro: window too small for K at L = " + std::to_string(L));
    }

    // Reference u_n on the IDE grid.
    const DiscreteKernel dk_ref = discretize(cfg.kernel, cfg.ide_resolution);
    const GridKernel gk = grid_kernel(dk_ref, u0.spacing);
    Field2D un = u0;
    for (int n = 0; n < cfg.steps; ++n) un = apply_Q_2d(un, gk, cfg.params, cfg.threads);

    HydroResult res;
    std::vector<std::vector<HydroRow>> by_group(static_cast<std::size_t>(cfg.groups));
    for (int L : cfg.Ls) {
        const DiscreteKernel dk = discretize(cfg.kernel, L);
        const std::size_t ntask = static_cast<std::size_t>(cfg.groups) * cfg.seeds.size();
        std::vector<double> eS(ntask), eR(ntask);
        const int side = box_side(L, cfg.gamma);
        parallel_for(ntask, cfg.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t t = lo; t < hi; ++t) {
                const std::size_t g = t / cfg.seeds.size();
                const std::uint64_t seed = cfg.seeds[t % cfg.seeds.size()] + g * kGroupStride;
                InitSpec spec;
                spec.mode = InitMode::FromField;
                spec.field = u0;
                spec.seed = derive_key(seed, kTagInit, static_cast<std::uint64_t>(L));
                LatticeState s = init(spec, L, cfg.W, -half, -half);
                for (int n = 0; n < cfg.steps; ++n) step(s, dk, cfg.params, seed);
                const BoxStats bs = box_stats(s, cfg.gamma);
                double es = 0.0, er = 0.0;
                for (int by = 0; by < bs.nby; ++by)
                    for (int bx = 0; bx < bs.nbx; ++bx) {
                        const double x = bs.corner_x(bx);
                        const double y = bs.corner_y(by);
                        if (x < -cfg.K - 1e-9 || x > cfg.K + 1e-9 || y < -cfg.K - 1e-9 ||
                            y > cfg.K + 1e-9)
                            continue;
                        const std::size_t b = bs.index(bx, by);
                        const double u = un.sample(x, y);
                        es = std::max(es, std::abs(bs.density(b) - u));
                        er = std::max(er, std::abs(bs.R(b) / static_cast<double>(bs.m) - u * u));
                    }
                eS[t] = es;
                eR[t] = er;
            }
        });
        for (int g = 0; g < cfg.groups; ++g) {
            HydroRow row;
            row.group = g;
            row.L = L;
            row.side = side;
            for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
                row.err_S += eS[g * cfg.seeds.size() + k];
                row.err_R += eR[g * cfg.seeds.size() + k];
            }
            row.err_S /= static_cast<double>(cfg.seeds.size());
            row.err_R /= static_cast<double>(cfg.seeds.size());
            by_group[static_cast<std::size_t>(g)].push_back(row);
        }
    }
    for (const auto& rows : by_group) {
        bool dec = true;
        for (std::size_t k = 1; k < rows.size(); ++k)
            if (!(std::max(rows[k].err_S, rows[k].err_R) < std::max(rows[k - 1].err_S, rows[k - 1].err_R)))
                dec = false;
        if (dec) ++res.decreasing_groups;
        res.rows.insert(res.rows.end(), rows.begin(), rows.end());
    }
    return res;
}

// ------------------------------------------------------------ moments

MomentResult one_step_moments(const MomentConfig& cfg) {
    validate(cfg.params);
    if (cfg.seeds < 2) throw std::invalid_argument("moments: need at least 2 seeds");
    const DiscreteKernel dk = discretize(cfg.kernel, cfg.L);
    InitSpec spec;
    spec.mode = InitMode::Product;
    spec.p = cfg.p0;
    spec.seed = derive_key(cfg.base_seed, kTagInit);
    const LatticeState s0 = init(spec, cfg.L, cfg.W);
    StepOptions so;
    so.anchor = Anchor::box_corner(cfg.gamma);
    so.report_expectation = true;
    so.gamma = cfg.gamma;

    const BoxStats bs0 = box_stats(s0, cfg.gamma);
    const std::size_t nb = bs0.boxes();
    std::vector<double> expected;
    std::vector<double> samples(nb * static_cast<std::size_t>(cfg.seeds));
    std::vector<std::vector<double>> exp_per(static_cast<std::size_t>(cfg.seeds));
    parallel_for(static_cast<std::size_t>(cfg.seeds), cfg.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            LatticeState s = s0;
            StepOptions o = so;
            o.report_expectation = (k == 0);
            const StepReport rep = step(s, dk, cfg.params, cfg.base_seed + 1 + k, o);
            if (k == 0) exp_per[0] = rep.expected;
            const BoxStats bs = box_stats(s, cfg.gamma);
            for (std::size_t b = 0; b < nb; ++b)
                samples[b * static_cast<std::size_t>(cfg.seeds) + k] = static_cast<double>(bs.S[b]);
        }
    });
    expected = exp_per[0];
    if (expected.size() != nb) throw std::runtime_error("moments: expectation report size mismatch");

    MomentResult res;
    res.boxes = nb;
    res.C = std::max(1.0, cfg.params.beta * cfg.params.beta);
    const double n = cfg.seeds;
    const double m = static_cast<double>(bs0.m);
    for (std::size_t b = 0; b < nb; ++b) {
        const double* x = &samples[b * static_cast<std::size_t>(cfg.seeds)];
        double mean = 0.0;
        for (int k = 0; k < cfg.seeds; ++k) mean += x[k];
        mean /= n;
        double m2 = 0.0, m4 = 0.0;
        for (int k = 0; k < cfg.seeds; ++k) {
            const double d = x[k] - mean;
            m2 += d * d;
            m4 += d * d * d * d;
        }
        const double var = m2 / (n - 1.0);
        m4 /= n;
        const double target = expected[b] * m;
        const double se_mean = std::sqrt(std::max(var, 1e-300) / n);
        const double z = std::abs(mean - target) / se_mean;
        res.max_abs_z = std::max(res.max_abs_z, z);
        if (z <= 4.0) ++res.boxes_mean_ok;
        const double pop_var = m2 / n;
        const double se_var = std::sqrt(std::max(m4 - pop_var * pop_var, 1e-300) / n);
        const double zv = (var - res.C * m) / se_var;
        res.max_var_excess_z = b == 0 ? zv : std::max(res.max_var_excess_z, zv);
        if (zv <= 3.0) ++res.boxes_var_ok;
    }
    return res;
}

// ------------------------------------------------------------ growth from a block

GrowthResult block_growth(const GrowthConfig& cfg) {
    validate(cfg.params);
    if (!cfg.params.bistable()) throw std::invalid_argument("block_growth: parameters are not bistable");
    const Equilibria eq = equilibria(cfg.params);
    const double rho_u = eq.rho_u();
    const double rho_s = eq.rho_s();
    const DiscreteKernel dk = discretize(cfg.kernel, cfg.kernel_resolution);
    GrowthResult res;
    res.K = cfg.K > 0.0 ? cfg.K : 5.0 * dk.support_diameter();
    res.delta = cfg.delta > 0.0 ? cfg.delta : (rho_s - rho_u) / 8.0;
    if (!(rho_s - 2.0 * res.delta > rho_u + 2.0 * res.delta))
        throw std::invalid_argument("block_growth: delta too large (need rho_s - 2 delta > rho_u + 2 delta)");
    const double margin = cfg.y_margin > 0.0 ? cfg.y_margin : 3.0 * res.K;
    const double h = cfg.spacing;
    const double xr = 4.0 * res.K + margin;
    const double yr = res.K + margin;
    const int nx = 2 * static_cast<int>(std::ceil(xr / h)) + 1;
    const int ny = 2 * static_cast<int>(std::ceil(yr / h)) + 1;
    const double x0 = -h * (nx / 2);
    const double y0 = -h * (ny / 2);
    const double K = res.K;
    const double level = rho_u + res.delta;
    Field2D u = Field2D::from_function(
        x0, y0, h, nx, ny, Boundary::Clamped,
        [&](double x, double y) {
            return (std::abs(x) <= K + 1e-12 && std::abs(y) <= K + 1e-12) ? level : 0.0;
        },
        0.0);
    const GridKernel gk = grid_kernel(dk, h);
    auto slab_min = [&](const Field2D& f) {
        double mn = std::numeric_limits<double>::infinity();
        for (int j = 0; j < f.ny; ++j) {
            if (std::abs(f.y(j)) > K + 1e-9) continue;
            for (int i = 0; i < f.nx; ++i) {
                if (std::abs(f.x(i)) > 4.0 * K + 1e-9) continue;
                mn = std::min(mn, f.at(i, j));
            }
        }
        return mn;
    };
    const double target = rho_s - res.delta;
    for (int n = 1; n <= cfg.n_max; ++n) {
        u = apply_Q_2d(u, gk, cfg.params, cfg.threads);
        const double mn = slab_min(u);
        if (res.N < 0) {
            if (mn > target) {
                res.N = n;
                res.slab_min_at_N = mn;
                res.holds = true;
            }
        } else {
            if (!(mn > target)) res.holds = false;
        }
        res.slab_min_final = mn;
        if (res.N >= 0 && n >= res.N + cfg.hold) break;
    }
    return res;
}

// ------------------------------------------------------------ block goodness

BlockResult block_goodness(const BlockConfig& cfg) {
    validate(cfg.params);
    check_distinct_seeds(cfg.seeds);
    BlockResult res;
    double fill = 0.0;
    if (cfg.params.bistable()) {
        const Equilibria eq = equilibria(cfg.params);
        const double delta = cfg.delta > 0.0 ? cfg.delta : (eq.rho_s() - eq.rho_u()) / 8.0;
        if (!(eq.rho_s() - 2.0 * delta > eq.rho_u() + 2.0 * delta))
            throw std::invalid_argument("block: delta too large (need rho_s - 2 delta > rho_u + 2 delta)");
        res.threshold = cfg.threshold.value_or(eq.rho_u() + 2.0 * delta);
        fill = eq.rho_s();
    } else {
        if (!cfg.threshold)
            throw std::invalid_argument("block: parameters are not bistable (pass an explicit threshold)");
        res.threshold = *cfg.threshold;
        fill = std::min(1.0, res.threshold + 0.25);
    }
    const DiscreteKernel dk = discretize(cfg.kernel, cfg.L);
    const int W = static_cast<int>(std::ceil(10.0 * cfg.K));
    const double o = -0.5 * W;
    const double K = cfg.K;
    std::vector<int> ok(cfg.seeds.size(), 0);
    parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            const std::uint64_t seed = cfg.seeds[k];
            LatticeState s;
            bool good0 = false;
            for (std::uint64_t attempt = 0; attempt < 64 && !good0; ++attempt) {
                s = LatticeState(cfg.L, W, o, o);
                CounterRng rng(derive_key(seed, kTagInit, attempt));
                for (int j = 0; j < s.N(); ++j)
                    for (int i = 0; i < s.N(); ++i) {
                        const double u = rng.uniform();
                        if (std::abs(s.x(i)) <= K && std::abs(s.y(j)) <= K && u < fill) s.set(i, j, true);
                    }
                const BoxStats bs = box_stats(s, cfg.gamma);
                good0 = true;
                for (int by = 0; by < bs.nby; ++by)
                    for (int bx = 0; bx < bs.nbx; ++bx)
                        if (box_inside(bs, bx, by, -K, K, -K, K) &&
                            bs.density(bs.index(bx, by)) < res.threshold)
                            good0 = false;
            }
            if (!good0) throw std::runtime_error("block: could not draw a good initial block");
            for (int n = 0; n < cfg.N; ++n) step(s, dk, cfg.params, seed);
            const BoxStats bs = box_stats(s, cfg.gamma);
            bool good = true;
            int counted = 0;
            for (int by = 0; by < bs.nby; ++by)
                for (int bx = 0; bx < bs.nbx; ++bx) {
                    const bool in1 = box_inside(bs, bx, by, K, 3.0 * K, -K, K);
                    const bool inm1 = box_inside(bs, bx, by, -3.0 * K, -K, -K, K);
                    if (!in1 && !inm1) continue;
                    ++counted;
                    if (bs.density(bs.index(bx, by)) < res.threshold) good = false;
                }
            if (counted == 0) throw std::runtime_error("block: no complete box inside I_1 / I_-1");
            ok[k] = good ? 1 : 0;
        }
    });
    res.trials = static_cast<int>(cfg.seeds.size());
    for (int v : ok) res.successes += v;
    const double n = res.trials;
    res.p_hat = res.successes / n;
    const double z = 1.959963984540054;
    const double denom = 1.0 + z * z / n;
    const double centre = (res.p_hat + z * z / (2.0 * n)) / denom;
    const double halfw = z * std::sqrt(res.p_hat * (1.0 - res.p_hat) / n + z * z / (4.0 * n * n)) / denom;
    res.ci_lo = std::max(0.0, centre - halfw);
    res.ci_hi = std::min(1.0, centre + halfw);
    return res;
}

// ------------------------------------------------------------ phase scan

std::string to_string(ScanInit s) { return s == ScanInit::AllOnes ? "all_ones" : "finite_square"; }

PhaseScanResult phase_scan(const PhaseScanConfig& cfg) {
    check_distinct_seeds(cfg.seeds);
    if (cfg.betas.empty() || cfg.etas.empty()) throw std::invalid_argument("phase scan: empty grid");
    std::vector<double> betas = cfg.betas;
    std::sort(betas.begin(), betas.end());
    for (double b : betas) validate(Params{b, 0.5});
    for (double e : cfg.etas) validate(Params{0.5, e});
    const DiscreteKernel dk = discretize(cfg.kernel, cfg.L);
    const std::size_t nb = betas.size();
    const std::size_t ne = cfg.etas.size();
    const std::size_t ns = cfg.seeds.size();

    std::vector<PhaseCell> cells(ne * nb);
    for (std::size_t e = 0; e < ne; ++e)
        for (std::size_t b = 0; b < nb; ++b) {
            PhaseCell& c = cells[e * nb + b];
            c.beta = betas[b];
            c.eta = cfg.etas[e];
            const Params p{c.beta, c.eta};
            c.floor = p.bistable() ? 0.5 * equilibria(p).rho_u() : 0.25;
            c.trials = static_cast<int>(ns);
        }
    std::vector<int> surv(ne * nb * ns, 0);
    std::vector<std::size_t> viol(ne * ns, 0);
    parallel_for(ne * ns, cfg.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            const std::size_t e = t / ns;
            const std::uint64_t seed = cfg.seeds[t % ns];
            LatticeState base;
            if (cfg.init == ScanInit::AllOnes) {
                base = init(InitSpec{}, cfg.L, cfg.W);
            } else {
                base = LatticeState(cfg.L, cfg.W);
                const double c0 = 0.5 * cfg.W - 0.5 * cfg.square_side;
                const double c1 = 0.5 * cfg.W + 0.5 * cfg.square_side;
                for (int j = 0; j < base.N(); ++j)
                    for (int i = 0; i < base.N(); ++i)
                        if (base.x(i) >= c0 && base.x(i) < c1 && base.y(j) >= c0 && base.y(j) < c1)
                            base.set(i, j, true);
            }
            std::vector<LatticeState> st(nb, base);
            std::size_t worst = 0;
            for (int n = 0; n < cfg.horizon; ++n) {
                for (std::size_t b = 0; b < nb; ++b) step(st[b], dk, Params{betas[b], cfg.etas[e]}, seed);
                for (std::size_t b = 0; b + 1 < nb; ++b)
                    worst = std::max(worst, count_not_dominated(st[b], st[b + 1]));
            }
            viol[t] = worst;
            for (std::size_t b = 0; b < nb; ++b) {
                const PhaseCell& c = cells[e * nb + b];
                const bool alive = cfg.init == ScanInit::AllOnes ? st[b].density() > c.floor
                                                                 : st[b].count() > 0;
                surv[(e * nb + b) * ns + t % ns] = alive ? 1 : 0;
            }
        }
    });
    PhaseScanResult res;
    for (std::size_t e = 0; e < ne; ++e) {
        double thr = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t b = 0; b < nb; ++b) {
            PhaseCell& c = cells[e * nb + b];
            for (std::size_t k = 0; k < ns; ++k) c.survived += surv[(e * nb + b) * ns + k];
            c.freq = static_cast<double>(c.survived) / c.trials;
            if (std::isnan(thr) && c.freq >= 0.5) thr = c.beta;
        }
        res.thresholds.push_back(thr);
    }
    for (std::size_t v : viol) res.coupling_violations = std::max(res.coupling_violations, v);
    res.cells = std::move(cells);
    return res;
}

// ------------------------------------------------------------ error rate

PropertyTest property5_test(const ErrorSample& s, int samples, std::uint64_t seed) {
    PropertyTest t;
    t.name = "property5_small_box";
    const double eps = std::min(1.0, s.epsilon);
    const double mu = eps / s.box_area;  // points per unit area per unit time
    const double a = 0.5 * std::sqrt(s.box_area);
    const double tau = 0.5;
    const double vol = a * a * tau;
    const double p_bound = std::min(1.0, 0.5 * (mu * vol) * (mu * vol));
    CounterRng rng(derive_key(seed, kTagTests, 5));
    long hits = 0, trials = 0;
    for (const auto& run : s.runs)
        for (int k = 0; k < samples; ++k) {
            const double x0 = rng.uniform() * s.window;
            const double y0 = rng.uniform() * s.window;
            const double t0 = rng.uniform() * std::max(0.0, s.t_max - tau);
            int c = 0;
            for (const auto& e : run) {
                const double dx = std::fmod(e.x - x0 + 2.0 * s.window, s.window);
                const double dy = std::fmod(e.y - y0 + 2.0 * s.window, s.window);
                if (dx < a && dy < a && e.t >= t0 && e.t < t0 + tau) ++c;
            }
            if (c >= 2) ++hits;
            ++trials;
        }
    t.statistic = binomial_upper_tail(trials, p_bound, hits);
    t.pass = t.statistic >= t.level;
    t.detail = "boxes=" + std::to_string(trials) + " with>=2=" + std::to_string(hits) +
               " bound_p=" + std::to_string(p_bound);
    return t;
}

PropertyTest property6_test(const ErrorSample& s, int families, std::uint64_t seed) {
    PropertyTest t;
    t.name = "property6_product_bound";
    const double eps = std::min(1.0, s.epsilon);
    const double mu = eps / s.box_area;
    const double a = 0.7 * std::sqrt(s.box_area);  // lambda(b_j) < box area
    const double tau = 0.5;
    CounterRng rng(derive_key(seed, kTagTests, 6));
    double worst = 1.0;
    const int T = std::max(1, static_cast<int>(std::floor(s.t_max)) - 1);
    std::string detail;
    for (int f = 0; f < families; ++f) {
        const int m = 2 + static_cast<int>(rng.below(2));
        struct Cube { double x, y, t; };
        std::vector<Cube> cubes;
        while (static_cast<int>(cubes.size()) < m) {
            Cube c{rng.uniform() * (s.window - a), rng.uniform() * (s.window - a), rng.uniform() * (1.0 - tau)};
            bool disjoint = true;
            for (const auto& d : cubes)
                if (std::abs(c.x - d.x) < a && std::abs(c.y - d.y) < a && std::abs(c.t - d.t) < tau)
                    disjoint = false;
            if (disjoint) cubes.push_back(c);
        }
        double bound = 1.0;
        for (int j = 0; j < m; ++j) bound *= 2.0 * mu * a * a * tau;
        bound = std::min(1.0, bound);
        long hits = 0, trials = 0;
        for (const auto& run : s.runs)
            for (int shift = 0; shift < T; ++shift) {
                bool all = true;
                for (const auto& c : cubes) {
                    bool hit = false;
                    for (const auto& e : run)
                        if (e.x >= c.x && e.x < c.x + a && e.y >= c.y && e.y < c.y + a &&
                            e.t >= c.t + shift && e.t < c.t + shift + tau) {
                            hit = true;
                            break;
                        }
                    if (!hit) {
                        all = false;
                        break;
                    }
                }
                if (all) ++hits;
                ++trials;
            }
        const double pv = binomial_upper_tail(trials, bound, hits);
        if (pv < worst) {
            worst = pv;
            detail = "family=" + std::to_string(f) + " m=" + std::to_string(m) +
                     " hits=" + std::to_string(hits) + "/" + std::to_string(trials) +
                     " bound_p=" + std::to_string(bound);
        }
    }
    t.statistic = worst;
    t.pass = worst >= t.level / std::max(1, families);
    t.detail = detail.empty() ? "no family with hits" : detail;
    return t;
}

ErrorRateResult error_rate(const ErrorRateConfig& cfg) {
    validate(cfg.params);
    check_distinct_seeds(cfg.seeds);
    if (!cfg.params.bistable()) throw std::invalid_argument("error_rate: parameters are not bistable");
    ErrorRateResult res;
    const DiscreteKernel dk_phi = discretize(cfg.kernel, cfg.phi_kernel_resolution);
    PhiOptions po;
    po.speed.threads = cfg.threads;
    const PhiData phi = build_phi(default_normals(), dk_phi, cfg.params, po);
    for (int L : cfg.Ls) {
        const DiscreteKernel dk = discretize(cfg.kernel, L);
        const ComparisonConfig cc = make_comparison_config(phi, dk.support_diameter(), L, cfg.gamma);
        std::vector<ComparisonRunResult> runs(cfg.seeds.size());
        parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t k = lo; k < hi; ++k) {
                ComparisonRunOptions o;
                o.L = L;
                o.W = cfg.W;
                o.gamma = cfg.gamma;
                o.steps = cfg.steps;
                o.seed = cfg.seeds[k];
                runs[k] = run_comparison(dk, cfg.params, phi, cc, o);
            }
        });
        ErrorRateRow row;
        row.L = L;
        row.bound = cc.error_bound;
        ErrorSample sample;
        sample.window = cfg.W;
        sample.t_max = cfg.steps;
        sample.epsilon = cc.error_bound;
        const double len = box_side(L, cfg.gamma) / static_cast<double>(L);
        sample.box_area = len * len;
        for (auto& r : runs) {
            row.box_steps += r.box_steps;
            row.type1 += r.type1;
            row.type2 += r.type2;
            row.violations += r.violations;
            row.overlaps += r.overlaps;
            sample.runs.push_back(std::move(r.errors));
        }
        row.rate = row.box_steps ? static_cast<double>(row.type1 + row.type2) / row.box_steps : 0.0;
        row.tests.push_back(property5_test(sample, cfg.p5_samples, cfg.test_seed));
        row.tests.push_back(property6_test(sample, cfg.p6_families, cfg.test_seed));
        res.rows.push_back(std::move(row));
        res.config = cc;
    }
    return res;
}

}  // namespace qcp
