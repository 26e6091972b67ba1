// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number, e.g. `qcp_acceptance 1 3 9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qcp/cli.hpp"
#include "qcp/comparison.hpp"
#include "qcp/experiments.hpp"
#include "qcp/ide.hpp"
#include "qcp/lattice.hpp"
#include "qcp/mean_field.hpp"
#include "qcp/wavespeed.hpp"

using namespace qcp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

const Params kP{1.0, 0.05};

// ------------------------------------------------------------------ 1

Outcome equilibria_check() {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    bool order = true;
    int done = 0;
    while (done < 20) {
        const Params p{U(gen), 0.5 * U(gen)};
        if (!p.bistable()) continue;
        ++done;
        const Equilibria eq = equilibria(p);
        if (eq.roots.size() != 3) return {false, "expected three roots"};
        for (double r : {eq.rho_u(), eq.rho_s()}) worst = std::max(worst, std::abs(mean_field_map(p, r) - r));
        order = order && eq.rho_u() < 0.5 && 0.5 < eq.rho_s();
    }
    // Threshold cases where beta (1 - eta) == 4 eta holds in floating point.
    bool dbl = true;
    int exact = 0;
    for (const Params& p : {Params{1.0, 0.2}, Params{0.5, 1.0 / 9.0}, Params{0.4, 1.0 / 11.0}}) {
        if (p.beta * (1.0 - p.eta) != 4.0 * p.eta) continue;
        ++exact;
        const Equilibria eq = equilibria(p);
        dbl = dbl && eq.roots.size() == 2 && eq.roots[1].value == 0.5;
    }
    dbl = dbl && exact > 0;
    return {worst < 1e-12 && order && dbl,
            "max residual " + num(worst) + (order ? "" : ", root order broken") + (dbl ? "" : ", double root not 1/2")};
}

// ------------------------------------------------------------------ 2

Outcome attractiveness_check() {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 5);
    int bad_q = 0;
    for (int k = 0; k < 100; ++k) {
        const Params p{U(gen), U(gen)};
        auto u = Field2D::constant(0.0, 0.0, 0.2, 16, 16, Boundary::Periodic, 0.0);
        auto v = u;
        for (std::size_t i = 0; i < u.values.size(); ++i) {
            u.values[i] = U(gen);
            v.values[i] = u.values[i] + (1.0 - u.values[i]) * U(gen) * (U(gen) < 0.5 ? 1.0 : 0.0);
        }
        const Field2D qu = apply_Q_2d(u, dk, p);
        const Field2D qv = apply_Q_2d(v, dk, p);
        for (std::size_t i = 0; i < u.values.size(); ++i)
            if (qu.values[i] > qv.values[i]) {
                ++bad_q;
                break;
            }
    }
    // 200 x 200 torus: L = 50, W = 4.
    const DiscreteKernel dl = discretize(KernelSpec::uniform_square(1.0), 50);
    int bad_lat = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        InitSpec hi;
        hi.mode = InitMode::Product;
        hi.p = 0.6;
        hi.seed = derive_key(seed, 900);
        LatticeState big = init(hi, 50, 4);
        hi.p = 0.5;
        hi.seed = derive_key(seed, 901);
        LatticeState small = init(hi, 50, 4);
        for (int j = 0; j < small.N(); ++j)
            for (int i = 0; i < small.N(); ++i) small.set(i, j, small.get(i, j) && big.get(i, j));
        for (int n = 0; n < 50; ++n) {
            step(big, dl, kP, seed);
            step(small, dl, kP, seed);
            if (!dominated_by(small, big)) {
                ++bad_lat;
                break;
            }
        }
    }
    return {bad_q == 0 && bad_lat == 0,
            "Q order violations " + std::to_string(bad_q) + "/100, coupling violations " +
                std::to_string(bad_lat) + "/20"};
}

// ------------------------------------------------------------------ 3

Outcome plane_wave_check() {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int res = 10;
    const double h = 1.0 / res;
    const DiscreteKernel dk = discretize(build_kernel(KernelSpec::truncated_gaussian(0.5, 1.0)), res);
    const int R = dk.reach();
    const int n = 60;
    const std::vector<std::pair<int, int>> dirs{{1, 0}, {0, 1}, {1, 1}, {-1, 1}, {1, -1}};
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const Params p{0.5 + 0.5 * U(gen), 0.2 * U(gen)};
        const auto [a, b] = dirs[static_cast<std::size_t>(k) % dirs.size()];
        const double norm = std::hypot(a, b);
        const Direction d{a / norm, b / norm};
        const double h1 = h / norm;  // node (i, j) sits at s = (a i + b j) h / norm
        const int kmin = std::min(0, a * (n - 1)) + std::min(0, b * (n - 1));
        const int kmax = std::max(0, a * (n - 1)) + std::max(0, b * (n - 1));
        Profile1D f;
        f.s_min = kmin * h1;
        f.spacing = h1;
        f.left_limit = U(gen);
        f.right_limit = U(gen);
        for (int m = kmin; m <= kmax; ++m) f.values.push_back(U(gen));
        auto u = Field2D::constant(0.0, 0.0, h, n, n, Boundary::Clamped, 0.0);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) u.at(i, j) = f.values[static_cast<std::size_t>(a * i + b * j - kmin)];
        const Field2D q2 = apply_Q_2d(u, dk, p);
        const Profile1D q1 = apply_Q_1d(f, marginal_1d(dk, d, h1), p);
        for (int j = R; j < n - R; ++j)
            for (int i = R; i < n - R; ++i)
                worst = std::max(worst, std::abs(q2.at(i, j) - q1.values[static_cast<std::size_t>(a * i + b * j - kmin)]));
    }
    return {worst < 1e-10, "sup |Q_2d - Q_1d| = " + num(worst)};
}

// ------------------------------------------------------------------ 4

Outcome weinberger_check() {
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 20);
    const double rho_s = equilibria(kP).rho_s();
    const double h = 1.0 / 20;
    bool mono_n = true, bounded = true, cls_ok = true;
    double max_rise = 0.0;  // largest f(s_{i+1}) - f(s_i); rounding in the convolution reaches 1 ulp
    std::string cls_trace;
    for (double ang : {0.0, 45.0, 90.0}) {
        const Direction d = Direction::from_degrees(ang);
        const Kernel1D k1 = marginal_1d(dk, d, h);
        const Profile1D psi = make_psi(default_psi(kP, dk.support_diameter()), kP, h, -40.0, 40.0);
        for (double c : {-0.1, 0.1, 0.3}) {
            Profile1D f = psi;
            for (int it = 0; it < 300; ++it) {
                const Profile1D g = weinberger_step(f, c, k1, kP, psi);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (g.values[i] < f.values[i]) mono_n = false;
                    if (g.values[i] > rho_s) bounded = false;
                }
                for (std::size_t i = 1; i < g.size(); ++i)
                    max_rise = std::max(max_rise, g.values[i] - g.values[i - 1]);
                f = g;
            }
        }
        bool seen_above = false;
        for (double c : {-0.3, -0.1, 0.05, 0.35, 0.6}) {
            const SpeedClass s = classify_speed(c, d, dk, kP);
            if (s == SpeedClass::AtOrAbove) seen_above = true;
            else if (seen_above) cls_ok = false;
            cls_trace += s == SpeedClass::AtOrAbove ? '+' : '-';
        }
        cls_trace += ' ';
    }
    const bool mono_s = max_rise <= 1e-14;
    return {mono_n && mono_s && bounded && cls_ok,
            std::string("nondecreasing in n: ") + (mono_n ? "yes" : "no") + ", max rise in s " + num(max_rise) +
                ", <= rho_s: " + (bounded ? "yes" : "no") + ", classes " + cls_trace};
}

// ------------------------------------------------------------------ 5

Outcome speed_oracle_check() {
    const DiscreteKernel dk = discretize(KernelSpec::uniform_square(1.0), 20);
    const double tol = 0.01;
    double worst_gap = 0.0, worst_sym = 0.0;
    for (double ang : {0.0, 45.0, 90.0}) {
        const double cs = estimate_cstar(Direction::from_degrees(ang), dk, kP, tol).c_star;
        const double cr = estimate_cstar(Direction::from_degrees(ang + 180.0), dk, kP, tol).c_star;
        const double ft = front_speed_tracking(Direction::from_degrees(ang), dk, kP, 200);
        worst_gap = std::max(worst_gap, std::abs(cs - ft));
        worst_sym = std::max(worst_sym, std::abs(cs - cr));
    }
    return {worst_gap <= std::max(0.05, 3 * tol) && worst_sym <= 2 * tol,
            "max |c* - front| = " + num(worst_gap) + ", max |c*(xi) - c*(-xi)| = " + num(worst_sym)};
}

// ------------------------------------------------------------------ 6

Outcome moments_check() {
    const MomentResult r = one_step_moments(MomentConfig{});
    return {r.boxes_mean_ok == r.boxes && r.boxes_var_ok == r.boxes && r.boxes > 0,
            std::to_string(r.boxes) + " boxes, max |z| mean " + num(r.max_abs_z) + ", max variance excess z " +
                num(r.max_var_excess_z)};
}

// ------------------------------------------------------------------ 7

Outcome hydro_check() {
    HydroConfig c;
    const HydroResult r = hydro_convergence(c, default_hydro_u0(c));
    double final_err = 0.0;
    for (const auto& row : r.rows)
        if (row.L == c.Ls.back()) final_err = std::max({final_err, row.err_S, row.err_R});
    return {r.decreasing_groups >= 9 && final_err < 0.05,
            std::to_string(r.decreasing_groups) + "/" + std::to_string(c.groups) +
                " groups decreasing, max error at L=" + std::to_string(c.Ls.back()) + " " + num(final_err)};
}

// ------------------------------------------------------------------ 8

Outcome growth_check() {
    const GrowthResult r = block_growth(GrowthConfig{});
    return {r.N >= 0 && r.holds,
            "K=" + num(r.K) + " delta=" + num(r.delta) + " N=" + std::to_string(r.N) + " slab min " +
                num(r.slab_min_at_N) + " (final " + num(r.slab_min_final) + ")"};
}

// ------------------------------------------------------------------ 9

// Reference integrator for a single region: fixed steps of dt with each edge
// moving at its rate; switch and vanish instants are located inside a step by
// solving the (linear) motion over that step.
struct FineRegion {
    std::array<double, 3> H, target;
    std::array<bool, 3> out;
};

struct FineTimes {
    std::array<double, 3> switch_at{NAN, NAN, NAN};
    double vanish_at = NAN;
};

FineTimes integrate_fine(FineRegion r, const std::array<double, 3>& w, double b, double c, double t_end,
                         double dt) {
    FineTimes ft;
    double t = 0.0;
    while (t < t_end && std::isnan(ft.vanish_at)) {
        double rem = dt;
        while (rem > 0.0) {
            double sub = rem;
            int which = -1;
            for (int j = 0; j < 3; ++j)
                if (r.out[j]) {
                    const double tc = (r.target[j] - r.H[j]) / (b + c);
                    if (tc <= sub) {
                        sub = tc;
                        which = j;
                    }
                }
            double F = 0.0, dF = 0.0;
            for (int j = 0; j < 3; ++j) {
                F += w[j] * r.H[j];
                dF += w[j] * (r.out[j] ? b : -c);
            }
            if (dF < 0.0 && F + dF * sub <= 0.0) {
                ft.vanish_at = t + F / -dF;
                return ft;
            }
            for (int j = 0; j < 3; ++j) {
                if (r.out[j]) {
                    r.H[j] += b * sub;
                    r.target[j] -= c * sub;
                } else {
                    r.H[j] -= c * sub;
                }
            }
            t += sub;
            rem -= sub;
            if (which >= 0) {
                r.out[which] = false;
                r.H[which] = r.target[which];
                ft.switch_at[which] = t;
            }
        }
    }
    return ft;
}

Outcome geometry_check() {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst_closed = 0.0, worst_fine = 0.0;
    int scenarios = 0;
    for (int k = 0; k < 50; ++k) {
        const double rot = 360.0 * U(gen);
        const auto base = default_normals();
        std::array<Direction, 3> n;
        for (int j = 0; j < 3; ++j) n[j] = Direction::from_degrees(base[j].degrees() + rot);
        const auto w = normal_weights(n);
        const double c = 0.05 + 0.2 * U(gen);
        const double b = 1.0 + 5.0 * U(gen);
        RegionSet set(n, c, b);
        if (k % 2 == 0) {
            // Isolated triangle.
            const double r = 0.5 + 4.0 * U(gen);
            const int id = set.spawn(10 * U(gen), 10 * U(gen), r, 0);
            FineRegion fr;
            fr.H = set.regions().at(0).H;
            fr.target = fr.H;
            fr.out = {false, false, false};
            set.advance_to(r / c + 1.0);
            double tv = NAN;
            for (const auto& e : set.events())
                if (e.kind == "vanish" && e.region == id) tv = e.t;
            const FineTimes f = integrate_fine(fr, w, b, c, r / c + 1.0, 1e-3);
            worst_closed = std::max(worst_closed, std::abs(tv - r / c));
            worst_fine = std::max(worst_fine, std::abs(tv - f.vanish_at));
        } else {
            // Two overlapping triangles; their overlap region grows towards the
            // envelope of the pair and then shrinks.
            const double r = 1.0 + 2.0 * U(gen);
            const double ang = 2.0 * std::numbers::pi * U(gen);
            const double dist = r * (0.2 + 0.6 * U(gen));
            set.spawn(0.0, 0.0, r, 0);
            set.spawn(dist * std::cos(ang), dist * std::sin(ang), r, 0);
            if (set.regions().size() != 3) return {false, "scenario " + std::to_string(k) + ": no overlap formed"};
            const VacantRegion ov = set.regions()[2];
            FineRegion fr;
            for (int j = 0; j < 3; ++j) {
                fr.H[j] = ov.H[j];
                fr.target[j] = ov.anchor[j];
                fr.out[j] = ov.anchor[j] > ov.H[j];
            }
            const double r_env = inradius(ov.anchor, n);
            set.advance_to(r_env / c + 1.0);
            const FineTimes f = integrate_fine(fr, w, b, c, r_env / c + 1.0, 1e-3);
            for (int j = 0; j < 3; ++j) {
                if (!fr.out[j]) continue;
                double ts = NAN;
                for (const auto& e : set.events())
                    if (e.kind == "switch" && e.region == ov.id && e.edge == j) ts = e.t;
                const double closed = (ov.anchor[j] - ov.H[j]) / (b + c);
                worst_closed = std::max(worst_closed, std::abs(ts - closed));
                worst_fine = std::max(worst_fine, std::abs(ts - f.switch_at[j]));
            }
            double tv = NAN;
            for (const auto& e : set.events())
                if (e.kind == "vanish" && e.region == ov.id) tv = e.t;
            worst_closed = std::max(worst_closed, std::abs(tv - r_env / c));
            worst_fine = std::max(worst_fine, std::abs(tv - f.vanish_at));
        }
        ++scenarios;
    }
    const bool ok = worst_closed <= 1e-9 && worst_fine <= 1e-9 && !std::isnan(worst_closed) && !std::isnan(worst_fine);
    return {ok, std::to_string(scenarios) + " scenarios, max |event - closed form| " + num(worst_closed) +
                    ", max |event - fine integrator| " + num(worst_fine)};
}

// ------------------------------------------------------------------ 10

Outcome containment_check() {
    const ErrorRateResult r = error_rate(ErrorRateConfig{});
    bool ok = true;
    std::string d;
    for (const auto& row : r.rows) {
        bool tests = true;
        for (const auto& t : row.tests) tests = tests && t.pass;
        ok = ok && row.violations == 0 && tests && row.rate <= row.bound;
        d += "L=" + std::to_string(row.L) + ": violations " + std::to_string(row.violations) + ", errors " +
             std::to_string(row.type1) + "+" + std::to_string(row.type2) + " over " +
             std::to_string(row.box_steps) + " box-steps, rate " + num(row.rate) + " <= bound " +
             num(row.bound) + "; ";
        for (const auto& t : row.tests)
            d += t.name + (t.pass ? " pass" : " FAIL") + " (p=" + num(t.statistic) + ") ";
    }
    return {ok, d};
}

// ------------------------------------------------------------------ 11

Outcome phase_scan_check() {
    PhaseScanConfig c;
    c.betas = {0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0};
    c.etas = {0.05, 0.1};
    c.horizon = 500;
    const PhaseScanResult all = phase_scan(c);
    c.init = ScanInit::FiniteSquare;
    const PhaseScanResult fin = phase_scan(c);
    bool mono = all.coupling_violations == 0 && fin.coupling_violations == 0;
    for (const auto* r : {&all, &fin})
        for (std::size_t k = 1; k < r->cells.size(); ++k)
            if (r->cells[k].eta == r->cells[k - 1].eta && r->cells[k].freq < r->cells[k - 1].freq) mono = false;
    bool order = true;
    std::string d;
    for (std::size_t e = 0; e < c.etas.size(); ++e) {
        const double ta = all.thresholds[e];
        const double tf = fin.thresholds[e];
        // A missing threshold means no grid beta survives: +infinity.
        const double a = std::isnan(ta) ? INFINITY : ta;
        const double f = std::isnan(tf) ? INFINITY : tf;
        order = order && f >= a;
        d += "eta=" + num(c.etas[e]) + ": all-ones " + num(a) + ", finite " + num(f) + "; ";
    }
    return {mono && order, d + "coupling violations " + std::to_string(all.coupling_violations) + "/" +
                               std::to_string(fin.coupling_violations)};
}

// ------------------------------------------------------------------ 12

std::map<std::string, std::string> data_files(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
        std::ifstream is(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        out[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return out;
}

Outcome reproducibility_check() {
    const fs::path root = fs::temp_directory_path() / "qcp_acceptance_repro";
    fs::remove_all(root);
    const std::vector<std::vector<std::string>> cmds{
        {"mean-field", "--beta", "1", "--eta", "0.1"},
        {"ide-run", "--nx", "50", "--ny", "50", "--steps", "4", "--taps", "2,4"},
        {"speed", "--angle", "0,60", "--tol", "0.05", "--front"},
        {"lattice-run", "--L", "20", "--W", "3", "--init", "product", "--steps", "6", "--snapshot-every", "3"},
        {"hydro", "--Ls", "20,40", "--steps", "2", "--groups", "2", "--nseeds", "2", "--ide-resolution", "20"},
        {"compare", "--L", "100", "--W", "8", "--steps", "7", "--hole-step", "5", "--hole-radius", "1"},
        {"phase-scan", "--betas", "0.3,0.8", "--etas", "0.1", "--L", "5", "--W", "4", "--horizon", "20",
         "--nseeds", "2"},
        {"error-rate", "--Ls", "50", "--W", "6", "--steps", "5", "--nseeds", "2", "--p5-samples", "100",
         "--p6-families", "10"},
    };
    std::string d;
    bool ok = true;
    for (const auto& cmd : cmds) {
        std::vector<std::map<std::string, std::string>> outs;
        for (const char* threads : {"1", "1", "3"}) {
            const fs::path dir = root / (cmd[0] + "_" + std::to_string(outs.size()));
            std::vector<std::string> args = cmd;
            for (const std::string& a : {std::string("--seed"), std::string("7"), std::string("--threads"),
                                         std::string(threads), std::string("--out"), dir.string()})
                args.push_back(a);
            std::ostringstream o, e;
            const int code = cli::run(args, o, e);
            if (code != 0) {
                ok = false;
                d += cmd[0] + " exit " + std::to_string(code) + " (" + e.str() + ") ";
            }
            outs.push_back(data_files(dir));
        }
        const bool same = !outs[0].empty() && outs[0] == outs[1] && outs[0] == outs[2];
        ok = ok && same;
        d += cmd[0] + (same ? " ok" : " DIFFERS") + "(" + std::to_string(outs[0].size()) + " files) ";
    }
    fs::remove_all(root);
    return {ok, d};
}

struct Criterion {
    int id;
    std::string name;
    double budget_s;  ///< 0: no runtime bound
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "equilibria", 1, equilibria_check},
        {2, "attractiveness", 120, attractiveness_check},
        {3, "1D/2D consistency", 0, plane_wave_check},
        {4, "Weinberger properties", 60, weinberger_check},
        {5, "speed oracle agreement", 300, speed_oracle_check},
        {6, "one-step moments", 180, moments_check},
        {7, "hydrodynamic convergence", 900, hydro_check},
        {8, "growth from a supercritical block", 120, growth_check},
        {9, "comparison geometry", 60, geometry_check},
        {10, "containment and error process", 1800, containment_check},
        {11, "phase-scan sanity", 1200, phase_scan_check},
        {12, "reproducibility", 0, reproducibility_check},
    };
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : all) {
        if (!pick.empty() && !pick.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget_s <= 0 || secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("[%s] %2d %s: %s; %.1fs%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                    secs, in_time ? "" : (" exceeds " + num(c.budget_s) + "s budget").c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
