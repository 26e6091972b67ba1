#include "qcp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "qcp/comparison.hpp"
#include "qcp/experiments.hpp"
#include "qcp/ide.hpp"
#include "qcp/io.hpp"
#include "qcp/lattice.hpp"
#include "qcp/mean_field.hpp"
#include "qcp/wavespeed.hpp"

namespace qcp::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OptDef {
    std::string key;
    json def;
    std::string help;
    bool flag = false;
};

struct Context {
    json cfg;
    fs::path out_dir;
    std::vector<std::string> outputs;
    std::ostream* out;
    int threads = 1;
    std::uint64_t seed = 1;

    void write(const std::string& name, const std::string& text) {
        write_text(out_dir / name, text);
        outputs.push_back(name);
    }
};

// ---- typed access to the effective config

double get_d(const json& c, const std::string& k) {
    const json& v = c.at(k);
    if (v.is_string()) {
        try {
            return std::stod(v.get<std::string>());
        } catch (const std::exception&) {
            throw ConfigError("'" + k + "' is not a number");
        }
    }
    if (!v.is_number()) throw ConfigError("'" + k + "' is not a number");
    return v.get<double>();
}

long get_i(const json& c, const std::string& k) {
    const double d = get_d(c, k);
    if (d != std::floor(d)) throw ConfigError("'" + k + "' must be an integer");
    return static_cast<long>(d);
}

std::string get_s(const json& c, const std::string& k) {
    const json& v = c.at(k);
    return v.is_string() ? v.get<std::string>() : v.dump();
}

bool get_b(const json& c, const std::string& k) {
    const json& v = c.at(k);
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number()) return v.get<double>() != 0.0;
    const std::string s = v.get<std::string>();
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0" || s.empty()) return false;
    throw ConfigError("'" + k + "' is not a boolean");
}

std::vector<double> get_list(const json& c, const std::string& k) {
    const json& v = c.at(k);
    std::vector<double> out;
    if (v.is_array()) {
        for (const auto& e : v) out.push_back(e.is_string() ? std::stod(e.get<std::string>()) : e.get<double>());
        return out;
    }
    if (v.is_number()) return {v.get<double>()};
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("'" + k + "' has a non-numeric entry '" + item + "'");
        }
    }
    return out;
}

std::vector<std::uint64_t> get_seeds(const Context& ctx) {
    std::vector<double> raw = get_list(ctx.cfg, "seeds");
    std::vector<std::uint64_t> seeds;
    if (raw.empty()) {
        const long n = get_i(ctx.cfg, "nseeds");
        if (n < 1) throw ConfigError("'nseeds' must be >= 1");
        for (long i = 0; i < n; ++i) seeds.push_back(ctx.seed + static_cast<std::uint64_t>(i));
    } else {
        for (double d : raw) {
            if (d < 0 || d != std::floor(d)) throw ConfigError("seeds must be nonnegative integers");
            seeds.push_back(static_cast<std::uint64_t>(d));
        }
    }
    check_distinct_seeds(seeds);
    return seeds;
}

Params get_params(const json& c) {
    Params p{get_d(c, "beta"), get_d(c, "eta")};
    validate(p);
    return p;
}

KernelSpec get_kernel(const json& c) {
    const json& v = c.at("kernel");
    if (v.is_object()) return kernel_spec_from_json(v.dump());
    const std::string s = v.get<std::string>();
    if (!s.empty() && s.front() == '{') return kernel_spec_from_json(s);
    if (s == "uniform-square") return build_kernel(KernelSpec::uniform_square(get_d(c, "kernel-radius")));
    if (s == "truncated-gaussian")
        return build_kernel(KernelSpec::truncated_gaussian(0.5 * get_d(c, "kernel-radius"), get_d(c, "kernel-radius")));
    if (s == "point-mass") return build_kernel(KernelSpec::point_mass());
    throw ConfigError("unknown kernel '" + s + "'");
}

std::vector<OptDef> kernel_opts() {
    return {{"beta", 1.0, "birth probability"},
            {"eta", 0.05, "death probability"},
            {"kernel", "uniform-square", "kernel family name or JSON {family, params}"},
            {"kernel-radius", 1.0, "radius for named kernel families"}};
}

// ---- subcommands

void cmd_mean_field(Context& ctx) {
    const Params p = get_params(ctx.cfg);
    const Equilibria eq = equilibria(p);
    std::string eqcsv = "value,stability\n";
    std::string row;
    for (std::size_t i = 0; i < eq.roots.size(); ++i) {
        const auto& r = eq.roots[i];
        eqcsv += fmt(r.value) + "," + (r.stability == Stability::Stable ? "stable" : "unstable") + "\n";
        row += (i ? "," : "") + fmt(r.value);
    }
    const auto tr = mean_field_trace(p, get_d(ctx.cfg, "v0"), static_cast<int>(get_i(ctx.cfg, "steps")));
    std::string trcsv = "n,v\n";
    for (std::size_t n = 0; n < tr.size(); ++n) trcsv += std::to_string(n) + "," + fmt(tr[n]) + "\n";
    ctx.write("equilibria.csv", eqcsv);
    ctx.write("trace.csv", trcsv);
    *ctx.out << row << "\n";
}

Field2D ide_initial(const Context& ctx) {
    const json& c = ctx.cfg;
    const std::string init = get_s(c, "init");
    if (init == "csv") {
        std::ifstream is(get_s(c, "init-file"));
        if (!is) throw ConfigError("cannot open init-file '" + get_s(c, "init-file") + "'");
        return read_field_csv(is);
    }
    const double h = get_d(c, "spacing");
    const int nx = static_cast<int>(get_i(c, "nx"));
    const int ny = static_cast<int>(get_i(c, "ny"));
    const std::string bnd = get_s(c, "boundary");
    Boundary b;
    if (bnd == "periodic") b = Boundary::Periodic;
    else if (bnd == "clamped") b = Boundary::Clamped;
    else throw ConfigError("boundary must be periodic or clamped");
    const double value = get_d(c, "init-value");
    const double radius = get_d(c, "init-radius");
    const double clamp = get_d(c, "clamp");
    std::function<double(double, double)> f;
    if (init == "constant") f = [=](double, double) { return value; };
    else if (init == "bump")
        f = [=](double x, double y) { return std::abs(x) <= radius && std::abs(y) <= radius ? value : clamp; };
    else if (init == "cosine")
        f = [=](double x, double y) {
            return value + 0.05 * std::cos(std::numbers::pi * x) * std::cos(std::numbers::pi * y);
        };
    else throw ConfigError("init must be constant, bump, cosine or csv");
    return Field2D::from_function(get_d(c, "x0"), get_d(c, "y0"), h, nx, ny, b, f, clamp);
}

void cmd_ide_run(Context& ctx) {
    const Params p = get_params(ctx.cfg);
    const DiscreteKernel dk = discretize(get_kernel(ctx.cfg), static_cast<int>(get_i(ctx.cfg, "resolution")));
    const Field2D u0 = ide_initial(ctx);
    const int steps = static_cast<int>(get_i(ctx.cfg, "steps"));
    std::vector<int> taps;
    for (double t : get_list(ctx.cfg, "taps")) taps.push_back(static_cast<int>(t));
    if (taps.empty()) taps.push_back(steps);
    const auto fields = evolve(u0, dk, p, steps, taps, ctx.threads);
    for (std::size_t i = 0; i < taps.size(); ++i) {
        std::ostringstream os;
        write_field_csv(os, fields[i]);
        ctx.write("field_" + std::to_string(taps[i]) + ".csv", os.str());
    }
    *ctx.out << "steps=" << steps << " taps=" << taps.size() << "\n";
}

void cmd_speed(Context& ctx) {
    const Params p = get_params(ctx.cfg);
    const DiscreteKernel dk = discretize(get_kernel(ctx.cfg), static_cast<int>(get_i(ctx.cfg, "resolution")));
    SpeedOptions opt;
    opt.max_iter = static_cast<int>(get_i(ctx.cfg, "max-iter"));
    opt.threads = ctx.threads;
    const double tol = get_d(ctx.cfg, "tol");
    std::string csv = "angle,c_star,bracket_lo,bracket_hi,method\n";
    for (double a : get_list(ctx.cfg, "angle")) {
        const Direction d = Direction::from_degrees(a);
        const SpeedResult r = estimate_cstar(d, dk, p, tol, opt);
        csv += fmt(a) + "," + fmt(r.c_star) + "," + fmt(r.c_lo) + "," + fmt(r.c_hi) + ",weinberger\n";
        *ctx.out << "angle=" << fmt(a) << " c*=" << fmt(r.c_star) << " bracket=[" << fmt(r.c_lo) << ","
                 << fmt(r.c_hi) << "]\n";
        if (get_b(ctx.cfg, "front")) {
            const double fs = front_speed_tracking(d, dk, p, static_cast<int>(get_i(ctx.cfg, "front-steps")));
            csv += fmt(a) + "," + fmt(fs) + "," + fmt(fs) + "," + fmt(fs) + ",front_tracking\n";
        }
    }
    ctx.write("speed.csv", csv);
}

void cmd_lattice_run(Context& ctx) {
    const Params p = get_params(ctx.cfg);
    const int L = static_cast<int>(get_i(ctx.cfg, "L"));
    const int W = static_cast<int>(get_i(ctx.cfg, "W"));
    const DiscreteKernel dk = discretize(get_kernel(ctx.cfg), L);
    const std::string mode = get_s(ctx.cfg, "init");
    LatticeState s;
    if (mode == "all-ones") {
        s = init(InitSpec{}, L, W);
    } else if (mode == "product") {
        InitSpec spec;
        spec.mode = InitMode::Product;
        spec.p = get_d(ctx.cfg, "p");
        spec.seed = derive_key(ctx.seed, 101);
        s = init(spec, L, W);
    } else if (mode == "square") {
        const double side = get_d(ctx.cfg, "square-side");
        s = LatticeState(L, W);
        const double c0 = 0.5 * (W - side);
        const double c1 = 0.5 * (W + side);
        for (int j = 0; j < s.N(); ++j)
            for (int i = 0; i < s.N(); ++i)
                if (s.x(i) >= c0 && s.x(i) < c1 && s.y(j) >= c0 && s.y(j) < c1) s.set(i, j, true);
    } else {
        throw ConfigError("init must be all-ones, product or square");
    }
    const int steps = static_cast<int>(get_i(ctx.cfg, "steps"));
    const int every = static_cast<int>(get_i(ctx.cfg, "snapshot-every"));
    StepOptions so;
    so.threads = ctx.threads;
    std::string csv = "n,density,births,deaths\n";
    csv += "0," + fmt(s.density()) + ",0,0\n";
    const SnapshotMeta meta{ctx.seed, p};
    auto snap = [&](long n) {
        std::ostringstream os;
        write_snapshot(os, s, meta);
        ctx.write("snapshots/snap_" + std::to_string(n) + ".txt", os.str());
    };
    if (every > 0) snap(0);
    for (int n = 1; n <= steps; ++n) {
        const StepReport r = step(s, dk, p, ctx.seed, so);
        csv += std::to_string(n) + "," + fmt(s.density()) + "," + std::to_string(r.births) + "," +
               std::to_string(r.deaths) + "\n";
        if (every > 0 && n % every == 0) snap(n);
    }
    ctx.write("density.csv", csv);
    *ctx.out << "final density " << fmt(s.density()) << "\n";
}

void cmd_hydro(Context& ctx) {
    HydroConfig hc;
    hc.params = get_params(ctx.cfg);
    hc.kernel = get_kernel(ctx.cfg);
    hc.Ls.clear();
    for (double L : get_list(ctx.cfg, "Ls")) hc.Ls.push_back(static_cast<int>(L));
    hc.gamma = get_d(ctx.cfg, "gamma");
    hc.W = static_cast<int>(get_i(ctx.cfg, "W"));
    hc.K = get_d(ctx.cfg, "K");
    hc.steps = static_cast<int>(get_i(ctx.cfg, "steps"));
    hc.seeds = get_seeds(ctx);
    hc.groups = static_cast<int>(get_i(ctx.cfg, "groups"));
    hc.ide_resolution = static_cast<int>(get_i(ctx.cfg, "ide-resolution"));
    hc.threads = ctx.threads;
    const HydroResult r = hydro_convergence(hc, default_hydro_u0(hc));
    std::string csv = "group,L,side,err_S,err_R\n";
    for (const auto& row : r.rows)
        csv += std::to_string(row.group) + "," + std::to_string(row.L) + "," + std::to_string(row.side) +
               "," + fmt(row.err_S) + "," + fmt(row.err_R) + "\n";
    ctx.write("hydro.csv", csv);
    *ctx.out << "decreasing groups " << r.decreasing_groups << "/" << hc.groups << "\n";
}

void cmd_compare(Context& ctx) {
    const Params p = get_params(ctx.cfg);
    if (!p.bistable()) throw ConfigError("compare needs bistable parameters");
    const KernelSpec ks = get_kernel(ctx.cfg);
    ComparisonRunOptions o;
    o.L = static_cast<int>(get_i(ctx.cfg, "L"));
    o.W = static_cast<int>(get_i(ctx.cfg, "W"));
    o.gamma = get_d(ctx.cfg, "gamma");
    o.steps = static_cast<int>(get_i(ctx.cfg, "steps"));
    o.seed = ctx.seed;
    o.threads = ctx.threads;
    o.hole_step = static_cast<int>(get_i(ctx.cfg, "hole-step"));
    o.hole_radius = get_d(ctx.cfg, "hole-radius");
    const DiscreteKernel dk_phi = discretize(ks, static_cast<int>(get_i(ctx.cfg, "phi-resolution")));
    PhiOptions po;
    po.speed.threads = ctx.threads;
    const PhiData phi = build_phi(default_normals(), dk_phi, p, po);
    const DiscreteKernel dk = discretize(ks, o.L);
    const ComparisonConfig cc = make_comparison_config(phi, dk.support_diameter(), o.L, o.gamma);

    json consts;
    consts["alpha"] = cc.alpha;
    consts["c"] = cc.c;
    consts["b"] = cc.b;
    consts["r"] = cc.r;
    consts["m"] = cc.m;
    consts["l"] = cc.l;
    consts["delta1"] = cc.delta1;
    consts["delta2"] = cc.delta2;
    consts["error_bound"] = cc.error_bound;
    consts["speeds"] = phi.alphas;
    ctx.write("comparison_constants.json", consts.dump(2) + "\n");

    const ComparisonRunResult r = run_comparison(dk, p, phi, cc, o);
    std::ostringstream cs;
    write_containment_csv_header(cs);
    for (const auto& rep : r.reports) write_containment_csv_row(cs, rep);
    ctx.write("containment.csv", cs.str());
    std::string ecsv = "step,t,x,y,type,box\n";
    for (const auto& e : r.errors)
        ecsv += std::to_string(e.step) + "," + fmt(e.t) + "," + fmt(e.x) + "," + fmt(e.y) + "," +
                (e.type == ErrorType::I ? "I" : "II") + "," + std::to_string(e.box) + "\n";
    ctx.write("errors.csv", ecsv);
    std::ostringstream rs;
    write_regions_json(rs, r.final_regions);
    ctx.write("regions.json", rs.str());
    *ctx.out << "box_steps=" << r.box_steps << " type1=" << r.type1 << " type2=" << r.type2
             << " overlaps=" << r.overlaps << " violations=" << r.violations << "\n";
    if (get_b(ctx.cfg, "assert") && r.violations > 0)
        throw CheckViolation("containment violated in " + std::to_string(r.violations) + " box-steps");
}

void cmd_phase_scan(Context& ctx) {
    PhaseScanConfig pc;
    pc.betas = get_list(ctx.cfg, "betas");
    pc.etas = get_list(ctx.cfg, "etas");
    pc.kernel = get_kernel(ctx.cfg);
    pc.L = static_cast<int>(get_i(ctx.cfg, "L"));
    pc.W = static_cast<int>(get_i(ctx.cfg, "W"));
    pc.horizon = static_cast<int>(get_i(ctx.cfg, "horizon"));
    const std::string init = get_s(ctx.cfg, "init");
    if (init == "all-ones") pc.init = ScanInit::AllOnes;
    else if (init == "finite-square") pc.init = ScanInit::FiniteSquare;
    else throw ConfigError("init must be all-ones or finite-square");
    pc.square_side = get_d(ctx.cfg, "square-side");
    pc.seeds = get_seeds(ctx);
    pc.threads = ctx.threads;
    const PhaseScanResult r = phase_scan(pc);
    std::string csv = "# survival proxy: " +
                      std::string(pc.init == ScanInit::AllOnes
                                      ? "density above rho_u/2 (1/4 if not bistable) at horizon"
                                      : "nonextinction at horizon") +
                      "; horizon=" + std::to_string(pc.horizon) + "\n";
    csv += "beta,eta,survived,trials,freq\n";
    for (const auto& c : r.cells)
        csv += fmt(c.beta) + "," + fmt(c.eta) + "," + std::to_string(c.survived) + "," +
               std::to_string(c.trials) + "," + fmt(c.freq) + "\n";
    ctx.write("phase_scan.csv", csv);
    std::string tcsv = "eta,beta_threshold\n";
    std::vector<double> etas = pc.etas;
    for (std::size_t e = 0; e < etas.size(); ++e)
        tcsv += fmt(etas[e]) + "," + (std::isnan(r.thresholds[e]) ? std::string("nan") : fmt(r.thresholds[e])) + "\n";
    ctx.write("thresholds.csv", tcsv);
    *ctx.out << "cells=" << r.cells.size() << " coupling_violations=" << r.coupling_violations << "\n";
}

void cmd_error_rate(Context& ctx) {
    ErrorRateConfig ec;
    ec.params = get_params(ctx.cfg);
    ec.kernel = get_kernel(ctx.cfg);
    ec.Ls.clear();
    for (double L : get_list(ctx.cfg, "Ls")) ec.Ls.push_back(static_cast<int>(L));
    ec.gamma = get_d(ctx.cfg, "gamma");
    ec.W = static_cast<int>(get_i(ctx.cfg, "W"));
    ec.steps = static_cast<int>(get_i(ctx.cfg, "steps"));
    ec.seeds = get_seeds(ctx);
    ec.phi_kernel_resolution = static_cast<int>(get_i(ctx.cfg, "phi-resolution"));
    ec.p5_samples = static_cast<int>(get_i(ctx.cfg, "p5-samples"));
    ec.p6_families = static_cast<int>(get_i(ctx.cfg, "p6-families"));
    ec.test_seed = ctx.seed;
    ec.threads = ctx.threads;
    const ErrorRateResult r = error_rate(ec);
    std::string csv = "L,box_steps,type1,type2,rate,bound,violations,overlaps\n";
    std::string tcsv = "L,test,tail_probability,level,pass,detail\n";
    for (const auto& row : r.rows) {
        csv += std::to_string(row.L) + "," + std::to_string(row.box_steps) + "," + std::to_string(row.type1) +
               "," + std::to_string(row.type2) + "," + fmt(row.rate) + "," + fmt(row.bound) + "," +
               std::to_string(row.violations) + "," + std::to_string(row.overlaps) + "\n";
        for (const auto& t : row.tests)
            tcsv += std::to_string(row.L) + "," + t.name + "," + fmt(t.statistic) + "," + fmt(t.level) + "," +
                    (t.pass ? "1" : "0") + ",\"" + t.detail + "\"\n";
        *ctx.out << "L=" << row.L << " rate=" << fmt(row.rate) << " bound=" << fmt(row.bound)
                 << " violations=" << row.violations << "\n";
    }
    ctx.write("error_rate.csv", csv);
    ctx.write("property_tests.csv", tcsv);
}

struct Subcommand {
    std::string name;
    std::string help;
    std::vector<OptDef> opts;
    std::function<void(Context&)> fn;
};

std::vector<Subcommand> subcommands() {
    auto with_kernel = [](std::vector<OptDef> extra) {
        auto v = kernel_opts();
        v.insert(v.end(), extra.begin(), extra.end());
        return v;
    };
    return {
        {"mean-field", "equilibria and a trajectory of the spatially constant recursion",
         {{"beta", 1.0, "birth probability"},
          {"eta", 0.05, "death probability"},
          {"v0", 0.6, "trajectory start"},
          {"steps", 50, "trajectory length"}},
         cmd_mean_field},
        {"ide-run", "iterate the density recursion on a grid",
         with_kernel({{"resolution", 20, "kernel lattice points per unit length"},
                      {"spacing", 0.05, "grid spacing"},
                      {"nx", 200, "grid columns"},
                      {"ny", 200, "grid rows"},
                      {"x0", -5.0, "grid origin x"},
                      {"y0", -5.0, "grid origin y"},
                      {"boundary", "clamped", "periodic or clamped"},
                      {"clamp", 0.0, "value outside a clamped grid"},
                      {"init", "bump", "constant, bump, cosine or csv"},
                      {"init-value", 0.5, "level of the initial field"},
                      {"init-radius", 1.0, "half side of the bump"},
                      {"init-file", "", "field CSV for init=csv"},
                      {"steps", 10, "iterations"},
                      {"taps", "", "comma-separated times to write (default: last)"}}),
         cmd_ide_run},
        {"speed", "spreading speed c*(angle) by Weinberger bracketing",
         with_kernel({{"resolution", 20, "kernel lattice points per unit length"},
                      {"angle", "0", "direction(s) in degrees, comma-separated"},
                      {"tol", 0.01, "bracket width"},
                      {"max-iter", 200000, "iteration cap per probe"},
                      {"front", false, "also report front-tracking speed", true},
                      {"front-steps", 400, "front tracking iterations"}}),
         cmd_speed},
        {"lattice-run", "simulate the particle system on a torus",
         with_kernel({{"L", 50, "lattice points per unit length"},
                      {"W", 4, "torus side"},
                      {"init", "all-ones", "all-ones, product or square"},
                      {"p", 0.5, "product density"},
                      {"square-side", 1.0, "side of the centered occupied square"},
                      {"steps", 20, "steps"},
                      {"snapshot-every", 0, "snapshot period (0: none)"}}),
         cmd_lattice_run},
        {"hydro", "particle box densities against the density recursion",
         with_kernel({{"Ls", "50,100,200,400", "lattice resolutions"},
                      {"gamma", 0.3, "box exponent"},
                      {"W", 2, "torus side"},
                      {"K", 0.5, "scored box corners in [-K, K]^2"},
                      {"steps", 5, "steps"},
                      {"seeds", "", "seeds (default: seed, seed+1, ...)"},
                      {"nseeds", 4, "seeds per group when seeds is empty"},
                      {"groups", 10, "seed groups"},
                      {"ide-resolution", 50, "reference grid points per unit length"}}),
         cmd_hydro},
        {"compare", "coupled lattice and triangle-process run with containment checks",
         with_kernel({{"L", 200, "lattice points per unit length"},
                      {"W", 8, "torus side"},
                      {"gamma", 0.3, "box exponent"},
                      {"steps", 300, "steps"},
                      {"phi-resolution", 20, "kernel resolution for the phi construction"},
                      {"hole-step", -1, "step at which a hole is punched (-1: never)"},
                      {"hole-radius", 0.0, "radius of the punched hole"},
                      {"assert", false, "exit 3 on any containment violation", true}}),
         cmd_compare},
        {"phase-scan", "survival frequencies over a (beta, eta) grid",
         {{"kernel", "uniform-square", "kernel family name or JSON {family, params}"},
          {"kernel-radius", 1.0, "radius for named kernel families"},
          {"betas", "0.2,0.3,0.4,0.5,0.6,0.8,1.0", "beta grid"},
          {"etas", "0.05,0.1", "eta grid"},
          {"L", 10, "lattice points per unit length"},
          {"W", 8, "torus side"},
          {"horizon", 500, "steps"},
          {"init", "all-ones", "all-ones or finite-square"},
          {"square-side", 2.0, "side of the initial square"},
          {"seeds", "", "seeds (default: seed, seed+1, ...)"},
          {"nseeds", 5, "number of seeds when seeds is empty"}},
         cmd_phase_scan},
        {"error-rate", "Type I/II error rates and point-process property tests",
         with_kernel({{"Ls", "200", "lattice resolutions"},
                      {"gamma", 0.3, "box exponent"},
                      {"W", 8, "torus side"},
                      {"steps", 300, "steps"},
                      {"seeds", "", "seeds (default: seed, seed+1, ...)"},
                      {"nseeds", 10, "number of seeds when seeds is empty"},
                      {"phi-resolution", 20, "kernel resolution for the phi construction"},
                      {"p5-samples", 2000, "small boxes per run for the two-point test"},
                      {"p6-families", 100, "cube families for the product-bound test"}}),
         cmd_error_rate},
    };
}

// Flag text that parses as a JSON number, boolean or object is stored as
// such; anything else stays a string.
json flag_value(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (!j.is_discarded() && (j.is_number() || j.is_boolean() || j.is_object() || j.is_array())) return j;
    return text;
}

json load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    try {
        json j = json::parse(is);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"qcp: quadratic contact process experiments"};
    app.require_subcommand(1);
    auto subs = subcommands();
    struct Bound {
        std::map<std::string, std::string> values;
        std::map<std::string, bool> flags;
        std::string config;
        std::string outdir;
        std::uint64_t seed = 1;
        int threads = 1;
    };
    std::vector<Bound> bound(subs.size());
    std::vector<CLI::App*> apps;
    for (std::size_t k = 0; k < subs.size(); ++k) {
        CLI::App* sub = app.add_subcommand(subs[k].name, subs[k].help);
        Bound& b = bound[k];
        sub->add_option("--config", b.config, "JSON config; flags override its keys");
        sub->add_option("--seed", b.seed, "master seed")->capture_default_str();
        sub->add_option("--threads", b.threads, "worker threads (results do not depend on it)")
            ->capture_default_str();
        sub->add_option("--out", b.outdir, "output directory (else $QCP_OUT_DIR, config 'out', ./qcp_out)");
        for (const auto& o : subs[k].opts) {
            if (o.flag) sub->add_flag("--" + o.key, b.flags[o.key], o.help);
            else sub->add_option("--" + o.key, b.values[o.key], o.help)
                     ->default_str(o.def.is_string() ? o.def.get<std::string>() : o.def.dump());
        }
        apps.push_back(sub);
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    std::size_t k = 0;
    while (k < apps.size() && !apps[k]->parsed()) ++k;
    const Subcommand& sc = subs[k];
    Bound& b = bound[k];

    RunManifest man;
    man.subcommand = sc.name;
    man.started_at = utc_timestamp();
    Context ctx;
    ctx.out = &out;
    int code = kOk;
    try {
        json cfg = json::object();
        for (const auto& o : sc.opts) cfg[o.key] = o.def;
        cfg["seed"] = 1;
        cfg["threads"] = 1;
        std::string out_from_cfg;
        if (!b.config.empty()) {
            man.config_path = b.config;
            json file = load_config(b.config);
            for (auto it = file.begin(); it != file.end(); ++it) {
                if (it.key() == "out") {
                    out_from_cfg = it.value().get<std::string>();
                    continue;
                }
                if (!cfg.contains(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
                cfg[it.key()] = it.value();
            }
        }
        for (const auto& o : sc.opts) {
            CLI::Option* opt = apps[k]->get_option("--" + o.key);
            if (opt->count() == 0) continue;
            if (o.flag) cfg[o.key] = b.flags[o.key];
            else cfg[o.key] = flag_value(b.values[o.key]);
        }
        if (apps[k]->get_option("--seed")->count()) cfg["seed"] = b.seed;
        if (apps[k]->get_option("--threads")->count()) cfg["threads"] = b.threads;
        ctx.seed = static_cast<std::uint64_t>(get_i(cfg, "seed"));
        ctx.threads = static_cast<int>(get_i(cfg, "threads"));
        if (ctx.threads < 1) throw ConfigError("threads must be >= 1");
        ctx.cfg = cfg;
        man.config_json = cfg.dump();
        man.config_hash = hex64(fnv1a64(man.config_json));
        man.seed = ctx.seed;

        if (!b.outdir.empty()) ctx.out_dir = b.outdir;
        else if (const char* env = std::getenv("QCP_OUT_DIR"); env && *env) ctx.out_dir = env;
        else if (!out_from_cfg.empty()) ctx.out_dir = out_from_cfg;
        else ctx.out_dir = "qcp_out";
        fs::create_directories(ctx.out_dir);

        sc.fn(ctx);
    } catch (const CheckViolation& e) {
        err << "check failed: " << e.what() << "\n";
        code = kCheckViolation;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        code = kConfigError;
    } catch (const json::exception& e) {
        err << "config error: " << e.what() << "\n";
        code = kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        code = kConfigError;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << "\n";
        code = kRuntimeFailure;
    }
    man.outputs = ctx.outputs;
    man.finished_at = utc_timestamp();
    man.exit_code = code;
    if (!ctx.out_dir.empty()) {
        try {
            write_manifest(ctx.out_dir / "manifest.json", man);
        } catch (const std::exception& e) {
            err << "could not write manifest: " << e.what() << "\n";
            if (code == kOk) code = kRuntimeFailure;
        }
    }
    return code;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace qcp::cli
