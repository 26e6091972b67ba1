#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "qcp/cli.hpp"
#include "qcp/io.hpp"

using namespace qcp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qcp_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
    std::ostringstream o, e;
    const int code = cli::run(args, o, e);
    if (out) *out = o.str();
    return code;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("fmt round trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) CHECK(std::stod(fmt(v)) == v);
}

TEST_CASE("snapshot round trip") {
    InitSpec prod;
    prod.mode = InitMode::Product;
    prod.p = 0.45;
    prod.seed = 8;
    LatticeState s = init(prod, 17, 4);
    s.set_time(12);
    std::stringstream ss;
    write_snapshot(ss, s, SnapshotMeta{99, Params{0.8, 0.1}});
    SnapshotMeta meta;
    const LatticeState t = read_snapshot(ss, &meta);
    CHECK(t == s);
    CHECK(t.time() == 12);
    CHECK(meta.seed == 99);
    CHECK(meta.params.beta == 0.8);
    // A row that ends occupied and one that starts occupied.
    LatticeState u(2, 2);
    u.set(0, 0, true);
    u.set(3, 1, true);
    std::stringstream su;
    write_snapshot(su, u, SnapshotMeta{});
    CHECK(read_snapshot(su) == u);
}

TEST_CASE("malformed snapshots are rejected") {
    std::stringstream bad(R"({"L":2,"W":1,"n":0,"seed":0,"params":{"beta":1,"eta":0},"origin":[0,0]})"
                          "\n1 1\n3\n");
    CHECK_THROWS_AS(read_snapshot(bad), std::invalid_argument);
}

TEST_CASE("kernel spec json") {
    const KernelSpec g = build_kernel(KernelSpec::truncated_gaussian(0.3, 0.9));
    const KernelSpec h = kernel_spec_from_json(kernel_spec_to_json(g));
    CHECK(h.family == KernelFamily::TruncatedGaussian);
    CHECK(h.sigma == 0.3);
    CHECK(h.radius == 0.9);
    const KernelSpec pm = kernel_spec_from_json(R"({"family":"point-mass"})");
    CHECK(discretize(pm, 10).mass(0, 0) == 1.0);
}

TEST_CASE("manifest isolates timestamps") {
    const fs::path dir = scratch("manifest");
    RunManifest m;
    m.subcommand = "x";
    m.config_json = R"({"a":1})";
    m.config_hash = hex64(fnv1a64(m.config_json));
    m.started_at = "2000-01-01T00:00:00Z";
    write_manifest(dir / "m.json", m);
    const auto j = nlohmann::json::parse(slurp(dir / "m.json"));
    CHECK(j.at("timestamps").at("started_at") == "2000-01-01T00:00:00Z");
    CHECK(j.at("config").at("a") == 1);
    CHECK(!j.contains("started_at"));
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("mean-field prints the equilibria row") {
    const fs::path dir = scratch("mf");
    std::string out;
    CHECK(run_cli({"mean-field", "--beta", "1", "--eta", "0.1", "--out", dir.string()}, &out) == 0);
    std::istringstream row(out);
    double z, u, s;
    char c1, c2;
    row >> z >> c1 >> u >> c2 >> s;
    CHECK(z == 0.0);
    CHECK(u == doctest::Approx(0.5 * (1 - std::sqrt(1 - 4 * 0.1 / 0.9))));
    CHECK(s == doctest::Approx(0.5 * (1 + std::sqrt(1 - 4 * 0.1 / 0.9))));
    CHECK(fs::exists(dir / "trace.csv"));
    const auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(man.at("config").at("eta") == 0.1);
    CHECK(man.at("config_hash") == hex64(fnv1a64(man.at("config").dump())));
    CHECK(man.at("exit_code") == 0);
}

TEST_CASE("config file with flag override") {
    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    {
        std::ofstream(dir / "c.json") << R"({"beta": 0.9, "eta": 0.3, "steps": 3})";
    }
    std::string out;
    CHECK(run_cli({"mean-field", "--config", (dir / "c.json").string(), "--eta", "0.1", "--out",
                   (dir / "o").string()},
                  &out) == 0);
    const auto man = nlohmann::json::parse(slurp(dir / "o" / "manifest.json"));
    CHECK(man.at("config").at("beta") == 0.9);
    CHECK(man.at("config").at("eta") == 0.1);
    CHECK(man.at("config").at("steps") == 3);
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("codes");
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"mean-field", "--nope", "1"}) == 1);
    CHECK(run_cli({"mean-field", "--config", (dir / "missing.json").string()}) == 1);
    CHECK(run_cli({"mean-field", "--eta", "1.5", "--out", dir.string()}) == 1);
    fs::create_directories(dir);
    {
        std::ofstream(dir / "bad.json") << R"({"beta": 1, "gamma": 0.3})";
        std::ofstream(dir / "broken.json") << R"({"beta": )";
    }
    CHECK(run_cli({"mean-field", "--config", (dir / "bad.json").string(), "--out", dir.string()}) == 1);
    CHECK(run_cli({"mean-field", "--config", (dir / "broken.json").string(), "--out", dir.string()}) == 1);
    // Unreadable init file at run time is a configuration problem too.
    CHECK(run_cli({"ide-run", "--init", "csv", "--init-file", (dir / "none.csv").string(), "--out",
                   dir.string()}) == 1);
    CHECK(run_cli({"mean-field", "--help"}) == 0);
}

TEST_CASE("compare with assert passes on a punched hole") {
    const fs::path dir = scratch("cmp");
    CHECK(run_cli({"compare", "--L", "100", "--W", "8", "--steps", "7", "--hole-step", "5", "--hole-radius", "1",
                   "--assert", "--out", dir.string()}) == 0);
    const std::string errs = slurp(dir / "errors.csv");
    CHECK(errs.rfind("step,t,x,y,type,box\n", 0) == 0);
    CHECK(std::count(errs.begin(), errs.end(), '\n') > 1);
    const auto regions = nlohmann::json::parse(slurp(dir / "regions.json"));
    CHECK(regions.contains("regions"));
    CHECK(fs::exists(dir / "containment.csv"));
}

TEST_CASE("lattice snapshots reload") {
    const fs::path dir = scratch("lat");
    CHECK(run_cli({"lattice-run", "--L", "10", "--W", "2", "--steps", "4", "--snapshot-every", "2", "--init",
                   "product", "--out", dir.string()}) == 0);
    std::ifstream is(dir / "snapshots" / "snap_4.txt");
    const LatticeState s = read_snapshot(is);
    CHECK(s.time() == 4);
    CHECK(s.N() == 20);
}

}  // TEST_SUITE
