#include "qcp/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qcp {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
    nlohmann::json j;
    j["subcommand"] = m.subcommand;
    j["config_path"] = m.config_path;
    j["config"] = m.config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(m.config_json);
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["code_version"] = m.code_version;
    j["timestamps"] = {{"started_at", m.started_at}, {"finished_at", m.finished_at}};
    j["outputs"] = m.outputs;
    j["exit_code"] = m.exit_code;
    write_text(path, j.dump(2) + "\n");
}

std::string kernel_spec_to_json(const KernelSpec& k) {
    nlohmann::json j;
    j["family"] = to_string(k.family);
    switch (k.family) {
    case KernelFamily::UniformSquare: j["params"] = {{"radius", k.radius}}; break;
    case KernelFamily::TruncatedGaussian: j["params"] = {{"sigma", k.sigma}, {"radius", k.radius}}; break;
    case KernelFamily::Table: j["params"] = {{"spacing", k.spacing}, {"weights", k.table}}; break;
    }
    return j.dump();
}

KernelSpec kernel_spec_from_json(std::string_view text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const std::string fam = j.at("family").get<std::string>();
    const nlohmann::json p = j.value("params", nlohmann::json::object());
    KernelSpec k;
    if (fam == "point-mass") k = KernelSpec::point_mass();
    else if (kernel_family_from_string(fam) == KernelFamily::UniformSquare)
        k = KernelSpec::uniform_square(p.value("radius", 1.0));
    else if (kernel_family_from_string(fam) == KernelFamily::TruncatedGaussian)
        k = KernelSpec::truncated_gaussian(p.at("sigma").get<double>(), p.at("radius").get<double>());
    else
        k = KernelSpec::from_table(p.at("spacing").get<double>(),
                                   p.at("weights").get<std::vector<std::vector<double>>>());
    return build_kernel(k);
}

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_snapshot(std::ostream& os, const LatticeState& s, const SnapshotMeta& meta) {
    nlohmann::json h;
    h["L"] = s.L();
    h["W"] = s.W();
    h["n"] = s.time();
    h["seed"] = meta.seed;
    h["params"] = {{"beta", meta.params.beta}, {"eta", meta.params.eta}};
    h["origin"] = {s.origin_x(), s.origin_y()};
    h["encoding"] = "rle-rows";
    os << h.dump() << '\n';
    for (int j = 0; j < s.N(); ++j) {
        bool cur = false;
        int run = 0;
        bool first = true;
        for (int i = 0; i < s.N(); ++i) {
            const bool v = s.get(i, j);
            if (v == cur) {
                ++run;
            } else {
                os << (first ? "" : " ") << run;
                first = false;
                cur = v;
                run = 1;
            }
        }
        os << (first ? "" : " ") << run << '\n';
    }
}

LatticeState read_snapshot(std::istream& is, SnapshotMeta* meta) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("snapshot: missing header");
    const nlohmann::json h = nlohmann::json::parse(line);
    LatticeState s(h.at("L").get<int>(), h.at("W").get<int>(), h.at("origin").at(0).get<double>(),
                   h.at("origin").at(1).get<double>());
    s.set_time(h.at("n").get<long>());
    if (meta) {
        meta->seed = h.at("seed").get<std::uint64_t>();
        meta->params.beta = h.at("params").at("beta").get<double>();
        meta->params.eta = h.at("params").at("eta").get<double>();
    }
    for (int j = 0; j < s.N(); ++j) {
        if (!std::getline(is, line)) throw std::invalid_argument("snapshot: truncated");
        std::istringstream ls(line);
        int i = 0;
        bool cur = false;
        long run = 0;
        while (ls >> run) {
            if (run < 0 || i + run > s.N()) throw std::invalid_argument("snapshot: bad run length");
            for (long k = 0; k < run; ++k) s.set(i++, j, cur);
            cur = !cur;
        }
        if (i != s.N()) throw std::invalid_argument("snapshot: row length mismatch");
    }
    return s;
}

}  // namespace qcp
