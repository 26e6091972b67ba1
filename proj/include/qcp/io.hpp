#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qcp/kernel.hpp"
#include "qcp/lattice.hpp"
#include "qcp/mean_field.hpp"

namespace qcp {

inline constexpr const char* kCodeVersion = "qcp 0.1.0";

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

struct RunManifest {
    std::string subcommand;
    std::string config_path;   ///< empty when no config file was given
    std::string config_json;   ///< effective configuration (file merged with flags)
    std::string config_hash;   ///< fnv1a64 of config_json, hex
    std::uint64_t seed = 0;
    std::string code_version = kCodeVersion;
    std::string started_at;    ///< UTC ISO-8601
    std::string finished_at;
    std::vector<std::string> outputs;
    int exit_code = 0;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
std::string utc_timestamp();

/// Lattice snapshot: one JSON header line {L, W, n, seed, params, origin},
/// then one line per row of alternating run lengths starting with a run of
/// vacant sites (possibly 0).
struct SnapshotMeta {
    std::uint64_t seed = 0;
    Params params;
};
void write_snapshot(std::ostream& os, const LatticeState& s, const SnapshotMeta& meta);
LatticeState read_snapshot(std::istream& is, SnapshotMeta* meta = nullptr);

/// Kernel spec as {"family": ..., "params": {...}}; families "uniform-square"
/// (radius), "truncated-gaussian" (sigma, radius), "table" (spacing, weights),
/// and "point-mass" as shorthand for a one-entry table.
std::string kernel_spec_to_json(const KernelSpec& k);
KernelSpec kernel_spec_from_json(std::string_view text);

/// Shortest decimal that round-trips, for CSV output.
std::string fmt(double v);

/// Write `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace qcp
