#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qcp/field.hpp"
#include "qcp/lattice.hpp"
#include "qcp/wavespeed.hpp"

namespace qcp {

/// Constants of the triangle process derived from PhiData and the box scale.
struct ComparisonConfig {
    double alpha = 0.0;   ///< good/bad density threshold, phi(-inf)
    double c = 0.0;       ///< inward edge rate
    double b = 0.0;       ///< outward (interaction) rate, 2 d(k)
    double r = 0.0;       ///< inradius of spawned triangles
    double dB = 0.0;      ///< box diameter
    double m = 0.0;       ///< phi threshold abscissa (see PhiData)
    double l = 0.0;
    double delta1 = 0.0;  ///< (Q(alpha) - alpha)/2
    double delta2 = 0.0;  ///< sup_{s<0,i} (Q_i[phi](s) - phi(s)) plus a hair
    double C1 = 0.0;      ///< max(1, beta^2) / delta1^2
    double C2 = 0.0;
    double error_bound = 0.0;  ///< max(C1, C2) L^(2 gamma - 2)
    std::array<Direction, 3> normals;
    int L = 1;
    double gamma = 0.3;
};

/// r = ceil(l + d(B) + c + d(k)) (or the bare sum when ceil_r is false).
ComparisonConfig make_comparison_config(const PhiData& phi, double kernel_diameter, int L,
                                        double gamma, bool ceil_r = true);

enum class RegionKind { Spawned, Overlap };
std::string to_string(RegionKind k);

/// Triangle {x : n_j . x <= H_j, j = 0, 1, 2} with outward normals n_j. Each
/// edge moves inward at rate c, or outward at rate b toward a target line that
/// itself moves inward at rate c; on reaching it the edge switches to inward.
struct VacantRegion {
    int id = 0;
    RegionKind kind = RegionKind::Spawned;
    double created_at = 0.0;
    long created_step = 0;    ///< integer time the region belongs to (ceil of created_at)
    double cx = 0.0, cy = 0.0;  ///< spawn point, or incenter of the target triangle
    std::array<double, 3> H{};       ///< current support values
    std::array<bool, 3> outward{};   ///< edge mode
    std::array<double, 3> target{};  ///< target support value (outward edges)
    std::array<double, 3> anchor{};  ///< support values the h-field profiles hang from
    std::vector<int> parents;
    std::set<int> lineage;  ///< ids of this region and all its ancestors
    std::set<int> roots;    ///< spawned regions in the lineage
    std::vector<std::uint64_t> root_bits;  ///< roots by spawn ordinal
    double circumradius = 0.0;  ///< of the triangle at creation (target triangle for overlaps)

    /// Support value relative to the center: H_j - n_j . center.
    double offset(int j, const std::array<Direction, 3>& n) const {
        return H[static_cast<std::size_t>(j)] - (n[j].x * cx + n[j].y * cy);
    }
};

/// Positive weights with sum_j w_j n_j = 0. A triangle with support values H is
/// nonempty iff sum_j w_j H_j >= 0 and its inradius is sum w_j H_j / sum w_j.
std::array<double, 3> normal_weights(const std::array<Direction, 3>& n);
double inradius(const std::array<double, 3>& H, const std::array<Direction, 3>& n);
/// r / (4 prod sin(A/2)) over the vertex angles A.
double circumradius_from_inradius(double r, const std::array<Direction, 3>& n);
/// Vertices of the triangle (empty when the triangle is empty).
std::vector<std::pair<double, double>> triangle_vertices(const std::array<double, 3>& H,
                                                         const std::array<Direction, 3>& n);

/// A collection of vacant regions evolving in continuous time, optionally on
/// a torus of side `period` (regions then also act through their translates by
/// multiples of the period; a region never interacts with its own translates).
/// Merges are bookkept on pairs of spawned ancestors: two regions overlap only
/// if they bring together some pair of spawned regions that has not merged yet.
class RegionSet {
public:
    RegionSet() = default;
    RegionSet(std::array<Direction, 3> normals, double c, double b,
              std::optional<double> period = std::nullopt);

    double now() const noexcept { return now_; }
    const std::vector<VacantRegion>& regions() const noexcept { return regions_; }
    const std::array<Direction, 3>& normals() const noexcept { return n_; }
    std::optional<double> period() const noexcept { return period_; }
    double c() const noexcept { return c_; }
    double b() const noexcept { return b_; }

    /// Spawned triangle with inradius r centered at (x, y), created at now().
    /// Overlaps with existing regions are resolved immediately.
    int spawn(double x, double y, double r, long created_step);

    /// Insert an arbitrary region (used by tests); overlaps resolved at now().
    int insert(VacantRegion reg);

    /// Event-driven exact evolution to time t >= now().
    void advance_to(double t);

    /// Closed-region membership at the current time.
    bool contains(double x, double y) const;

    /// Translates (by multiples of the period) that can matter for a disk of
    /// radius `reach` around (x, y).
    std::vector<std::pair<double, double>> shifts_near(const VacantRegion& reg, double x, double y,
                                                       double reach) const;

    struct Event {
        double t;
        std::string kind;  ///< "switch", "vanish", "overlap"
        int region;
        int edge;  ///< for switches
    };
    const std::vector<Event>& events() const noexcept { return events_; }

private:
    void resolve_overlaps();
    bool eligible(const VacantRegion& a, const VacantRegion& b) const;
    void form_overlap(std::vector<std::pair<std::size_t, std::pair<double, double>>> members);
    void advance_linear(double dt);
    std::vector<std::pair<double, double>> pair_shifts(const VacantRegion& a,
                                                       const VacantRegion& b, double grow) const;
    double extent(const VacantRegion& reg) const;

    std::array<Direction, 3> n_{};
    std::array<double, 3> w_{};
    double c_ = 0.0, b_ = 0.0;
    std::optional<double> period_;
    double now_ = 0.0;
    int next_id_ = 1;
    std::vector<VacantRegion> regions_;
    std::vector<std::vector<std::uint64_t>> merged_;  ///< per spawn ordinal, merged partners
    std::vector<Event> events_;
};

bool vacant_membership(const RegionSet& regions, double x, double y, double t);

enum class ErrorType { I, II };

struct ErrorPoint {
    double x = 0.0, y = 0.0;
    double t = 0.0;
    ErrorType type = ErrorType::I;
    std::size_t box = 0;
    long step = 0;
};

/// Q_j^a[phi] per direction and age, grown on demand. Each application widens
/// the grid by the kernel reach, so cached profiles carry no truncation error.
class ProfileCache {
public:
    explicit ProfileCache(const PhiData& phi);
    const Profile1D& get(int j, int age);

private:
    const PhiData* phi_;
    std::array<std::vector<Profile1D>, 3> cache_;
};

/// h_n(x) = max_j inf_{i in I} Q_j^{n - m_i}[phi](m + anchor_ij - n_j . x) over
/// the listed region translates; 0 when I is empty.
struct RegionRef {
    std::size_t index;
    double sx, sy;  ///< translate
};
double h_value(const RegionSet& set, const std::vector<RegionRef>& I, double x, double y, long n,
               ProfileCache& cache, const ComparisonConfig& cfg);

/// Evaluator x -> h_n(x) with I(x) = region translates containing x.
class HField {
public:
    HField(const RegionSet& set, long n, ProfileCache& cache, const ComparisonConfig& cfg)
        : set_(&set), n_(n), cache_(&cache), cfg_(&cfg) {}
    double operator()(double x, double y) const;

private:
    const RegionSet* set_;
    long n_;
    ProfileCache* cache_;
    const ComparisonConfig* cfg_;
};

/// Region translates meeting (positive-area intersection with) the box
/// [x0, x0 + len]^2, and the subset containing it.
struct BoxCover {
    std::vector<RegionRef> meeting;
    std::vector<RegionRef> containing;
};
BoxCover box_cover(const RegionSet& set, double x0, double y0, double len);

/// Errors at step n from box stats at n-1 and n and the regions at time n-1.
/// A box meeting the regions is a Type II error when its density is below h_n
/// at its center; any other bad box (density <= alpha) is a Type I error.
/// Points are uniform in the box and in [n-1, n), keyed by (seed, n, box).
std::vector<ErrorPoint> detect_errors(const BoxStats& prev, const BoxStats& cur,
                                      const RegionSet& regions, ProfileCache& cache,
                                      const ComparisonConfig& cfg, long n, std::uint64_t seed);

struct ContainmentViolation {
    std::size_t box;
    double x0, y0;  ///< box corner
    double uncovered_area;
};

struct ContainmentReport {
    long n = 0;
    std::size_t bad_boxes = 0;
    std::vector<ContainmentViolation> violations;
};

/// Every box with density <= alpha must lie inside the union of regions
/// (exact convex polygon subtraction; slivers under 1e-12 of area ignored).
ContainmentReport check_containment(const BoxStats& stats, const RegionSet& regions,
                                    const ComparisonConfig& cfg, long n);

void write_regions_json(std::ostream& os, const RegionSet& regions);
void write_containment_csv_header(std::ostream& os);
void write_containment_csv_row(std::ostream& os, const ContainmentReport& rep);

/// Coupled lattice / triangle-process run from the all-occupied state.
struct ComparisonRunOptions {
    int L = 200;
    int W = 8;
    double gamma = 0.3;
    int steps = 300;
    std::uint64_t seed = 1;
    int threads = 1;
    /// Optional perturbation: at the start of step `hole_step`, empty the
    /// disk of radius hole_radius around the window center.
    int hole_step = -1;
    double hole_radius = 0.0;
};

struct ComparisonRunResult {
    std::vector<ContainmentReport> reports;  ///< one per step n = 1..steps
    std::vector<ErrorPoint> errors;
    std::size_t box_steps = 0;  ///< boxes times steps
    std::size_t type1 = 0, type2 = 0;
    std::size_t overlaps = 0;
    std::size_t max_regions = 0;
    std::size_t violations = 0;
    long nboxes_side = 0;
    double box_len = 0.0;
    RegionSet final_regions;  ///< at time `steps`
};

ComparisonRunResult run_comparison(const DiscreteKernel& dk, const Params& p, const PhiData& phi,
                                   const ComparisonConfig& cfg, const ComparisonRunOptions& opt);

}  // namespace qcp
