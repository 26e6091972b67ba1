#include "qcp/comparison.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "qcp/ide.hpp"
#include "qcp/rng.hpp"

namespace qcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeEps = 1e-12;
constexpr double kAreaEps = 1e-12;
constexpr std::uint64_t kPhaseErrors = 11;

using Pt = std::pair<double, double>;
using Poly = std::vector<Pt>;

double dot(const Direction& d, double x, double y) { return d.x * x + d.y * y; }

double poly_area(const Poly& p) {
    double a = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Pt& u = p[i];
        const Pt& v = p[(i + 1) % p.size()];
        a += u.first * v.second - v.first * u.second;
    }
    return 0.5 * std::abs(a);
}

// Keep {nx x + ny y <= h} (keep_le) or its complement.
Poly clip(const Poly& p, const Direction& n, double h, bool keep_le) {
    Poly out;
    if (p.empty()) return out;
    auto val = [&](const Pt& q) {
        const double v = dot(n, q.first, q.second) - h;
        return keep_le ? v : -v;
    };
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Pt& a = p[i];
        const Pt& b = p[(i + 1) % p.size()];
        const double va = val(a);
        const double vb = val(b);
        if (va <= 0.0) out.push_back(a);
        if ((va < 0.0 && vb > 0.0) || (va > 0.0 && vb < 0.0)) {
            const double t = va / (va - vb);
            out.emplace_back(a.first + t * (b.first - a.first), a.second + t * (b.second - a.second));
        }
    }
    return out;
}

Poly square(double x0, double y0, double len) {
    return {{x0, y0}, {x0 + len, y0}, {x0 + len, y0 + len}, {x0, y0 + len}};
}

Poly clip_triangle(Poly p, const std::array<Direction, 3>& n, const std::array<double, 3>& H) {
    for (int j = 0; j < 3; ++j) p = clip(p, n[j], H[j], true);
    return p;
}

// p minus the triangle, as disjoint convex pieces.
std::vector<Poly> subtract_triangle(const Poly& p, const std::array<Direction, 3>& n,
                                    const std::array<double, 3>& H) {
    std::vector<Poly> out;
    Poly rest = p;
    for (int j = 0; j < 3 && !rest.empty(); ++j) {
        Poly outside = clip(rest, n[j], H[j], false);
        if (poly_area(outside) > kAreaEps) out.push_back(std::move(outside));
        rest = clip(rest, n[j], H[j], true);
    }
    return out;
}

std::array<double, 3> shifted(const std::array<double, 3>& H, const std::array<Direction, 3>& n,
                              double sx, double sy) {
    std::array<double, 3> out{};
    for (int j = 0; j < 3; ++j) out[j] = H[j] + dot(n[j], sx, sy);
    return out;
}

double cross(const Direction& a, const Direction& b) { return a.x * b.y - a.y * b.x; }

// Corner test of the box [x0, x0 + len]^2 against a triangle: -1 disjoint
// (all corners beyond one edge), 1 contained, 0 undecided.
int corner_test(double x0, double y0, double len, const std::array<Direction, 3>& n,
                const std::array<double, 3>& H) {
    bool all_in = true;
    for (int j = 0; j < 3; ++j) {
        int outside = 0;
        for (int k = 0; k < 4; ++k) {
            const double x = x0 + ((k & 1) ? len : 0.0);
            const double y = y0 + ((k & 2) ? len : 0.0);
            if (dot(n[j], x, y) > H[j]) ++outside;
        }
        if (outside == 4) return -1;
        if (outside > 0) all_in = false;
    }
    return all_in ? 1 : 0;
}

}  // namespace

std::string to_string(RegionKind k) { return k == RegionKind::Spawned ? "spawned" : "overlap"; }

std::array<double, 3> normal_weights(const std::array<Direction, 3>& n) {
    std::array<double, 3> w{cross(n[1], n[2]), cross(n[2], n[0]), cross(n[0], n[1])};
    const double sgn = w[0] + w[1] + w[2] >= 0.0 ? 1.0 : -1.0;
    for (double& v : w) {
        v *= sgn;
        if (!(v > 0.0)) throw std::invalid_argument("normals do not bound a triangle");
    }
    return w;
}

double inradius(const std::array<double, 3>& H, const std::array<Direction, 3>& n) {
    const auto w = normal_weights(n);
    return (w[0] * H[0] + w[1] * H[1] + w[2] * H[2]) / (w[0] + w[1] + w[2]);
}

double circumradius_from_inradius(double r, const std::array<Direction, 3>& n) {
    double prod = 1.0;
    for (int j = 0; j < 3; ++j) {
        const Direction& a = n[j];
        const Direction& b = n[(j + 1) % 3];
        const double between = std::acos(std::clamp(a.x * b.x + a.y * b.y, -1.0, 1.0));
        prod *= std::sin(0.5 * (std::numbers::pi - between));
    }
    return r / (4.0 * prod);
}

std::vector<std::pair<double, double>> triangle_vertices(const std::array<double, 3>& H,
                                                         const std::array<Direction, 3>& n) {
    if (inradius(H, n) < 0.0) return {};
    std::vector<std::pair<double, double>> v;
    for (int j = 0; j < 3; ++j) {
        const Direction& a = n[j];
        const Direction& b = n[(j + 1) % 3];
        const double det = a.x * b.y - a.y * b.x;
        const double ha = H[j];
        const double hb = H[(j + 1) % 3];
        v.emplace_back((ha * b.y - hb * a.y) / det, (a.x * hb - b.x * ha) / det);
    }
    return v;
}

ComparisonConfig make_comparison_config(const PhiData& phi, double kernel_diameter, int L,
                                        double gamma, bool ceil_r) {
    ComparisonConfig cfg;
    cfg.alpha = phi.alpha;
    cfg.c = phi.c;
    cfg.b = 2.0 * kernel_diameter;
    cfg.L = L;
    cfg.gamma = gamma;
    const int side = box_side(L, gamma);
    cfg.dB = std::sqrt(2.0) * side / static_cast<double>(L);
    cfg.m = phi.m;
    cfg.l = phi.l;
    const double rr = phi.l + cfg.dB + cfg.c + kernel_diameter;
    cfg.r = ceil_r ? std::ceil(rr) : rr;
    cfg.normals = phi.dirs;
    cfg.delta1 = 0.5 * (mean_field_map(phi.params, phi.alpha) - phi.alpha);
    double sup = 0.0;
    for (int i = 0; i < 3; ++i) {
        const Profile1D q = apply_Q_1d(phi.phi, phi.marginals[i], phi.params);
        for (std::size_t k = 0; k < phi.phi.size(); ++k) {
            const double s = phi.phi.s(k);
            if (s >= 0.0) break;
            sup = std::max(sup, q(s) - phi.phi.values[k]);
        }
    }
    cfg.delta2 = sup + 1e-9;
    const double C = std::max(1.0, phi.params.beta * phi.params.beta);
    if (cfg.delta1 <= 0.0) throw std::invalid_argument("phi threshold alpha has delta1 <= 0");
    cfg.C1 = C / (cfg.delta1 * cfg.delta1);
    cfg.C2 = C / (cfg.delta2 * cfg.delta2);
    cfg.error_bound = std::max(cfg.C1, cfg.C2) * std::pow(static_cast<double>(L), 2.0 * gamma - 2.0);
    return cfg;
}

// ---------------------------------------------------------------- RegionSet

RegionSet::RegionSet(std::array<Direction, 3> normals, double c, double b,
                     std::optional<double> period)
    : n_(normals), w_(normal_weights(normals)), c_(c), b_(b), period_(period) {
    if (!(c >= 0.0) || !(b >= 0.0)) throw std::invalid_argument("edge rates must be >= 0");
    if (period && !(*period > 0.0)) throw std::invalid_argument("period must be > 0");
}

double RegionSet::extent(const VacantRegion& reg) const {
    // Radius about the center that contains the current triangle and every
    // target line position.
    double ext = 0.0;
    const auto verts = triangle_vertices(reg.H, n_);
    for (const auto& v : verts) ext = std::max(ext, std::hypot(v.first - reg.cx, v.second - reg.cy));
    std::array<double, 3> env{};
    for (int j = 0; j < 3; ++j) env[j] = reg.outward[j] ? std::max(reg.target[j], reg.H[j]) : reg.H[j];
    for (const auto& v : triangle_vertices(env, n_))
        ext = std::max(ext, std::hypot(v.first - reg.cx, v.second - reg.cy));
    return ext;
}

std::vector<std::pair<double, double>> RegionSet::shifts_near(const VacantRegion& reg, double x,
                                                              double y, double reach) const {
    if (!period_) return {{0.0, 0.0}};
    const double P = *period_;
    const double ext = extent(reg) + reach;
    std::vector<std::pair<double, double>> out;
    const long kx0 = static_cast<long>(std::floor((x - reg.cx - ext) / P));
    const long kx1 = static_cast<long>(std::ceil((x - reg.cx + ext) / P));
    const long ky0 = static_cast<long>(std::floor((y - reg.cy - ext) / P));
    const long ky1 = static_cast<long>(std::ceil((y - reg.cy + ext) / P));
    for (long kx = kx0; kx <= kx1; ++kx)
        for (long ky = ky0; ky <= ky1; ++ky) out.emplace_back(kx * P, ky * P);
    return out;
}

std::vector<std::pair<double, double>> RegionSet::pair_shifts(const VacantRegion& a,
                                                              const VacantRegion& b,
                                                              double grow) const {
    return shifts_near(b, a.cx, a.cy, extent(a) + grow);
}

bool RegionSet::eligible(const VacantRegion& a, const VacantRegion& b) const {
    if (a.id == b.id) return false;
    if (a.lineage.count(b.id) || b.lineage.count(a.id)) return false;
    for (std::size_t wa = 0; wa < a.root_bits.size(); ++wa)
        for (std::uint64_t bits = a.root_bits[wa]; bits; bits &= bits - 1) {
            const std::size_t p = wa * 64 + static_cast<std::size_t>(std::countr_zero(bits));
            const auto& row = merged_[p];
            for (std::size_t wb = 0; wb < b.root_bits.size(); ++wb) {
                std::uint64_t open = b.root_bits[wb] & ~(wb < row.size() ? row[wb] : 0);
                if (wb == p / 64) open &= ~(std::uint64_t{1} << (p % 64));
                if (open) return true;
            }
        }
    return false;
}

int RegionSet::spawn(double x, double y, double r, long created_step) {
    VacantRegion reg;
    reg.kind = RegionKind::Spawned;
    reg.created_step = created_step;
    reg.cx = x;
    reg.cy = y;
    for (int j = 0; j < 3; ++j) {
        reg.H[j] = dot(n_[j], x, y) + r;
        reg.anchor[j] = reg.H[j];
    }
    reg.circumradius = circumradius_from_inradius(r, n_);
    return insert(std::move(reg));
}

int RegionSet::insert(VacantRegion reg) {
    reg.id = next_id_++;
    reg.created_at = now_;
    reg.lineage.insert(reg.id);
    if (reg.roots.empty()) {
        reg.roots.insert(reg.id);
        const std::size_t k = merged_.size();
        merged_.emplace_back();
        reg.root_bits.assign(k / 64 + 1, 0);
        reg.root_bits[k / 64] |= std::uint64_t{1} << (k % 64);
    }
    regions_.push_back(std::move(reg));
    const int id = regions_.back().id;
    resolve_overlaps();
    return id;
}

void RegionSet::form_overlap(std::vector<std::pair<std::size_t, std::pair<double, double>>> members) {
    VacantRegion reg;
    reg.kind = RegionKind::Overlap;
    reg.created_at = now_;
    reg.created_step = static_cast<long>(std::ceil(now_ - kTimeEps));
    std::array<double, 3> lo{kInf, kInf, kInf};
    std::array<double, 3> env{-kInf, -kInf, -kInf};
    for (const auto& [idx, sh] : members) {
        const VacantRegion& m = regions_[idx];
        const auto Hs = shifted(m.H, n_, sh.first, sh.second);
        const auto Ts = shifted(m.target, n_, sh.first, sh.second);
        for (int j = 0; j < 3; ++j) {
            lo[j] = std::min(lo[j], Hs[j]);
            env[j] = std::max(env[j], m.outward[j] ? Ts[j] : Hs[j]);
        }
        reg.parents.push_back(m.id);
        reg.lineage.insert(m.lineage.begin(), m.lineage.end());
        reg.roots.insert(m.roots.begin(), m.roots.end());
        if (reg.root_bits.size() < m.root_bits.size()) reg.root_bits.resize(m.root_bits.size(), 0);
        for (std::size_t w = 0; w < m.root_bits.size(); ++w) reg.root_bits[w] |= m.root_bits[w];
    }
    for (std::size_t w = 0; w < reg.root_bits.size(); ++w)
        for (std::uint64_t bits = reg.root_bits[w]; bits; bits &= bits - 1) {
            auto& row = merged_[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))];
            if (row.size() < reg.root_bits.size()) row.resize(reg.root_bits.size(), 0);
            for (std::size_t v = 0; v < reg.root_bits.size(); ++v) row[v] |= reg.root_bits[v];
        }
    for (int j = 0; j < 3; ++j) {
        reg.H[j] = lo[j];
        reg.target[j] = env[j];
        reg.outward[j] = env[j] > lo[j];
        if (!reg.outward[j]) reg.target[j] = lo[j];
        reg.anchor[j] = env[j];
    }
    const auto verts = triangle_vertices(env, n_);
    const double r_env = inradius(env, n_);
    // Incenter of the target triangle: n_j . x = env_j - r for all j.
    {
        const Direction& a = n_[0];
        const Direction& b = n_[1];
        const double det = a.x * b.y - a.y * b.x;
        const double ha = env[0] - r_env;
        const double hb = env[1] - r_env;
        reg.cx = (ha * b.y - hb * a.y) / det;
        reg.cy = (a.x * hb - b.x * ha) / det;
    }
    reg.circumradius = verts.empty() ? 0.0 : circumradius_from_inradius(r_env, n_);
    reg.id = next_id_++;
    reg.lineage.insert(reg.id);
    events_.push_back({now_, "overlap", reg.id, -1});
    regions_.push_back(std::move(reg));
}

void RegionSet::resolve_overlaps() {
    // Repeat until no eligible pair of translates intersects.
    for (;;) {
        bool found = false;
        for (std::size_t a = 0; a < regions_.size() && !found; ++a) {
            for (std::size_t b = 0; b < regions_.size() && !found; ++b) {
                if (a == b) continue;
                if (!eligible(regions_[a], regions_[b]) || regions_[a].id > regions_[b].id) continue;
                for (const auto& sh : pair_shifts(regions_[a], regions_[b], 0.0)) {
                    std::array<double, 3> I{};
                    const auto Hb = shifted(regions_[b].H, n_, sh.first, sh.second);
                    for (int j = 0; j < 3; ++j) I[j] = std::min(regions_[a].H[j], Hb[j]);
                    if (w_[0] * I[0] + w_[1] * I[1] + w_[2] * I[2] < -1e-12) continue;
                    // Grow the collection greedily (by id) while the common
                    // intersection stays nonempty.
                    std::vector<std::pair<std::size_t, std::pair<double, double>>> members{
                        {a, {0.0, 0.0}}, {b, sh}};
                    for (std::size_t z = 0; z < regions_.size(); ++z) {
                        if (z == a || z == b) continue;
                        // Join if unrelated to every member and eligible
                        // with at least one of them.
                        bool related = false;
                        bool fresh = false;
                        for (const auto& mm : members) {
                            const auto& M = regions_[mm.first];
                            if (M.lineage.count(regions_[z].id) || regions_[z].lineage.count(M.id)) related = true;
                            else if (eligible(M, regions_[z])) fresh = true;
                        }
                        if (related || !fresh) continue;
                        for (const auto& shz : pair_shifts(regions_[a], regions_[z], 0.0)) {
                            const auto Hz = shifted(regions_[z].H, n_, shz.first, shz.second);
                            std::array<double, 3> J{};
                            for (int j = 0; j < 3; ++j) J[j] = std::min(I[j], Hz[j]);
                            if (w_[0] * J[0] + w_[1] * J[1] + w_[2] * J[2] >= -1e-12) {
                                members.push_back({z, shz});
                                I = J;
                                break;
                            }
                        }
                    }
                    form_overlap(std::move(members));
                    found = true;
                    break;
                }
            }
        }
        if (!found) return;
    }
}

void RegionSet::advance_linear(double dt) {
    if (dt <= 0.0) return;
    for (auto& reg : regions_)
        for (int j = 0; j < 3; ++j) {
            if (reg.outward[j]) {
                reg.H[j] += b_ * dt;
                reg.target[j] -= c_ * dt;
            } else {
                reg.H[j] -= c_ * dt;
            }
        }
    now_ += dt;
}

void RegionSet::advance_to(double t) {
    if (t < now_ - kTimeEps) throw std::invalid_argument("advance_to: time runs backward");
    resolve_overlaps();
    while (now_ < t) {
        double horizon = t - now_;
        // Catch-ups.
        for (const auto& reg : regions_)
            for (int j = 0; j < 3; ++j)
                if (reg.outward[j]) horizon = std::min(horizon, std::max(0.0, (reg.target[j] - reg.H[j]) / (b_ + c_)));
        // Vanishing.
        for (const auto& reg : regions_) {
            double F = 0.0, dF = 0.0;
            for (int j = 0; j < 3; ++j) {
                F += w_[j] * reg.H[j];
                dF += w_[j] * (reg.outward[j] ? b_ : -c_);
            }
            if (dF < 0.0) horizon = std::min(horizon, std::max(0.0, F / -dF));
        }
        // Collisions: only pairs with a growing edge can start to intersect.
        for (std::size_t a = 0; a < regions_.size(); ++a) {
            const auto& A = regions_[a];
            const bool growA = A.outward[0] || A.outward[1] || A.outward[2];
            for (std::size_t bi = a + 1; bi < regions_.size(); ++bi) {
                const auto& B = regions_[bi];
                const bool growB = B.outward[0] || B.outward[1] || B.outward[2];
                if (!growA && !growB) continue;
                if (!eligible(A, B)) continue;
                for (const auto& sh : pair_shifts(A, B, b_ * horizon)) {
                    const auto HB = shifted(B.H, n_, sh.first, sh.second);
                    std::array<double, 3> ra{}, rb{};
                    for (int j = 0; j < 3; ++j) {
                        ra[j] = A.outward[j] ? b_ : -c_;
                        rb[j] = B.outward[j] ? b_ : -c_;
                    }
                    auto F = [&](double tau) {
                        double s = 0.0;
                        for (int j = 0; j < 3; ++j)
                            s += w_[j] * std::min(A.H[j] + ra[j] * tau, HB[j] + rb[j] * tau);
                        return s;
                    };
                    std::vector<double> pts{0.0};
                    for (int j = 0; j < 3; ++j) {
                        const double dr = ra[j] - rb[j];
                        if (dr != 0.0) {
                            const double tc = (HB[j] - A.H[j]) / dr;
                            if (tc > 0.0 && tc < horizon) pts.push_back(tc);
                        }
                    }
                    pts.push_back(horizon);
                    std::sort(pts.begin(), pts.end());
                    double prev = pts[0];
                    double fprev = F(prev);
                    if (fprev >= 0.0) {
                        horizon = 0.0;
                        break;
                    }
                    for (std::size_t k = 1; k < pts.size(); ++k) {
                        const double fk = F(pts[k]);
                        if (fk >= 0.0) {
                            const double root = prev + (pts[k] - prev) * (-fprev) / (fk - fprev);
                            horizon = std::min(horizon, root);
                            break;
                        }
                        prev = pts[k];
                        fprev = fk;
                    }
                }
            }
        }
        advance_linear(horizon);
        // Switches at this instant.
        for (auto& reg : regions_)
            for (int j = 0; j < 3; ++j)
                if (reg.outward[j] && reg.target[j] - reg.H[j] <= kTimeEps * (b_ + c_)) {
                    reg.outward[j] = false;
                    reg.H[j] = reg.target[j];
                    events_.push_back({now_, "switch", reg.id, j});
                }
        // Vanishings.
        for (auto it = regions_.begin(); it != regions_.end();) {
            const double F = w_[0] * it->H[0] + w_[1] * it->H[1] + w_[2] * it->H[2];
            double dF = 0.0;
            for (int j = 0; j < 3; ++j) dF += w_[j] * (it->outward[j] ? b_ : -c_);
            if (F <= 1e-12 * (w_[0] + w_[1] + w_[2]) && dF < 0.0) {
                events_.push_back({now_, "vanish", it->id, -1});
                it = regions_.erase(it);
            } else {
                ++it;
            }
        }
        resolve_overlaps();
        if (t - now_ <= kTimeEps) now_ = std::max(now_, t);
    }
}

bool RegionSet::contains(double x, double y) const {
    for (const auto& reg : regions_)
        for (const auto& sh : shifts_near(reg, x, y, 0.0)) {
            bool in = true;
            for (int j = 0; j < 3 && in; ++j)
                in = dot(n_[j], x - sh.first, y - sh.second) <= reg.H[j] + 1e-12;
            if (in) return true;
        }
    return false;
}

bool vacant_membership(const RegionSet& regions, double x, double y, double t) {
    if (t == regions.now()) return regions.contains(x, y);
    RegionSet copy = regions;
    copy.advance_to(t);
    return copy.contains(x, y);
}

// ---------------------------------------------------------------- h-field

ProfileCache::ProfileCache(const PhiData& phi) : phi_(&phi) {
    for (int j = 0; j < 3; ++j) cache_[j].push_back(phi.phi);
}

const Profile1D& ProfileCache::get(int j, int age) {
    if (age < 0) throw std::invalid_argument("ProfileCache: negative age");
    auto& v = cache_[static_cast<std::size_t>(j)];
    const Kernel1D& k1 = phi_->marginals[static_cast<std::size_t>(j)];
    while (static_cast<int>(v.size()) <= age) {
        const Profile1D& f = v.back();
        Profile1D wide;
        wide.spacing = f.spacing;
        wide.s_min = f.s_min - k1.reach * f.spacing;
        wide.left_limit = f.left_limit;
        wide.right_limit = f.right_limit;
        wide.values.resize(f.size() + 2 * static_cast<std::size_t>(k1.reach));
        for (std::size_t i = 0; i < wide.size(); ++i)
            wide.values[i] = f.node(static_cast<long>(i) - k1.reach);
        v.push_back(apply_Q_1d(wide, k1, phi_->params));
    }
    return v[static_cast<std::size_t>(age)];
}

double h_value(const RegionSet& set, const std::vector<RegionRef>& I, double x, double y, long n,
               ProfileCache& cache, const ComparisonConfig& cfg) {
    if (I.empty()) return 0.0;
    const auto& nrm = set.normals();
    double best = -kInf;
    for (int j = 0; j < 3; ++j) {
        double inf = kInf;
        for (const auto& ref : I) {
            const VacantRegion& reg = set.regions()[ref.index];
            const long age = n - reg.created_step;
            const double anchor = reg.anchor[j] + dot(nrm[j], ref.sx, ref.sy);
            const double s = cfg.m + anchor - dot(nrm[j], x, y);
            inf = std::min(inf, cache.get(j, static_cast<int>(std::max(0L, age)))(s));
        }
        best = std::max(best, inf);
    }
    return best;
}

double HField::operator()(double x, double y) const {
    std::vector<RegionRef> I;
    const auto& nrm = set_->normals();
    for (std::size_t k = 0; k < set_->regions().size(); ++k) {
        const auto& reg = set_->regions()[k];
        for (const auto& sh : set_->shifts_near(reg, x, y, 0.0)) {
            bool in = true;
            for (int j = 0; j < 3 && in; ++j)
                in = dot(nrm[j], x - sh.first, y - sh.second) <= reg.H[j] + 1e-12;
            if (in) I.push_back({k, sh.first, sh.second});
        }
    }
    return h_value(*set_, I, x, y, n_, *cache_, *cfg_);
}

BoxCover box_cover(const RegionSet& set, double x0, double y0, double len) {
    BoxCover cov;
    const Poly box = square(x0, y0, len);
    const double area = len * len;
    const auto& nrm = set.normals();
    const double cx = x0 + 0.5 * len;
    const double cy = y0 + 0.5 * len;
    for (std::size_t k = 0; k < set.regions().size(); ++k) {
        const auto& reg = set.regions()[k];
        for (const auto& sh : set.shifts_near(reg, cx, cy, len)) {
            const auto H = shifted(reg.H, nrm, sh.first, sh.second);
            const int quick = corner_test(x0, y0, len, nrm, H);
            if (quick < 0) continue;
            if (quick > 0) {
                cov.meeting.push_back({k, sh.first, sh.second});
                cov.containing.push_back({k, sh.first, sh.second});
                continue;
            }
            const double a = poly_area(clip_triangle(box, nrm, H));
            if (a > kAreaEps) {
                cov.meeting.push_back({k, sh.first, sh.second});
                if (a >= area - 1e-12 * std::max(1.0, area)) cov.containing.push_back({k, sh.first, sh.second});
            }
        }
    }
    return cov;
}

std::vector<ErrorPoint> detect_errors(const BoxStats& prev, const BoxStats& cur,
                                      const RegionSet& regions, ProfileCache& cache,
                                      const ComparisonConfig& cfg, long n, std::uint64_t seed) {
    if (prev.boxes() != cur.boxes()) throw std::invalid_argument("detect_errors: box grids differ");
    std::vector<ErrorPoint> out;
    const std::uint64_t key = derive_key(seed, static_cast<std::uint64_t>(n), kPhaseErrors);
    for (int by = 0; by < cur.nby; ++by)
        for (int bx = 0; bx < cur.nbx; ++bx) {
            const std::size_t b = cur.index(bx, by);
            const double x0 = cur.corner_x(bx);
            const double y0 = cur.corner_y(by);
            const double dens = cur.density(b);
            const bool bad = dens <= cfg.alpha;
            BoxCover cov;
            if (!regions.regions().empty()) cov = box_cover(regions, x0, y0, cur.box_len);
            bool err = false;
            ErrorType type = ErrorType::I;
            if (!cov.meeting.empty()) {
                const auto& I = cov.containing.empty() ? cov.meeting : cov.containing;
                const double h = h_value(regions, I, x0 + 0.5 * cur.box_len, y0 + 0.5 * cur.box_len,
                                         n, cache, cfg);
                if (dens < h) {
                    err = true;
                    type = ErrorType::II;
                }
            } else if (bad) {
                err = true;
            }
            if (!err) continue;
            CounterRng rng(site_key(key, b));
            ErrorPoint e;
            e.x = x0 + rng.uniform() * cur.box_len;
            e.y = y0 + rng.uniform() * cur.box_len;
            e.t = static_cast<double>(n - 1) + rng.uniform();
            e.type = type;
            e.box = b;
            e.step = n;
            out.push_back(e);
        }
    std::sort(out.begin(), out.end(), [](const ErrorPoint& a, const ErrorPoint& b) {
        return a.t < b.t || (a.t == b.t && a.box < b.box);
    });
    return out;
}

ContainmentReport check_containment(const BoxStats& stats, const RegionSet& regions,
                                    const ComparisonConfig& cfg, long n) {
    ContainmentReport rep;
    rep.n = n;
    const auto& nrm = regions.normals();
    for (int by = 0; by < stats.nby; ++by)
        for (int bx = 0; bx < stats.nbx; ++bx) {
            const std::size_t b = stats.index(bx, by);
            if (stats.density(b) > cfg.alpha) continue;
            ++rep.bad_boxes;
            const double x0 = stats.corner_x(bx);
            const double y0 = stats.corner_y(by);
            std::vector<Poly> rest{square(x0, y0, stats.box_len)};
            const double cx = x0 + 0.5 * stats.box_len;
            const double cy = y0 + 0.5 * stats.box_len;
            for (const auto& reg : regions.regions()) {
                for (const auto& sh : regions.shifts_near(reg, cx, cy, stats.box_len)) {
                    const auto H = shifted(reg.H, nrm, sh.first, sh.second);
                    const int quick = corner_test(x0, y0, stats.box_len, nrm, H);
                    if (quick < 0) continue;
                    if (quick > 0) {
                        rest.clear();
                        break;
                    }
                    std::vector<Poly> next;
                    for (const auto& piece : rest) {
                        auto parts = subtract_triangle(piece, nrm, H);
                        for (auto& q : parts) next.push_back(std::move(q));
                    }
                    rest = std::move(next);
                    if (rest.empty()) break;
                }
                if (rest.empty()) break;
            }
            double area = 0.0;
            for (const auto& q : rest) area += poly_area(q);
            if (area > kAreaEps) rep.violations.push_back({b, x0, y0, area});
        }
    return rep;
}

void write_regions_json(std::ostream& os, const RegionSet& regions) {
    nlohmann::json j;
    j["time"] = regions.now();
    j["c"] = regions.c();
    j["b"] = regions.b();
    if (regions.period()) j["period"] = *regions.period();
    nlohmann::json normals = nlohmann::json::array();
    for (const auto& d : regions.normals()) normals.push_back({d.x, d.y});
    j["normals"] = normals;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& reg : regions.regions()) {
        nlohmann::json r;
        r["id"] = reg.id;
        r["kind"] = to_string(reg.kind);
        r["created_at"] = reg.created_at;
        r["created_step"] = reg.created_step;
        r["center"] = {reg.cx, reg.cy};
        nlohmann::json offs = nlohmann::json::array();
        nlohmann::json modes = nlohmann::json::array();
        nlohmann::json targets = nlohmann::json::array();
        for (int e = 0; e < 3; ++e) {
            offs.push_back(reg.offset(e, regions.normals()));
            modes.push_back(reg.outward[e] ? "outward" : "inward");
            targets.push_back(reg.outward[e]
                                  ? nlohmann::json(reg.target[e] - dot(regions.normals()[e], reg.cx, reg.cy))
                                  : nlohmann::json(nullptr));
        }
        r["normals"] = normals;
        r["offsets"] = offs;
        r["modes"] = modes;
        r["target_offsets"] = targets;
        r["parents"] = reg.parents;
        r["circumradius"] = reg.circumradius;
        arr.push_back(r);
    }
    j["regions"] = arr;
    os << j.dump(1) << '\n';
}

void write_containment_csv_header(std::ostream& os) {
    os << "n,bad_boxes,violations,uncovered_area\n";
}

void write_containment_csv_row(std::ostream& os, const ContainmentReport& rep) {
    double area = 0.0;
    for (const auto& v : rep.violations) area += v.uncovered_area;
    os << rep.n << ',' << rep.bad_boxes << ',' << rep.violations.size() << ',' << area << '\n';
}

ComparisonRunResult run_comparison(const DiscreteKernel& dk, const Params& p, const PhiData& phi,
                                   const ComparisonConfig& cfg, const ComparisonRunOptions& opt) {
    if (opt.steps < 1) throw std::invalid_argument("run_comparison: steps must be >= 1");
    LatticeState s = init(InitSpec{}, opt.L, opt.W);
    RegionSet regions(cfg.normals, cfg.c, cfg.b, static_cast<double>(opt.W));
    ProfileCache cache(phi);
    ComparisonRunResult res;
    StepOptions so;
    so.threads = opt.threads;
    BoxStats prev = box_stats(s, opt.gamma);
    res.nboxes_side = prev.nbx;
    res.box_len = prev.box_len;
    for (long n = 1; n <= opt.steps; ++n) {
        if (n == opt.hole_step) {
            const double cx = 0.5 * opt.W;
            const double cy = 0.5 * opt.W;
            for (int j = 0; j < s.N(); ++j)
                for (int i = 0; i < s.N(); ++i)
                    if (std::hypot(s.x(i) - cx, s.y(j) - cy) <= opt.hole_radius) s.set(i, j, false);
        }
        step(s, dk, p, opt.seed, so);
        BoxStats cur = box_stats(s, opt.gamma);
        const auto errs = detect_errors(prev, cur, regions, cache, cfg, n, opt.seed);
        for (const auto& e : errs) {
            regions.advance_to(e.t);
            regions.spawn(e.x, e.y, cfg.r, n);
            (e.type == ErrorType::I ? res.type1 : res.type2) += 1;
            res.errors.push_back(e);
            res.max_regions = std::max(res.max_regions, regions.regions().size());
        }
        regions.advance_to(static_cast<double>(n));
        res.max_regions = std::max(res.max_regions, regions.regions().size());
        auto rep = check_containment(cur, regions, cfg, n);
        res.violations += rep.violations.size();
        res.reports.push_back(std::move(rep));
        res.box_steps += cur.boxes();
        prev = std::move(cur);
    }
    for (const auto& ev : regions.events())
        if (ev.kind == "overlap") ++res.overlaps;
    res.final_regions = std::move(regions);
    return res;
}

}  // namespace qcp
