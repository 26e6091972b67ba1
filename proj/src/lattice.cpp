#include "qcp/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "qcp/parallel.hpp"
#include "qcp/rng.hpp"

namespace qcp {

namespace {

enum Phase : std::uint64_t { kInit = 1, kBirth = 2, kDeath = 3 };

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

inline int wrap(int v, int n) noexcept {
    v %= n;
    return v < 0 ? v + n : v;
}

std::uint64_t tail_mask(int N) {
    const int r = N & 63;
    return r == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << r) - 1;
}

// Popcount of bits [lo, hi) of a packed row.
long popcount_range(const std::uint64_t* row, int lo, int hi) {
    if (hi <= lo) return 0;
    long total = 0;
    int w0 = lo >> 6, w1 = (hi - 1) >> 6;
    for (int w = w0; w <= w1; ++w) {
        std::uint64_t v = row[w];
        if (w == w0) v &= ~std::uint64_t{0} << (lo & 63);
        if (w == w1 && (hi & 63)) v &= (std::uint64_t{1} << (hi & 63)) - 1;
        total += std::popcount(v);
    }
    return total;
}

// Every particle dies with probability eta. Death sites come from a per-row
// stream of geometric gaps keyed by (seed, time, row); the stream ignores the
// configuration, so coupled copies see the same death coins.
std::uint64_t death_phase(LatticeState& s, double eta, std::uint64_t seed, long t, int threads) {
    if (eta <= 0.0) return 0;
    const int N = s.N();
    std::vector<std::uint64_t> per_row(static_cast<std::size_t>(N), 0);
    if (eta >= 1.0) {
        for (int j = 0; j < N; ++j) {
            per_row[j] = static_cast<std::uint64_t>(popcount_range(s.row(j), 0, N));
            std::fill(s.row(j), s.row(j) + s.words_per_row(), 0);
        }
    } else {
        const double log_keep = std::log1p(-eta);
        const std::uint64_t key = derive_key(seed, static_cast<std::uint64_t>(t), kDeath);
        parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t jj = lo; jj < hi; ++jj) {
                const int j = static_cast<int>(jj);
                CounterRng rng(site_key(key, jj));
                std::uint64_t* row = s.row(j);
                auto gap = [&] {
                    const double u = 1.0 - rng.uniform();  // (0, 1]
                    const double g = std::floor(std::log(u) / log_keep);
                    return g > 1e9 ? 1e9 : g;
                };
                double pos = gap();
                while (pos < N) {
                    const int i = static_cast<int>(pos);
                    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
                    if (row[i >> 6] & bit) {
                        row[i >> 6] &= ~bit;
                        ++per_row[jj];
                    }
                    pos += 1.0 + gap();
                }
            }
        });
    }
    std::uint64_t total = 0;
    for (auto d : per_row) total += d;
    return total;
}

struct BirthDraw {
    bool coin = false;
    Offset w;
    int dir = 0;
};

template <class F>
void for_each_vacant(const LatticeState& s, int j, F&& f) {
    const int wpr = s.words_per_row();
    const std::uint64_t* row = s.row(j);
    const std::uint64_t last = tail_mask(s.N());
    for (int w = 0; w < wpr; ++w) {
        std::uint64_t vac = ~row[w];
        if (w == wpr - 1) vac &= last;
        while (vac) {
            const int b = std::countr_zero(vac);
            vac &= vac - 1;
            f((w << 6) + b);
        }
    }
}

}  // namespace

LatticeState::LatticeState(int L, int W, double origin_x, double origin_y)
    : L_(L), W_(W), ox_(origin_x), oy_(origin_y) {
    if (L < 1 || W < 1) throw std::invalid_argument("lattice needs L >= 1 and W >= 1");
    const long n = static_cast<long>(L) * W;
    if (n > (1L << 20)) throw std::invalid_argument("lattice window too large");
    N_ = static_cast<int>(n);
    wpr_ = (N_ + 63) / 64;
    rows_.assign(static_cast<std::size_t>(N_) * wpr_, 0);
}

std::size_t LatticeState::count() const noexcept {
    std::size_t c = 0;
    for (auto w : rows_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

double LatticeState::density() const noexcept {
    return static_cast<double>(count()) / (static_cast<double>(N_) * N_);
}

bool dominated_by(const LatticeState& a, const LatticeState& b) {
    if (a.rows_.size() != b.rows_.size()) throw std::invalid_argument("state shapes differ");
    for (std::size_t k = 0; k < a.rows_.size(); ++k)
        if (a.rows_[k] & ~b.rows_[k]) return false;
    return true;
}

LatticeState init(const InitSpec& spec, int L, int W, double origin_x, double origin_y) {
    LatticeState s(L, W, origin_x, origin_y);
    const int N = s.N();
    switch (spec.mode) {
        case InitMode::AllOnes:
            for (int j = 0; j < N; ++j)
                for (int i = 0; i < N; ++i) s.set(i, j, true);
            break;
        case InitMode::Product:
        case InitMode::FromField: {
            if (spec.mode == InitMode::Product && !(spec.p >= 0.0 && spec.p <= 1.0))
                throw std::invalid_argument("product density must lie in [0, 1]");
            const std::uint64_t key = derive_key(spec.seed, 0, kInit);
            for (int j = 0; j < N; ++j) {
                for (int i = 0; i < N; ++i) {
                    const double prob = spec.mode == InitMode::Product
                                            ? spec.p
                                            : spec.field.sample(s.x(i), s.y(j));
                    const auto idx = static_cast<std::uint64_t>(j) * N + i;
                    if (to_unit(site_key(key, idx)) < prob) s.set(i, j, true);
                }
            }
            break;
        }
        case InitMode::FiniteSet:
            for (const auto& [px, py] : spec.points) {
                const double gi = std::floor((px - origin_x) * L + 0.5);
                const double gj = std::floor((py - origin_y) * L + 0.5);
                if (gi < 0 || gj < 0 || gi >= N || gj >= N)
                    throw std::invalid_argument("initial point outside the lattice window");
                s.set(static_cast<int>(gi), static_cast<int>(gj), true);
            }
            break;
    }
    return s;
}

int box_side(int L, double gamma) {
    if (!(gamma > 0.0 && gamma < 0.5)) throw std::invalid_argument("gamma must lie in (0, 1/2)");
    return std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(L), 1.0 - gamma))));
}

StepReport step(LatticeState& s, const DiscreteKernel& dk, const Params& p, std::uint64_t seed,
                const StepOptions& opt) {
    validate(p);
    if (dk.resolution() != s.L())
        throw std::invalid_argument("kernel resolution must equal the lattice L");
    const int N = s.N();
    const long t = s.time() + 1;
    const int b = opt.anchor.kind == Anchor::BoxCorner ? box_side(s.L(), opt.anchor.gamma) : 1;
    const LatticeState old = s;
    StepReport rep;

    if (opt.report_expectation) {
        const BoxStats bs = box_stats(old, opt.gamma);
        std::vector<double> pair(static_cast<std::size_t>(N) * N, 0.0);
        for (int j = 0; j < N; ++j)
            for (int i = 0; i < N; ++i)
                if (old.get(i, j)) {
                    int nb = 0;
                    for (int d = 0; d < 4; ++d) nb += old.get(wrap(i + kDx[d], N), wrap(j + kDy[d], N));
                    pair[static_cast<std::size_t>(j) * N + i] = 0.25 * nb;
                }
        rep.K.resize(bs.boxes());
        rep.expected.resize(bs.boxes());
        const auto offs = dk.offsets();
        const auto mass = dk.masses();
        for (int by = 0; by < bs.nby; ++by) {
            for (int bx = 0; bx < bs.nbx; ++bx) {
                const int ci = bx * bs.side, cj = by * bs.side;
                double K = 0.0;
                for (std::size_t k = 0; k < offs.size(); ++k)
                    K += mass[k] * pair[static_cast<std::size_t>(wrap(cj + offs[k].dy, N)) * N +
                                        wrap(ci + offs[k].dx, N)];
                const std::size_t id = bs.index(bx, by);
                const double x0 = bs.density(id);
                rep.K[id] = K;
                rep.expected[id] = (1.0 - p.eta) * (x0 + p.beta * (1.0 - x0) * K);
            }
        }
    }

    const std::uint64_t key = derive_key(seed, static_cast<std::uint64_t>(t), kBirth);
    std::vector<std::uint64_t> attempts(static_cast<std::size_t>(N), 0), births(attempts);
    parallel_for(static_cast<std::size_t>(N), opt.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t jj = lo; jj < hi; ++jj) {
            const int j = static_cast<int>(jj);
            const int aj = (j / b) * b;
            for_each_vacant(old, j, [&](int i) {
                CounterRng rng(site_key(key, static_cast<std::uint64_t>(j) * N + i));
                if (!(rng.uniform() < p.beta)) return;
                ++attempts[jj];
                const Offset w = dk.sample(rng);
                const int dir = static_cast<int>(rng() >> 62);
                const int ai = (i / b) * b;
                const int yi = wrap(ai + w.dx, N), yj = wrap(aj + w.dy, N);
                if (!old.get(yi, yj)) return;
                if (!old.get(wrap(yi + kDx[dir], N), wrap(yj + kDy[dir], N))) return;
                s.set(i, j, true);
                ++births[jj];
            });
        }
    });
    for (int j = 0; j < N; ++j) {
        rep.births_attempted += attempts[j];
        rep.births += births[j];
    }
    rep.deaths = death_phase(s, p.eta, seed, t, opt.threads);
    s.set_time(t);
    return rep;
}

BoxStats box_stats(const LatticeState& s, double gamma) {
    BoxStats bs;
    bs.gamma = gamma;
    bs.side = box_side(s.L(), gamma);
    const int b = bs.side, N = s.N();
    bs.m = static_cast<long>(b) * b;
    bs.nbx = bs.nby = N / b;
    bs.box_len = static_cast<double>(b) / s.L();
    bs.ox = s.origin_x();
    bs.oy = s.origin_y();
    bs.S.assign(static_cast<std::size_t>(bs.nbx) * bs.nby, 0);
    bs.pairs2.assign(bs.S.size(), 0);
    const int wpr = s.words_per_row();
    std::vector<std::uint64_t> hp(static_cast<std::size_t>(wpr)), vp(static_cast<std::size_t>(wpr));
    for (int j = 0; j < bs.nby * b; ++j) {
        const std::uint64_t* row = s.row(j);
        // hp bit i: sites i and i+1 both occupied (bits past N are zero).
        for (int w = 0; w < wpr; ++w) {
            const std::uint64_t next = w + 1 < wpr ? row[w + 1] << 63 : 0;
            hp[w] = row[w] & ((row[w] >> 1) | next);
        }
        const bool has_up = (j % b) != b - 1;
        if (has_up) {
            const std::uint64_t* up = s.row(j + 1);
            for (int w = 0; w < wpr; ++w) vp[w] = row[w] & up[w];
        }
        const int by = j / b;
        for (int bx = 0; bx < bs.nbx; ++bx) {
            const int c0 = bx * b;
            const std::size_t id = bs.index(bx, by);
            bs.S[id] += popcount_range(row, c0, c0 + b);
            long pr = popcount_range(hp.data(), c0, c0 + b - 1);
            if (has_up) pr += popcount_range(vp.data(), c0, c0 + b);
            bs.pairs2[id] += pr;
        }
    }
    return bs;
}

double coupling_discrepancy(const LatticeState& s0, const DiscreteKernel& dk, const Params& p,
                            double gamma, const std::vector<std::uint64_t>& seeds, int threads) {
    validate(p);
    if (dk.resolution() != s0.L())
        throw std::invalid_argument("kernel resolution must equal the lattice L");
    if (seeds.empty()) return 0.0;
    const int N = s0.N();
    const int b = box_side(s0.L(), gamma);
    std::vector<double> frac(seeds.size(), 0.0);
    parallel_for(seeds.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            LatticeState a = s0, h = s0;
            const long t = s0.time() + 1;
            const std::uint64_t key = derive_key(seeds[k], static_cast<std::uint64_t>(t), kBirth);
            for (int j = 0; j < N; ++j) {
                const int aj = (j / b) * b;
                for_each_vacant(s0, j, [&](int i) {
                    CounterRng rng(site_key(key, static_cast<std::uint64_t>(j) * N + i));
                    if (!(rng.uniform() < p.beta)) return;
                    const int ai = (i / b) * b;
                    const int dx = i - ai, dy = j - aj;  // x - x*
                    const Offset w = dk.sample(rng);
                    const double u = rng.uniform();
                    Offset wa = w, wh;  // first parent relative to x and to x*
                    int dir_a = static_cast<int>(rng() >> 62), dir_h = dir_a;
                    if (u * dk.mass(w.dx, w.dy) <= dk.mass(w.dx + dx, w.dy + dy)) {
                        wh = {w.dx + dx, w.dy + dy};
                    } else {
                        for (int tries = 0;; ++tries) {
                            if (tries > 1000000) throw std::runtime_error("coupling rejection loop stalled");
                            const Offset v = dk.sample(rng);
                            if (rng.uniform() * dk.mass(v.dx, v.dy) > dk.mass(v.dx - dx, v.dy - dy)) {
                                wh = v;
                                break;
                            }
                        }
                        dir_h = static_cast<int>(rng() >> 62);
                    }
                    auto born = [&](int yi, int yj, int dir) {
                        yi = wrap(yi, N);
                        yj = wrap(yj, N);
                        return s0.get(yi, yj) &&
                               s0.get(wrap(yi + kDx[dir], N), wrap(yj + kDy[dir], N));
                    };
                    if (born(i + wa.dx, j + wa.dy, dir_a)) a.set(i, j, true);
                    if (born(ai + wh.dx, aj + wh.dy, dir_h)) h.set(i, j, true);
                });
            }
            death_phase(a, p.eta, seeds[k], t, 1);
            death_phase(h, p.eta, seeds[k], t, 1);
            long diff = 0;
            for (int j = 0; j < N; ++j)
                for (int w = 0; w < a.words_per_row(); ++w)
                    diff += std::popcount(a.row(j)[w] ^ h.row(j)[w]);
            frac[k] = static_cast<double>(diff) / (static_cast<double>(N) * N);
        }
    });
    double sum = 0.0;
    for (double f : frac) sum += f;
    return sum / static_cast<double>(seeds.size());
}

}  // namespace qcp
