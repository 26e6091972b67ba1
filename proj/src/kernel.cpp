#include "qcp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace qcp {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

int table_half(const KernelSpec& spec) { return static_cast<int>(spec.table.size() / 2); }

}  // namespace

KernelSpec KernelSpec::uniform_square(double radius) {
    KernelSpec s;
    s.family = KernelFamily::UniformSquare;
    s.radius = radius;
    return s;
}

KernelSpec KernelSpec::truncated_gaussian(double sigma, double cutoff) {
    KernelSpec s;
    s.family = KernelFamily::TruncatedGaussian;
    s.sigma = sigma;
    s.radius = cutoff;
    return s;
}

KernelSpec KernelSpec::point_mass() { return from_table(1.0, {{1.0}}); }

KernelSpec KernelSpec::from_table(double spacing, std::vector<std::vector<double>> weights) {
    KernelSpec s;
    s.family = KernelFamily::Table;
    s.spacing = spacing;
    s.table = std::move(weights);
    return s;
}

KernelSpec build_kernel(KernelSpec spec) {
    switch (spec.family) {
    case KernelFamily::UniformSquare:
        if (!positive_finite(spec.radius))
            throw std::invalid_argument("uniform-square kernel needs a positive finite radius");
        break;
    case KernelFamily::TruncatedGaussian:
        if (!positive_finite(spec.sigma))
            throw std::invalid_argument("truncated-gaussian kernel needs a positive finite sigma");
        if (!positive_finite(spec.radius))
            throw std::invalid_argument(
                "truncated-gaussian kernel needs a positive finite cutoff radius");
        break;
    case KernelFamily::Table: {
        if (!positive_finite(spec.spacing))
            throw std::invalid_argument("table kernel needs a positive finite spacing");
        const std::size_t n = spec.table.size();
        if (n == 0 || n % 2 == 0)
            throw std::invalid_argument("table kernel must be a non-empty odd square grid");
        double total = 0.0;
        for (const auto& row : spec.table) {
            if (row.size() != n)
                throw std::invalid_argument("table kernel must be a non-empty odd square grid");
            for (double w : row) {
                if (!std::isfinite(w) || w < 0.0)
                    throw std::invalid_argument("table kernel weights must be finite and >= 0");
                total += w;
            }
        }
        if (!(total > 0.0)) throw std::invalid_argument("table kernel has zero total weight");
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                const double w = spec.table[j][i];
                if (w != spec.table[j][n - 1 - i] || w != spec.table[n - 1 - j][i])
                    throw std::invalid_argument(
                        "table kernel is not symmetric under axis reflections");
            }
        for (auto& row : spec.table)
            for (double& w : row) w /= total;
        // Reflection symmetry must survive the division exactly.
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                spec.table[j][n - 1 - i] = spec.table[j][i];
                spec.table[n - 1 - j][i] = spec.table[j][i];
            }
        break;
    }
    }
    return spec;
}

double kernel_density(const KernelSpec& spec, double x, double y) {
    switch (spec.family) {
    case KernelFamily::UniformSquare:
        if (std::abs(x) <= spec.radius && std::abs(y) <= spec.radius)
            return 1.0 / (4.0 * spec.radius * spec.radius);
        return 0.0;
    case KernelFamily::TruncatedGaussian: {
        const double r2 = x * x + y * y;
        if (r2 > spec.radius * spec.radius) return 0.0;
        const double s2 = spec.sigma * spec.sigma;
        // Mass of the untruncated Gaussian inside the disk is 1 - exp(-R^2 / 2 sigma^2).
        const double inside = -std::expm1(-spec.radius * spec.radius / (2.0 * s2));
        return std::exp(-r2 / (2.0 * s2)) / (2.0 * std::numbers::pi * s2 * inside);
    }
    case KernelFamily::Table:
        throw std::invalid_argument("table kernels are atomic and have no density");
    }
    return 0.0;
}

double kernel_support_diameter(const KernelSpec& spec) {
    switch (spec.family) {
    case KernelFamily::UniformSquare:
        return 2.0 * std::numbers::sqrt2 * spec.radius;
    case KernelFamily::TruncatedGaussian:
        return 2.0 * spec.radius;
    case KernelFamily::Table: {
        const int h = table_half(spec);
        double best = 0.0;
        for (int j = -h; j <= h; ++j)
            for (int i = -h; i <= h; ++i)
                if (spec.table[j + h][i + h] > 0.0)
                    best = std::max(best, std::hypot(i * spec.spacing, j * spec.spacing));
        return 2.0 * best;
    }
    }
    return 0.0;
}

std::string to_string(KernelFamily f) {
    switch (f) {
    case KernelFamily::UniformSquare: return "uniform-square";
    case KernelFamily::TruncatedGaussian: return "truncated-gaussian";
    case KernelFamily::Table: return "table";
    }
    return "?";
}

KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "uniform-square") return KernelFamily::UniformSquare;
    if (s == "truncated-gaussian") return KernelFamily::TruncatedGaussian;
    if (s == "table") return KernelFamily::Table;
    throw std::invalid_argument("unknown kernel family '" + s + "'");
}

DiscreteKernel::DiscreteKernel(int resolution, int reach, std::vector<double> dense)
    : resolution_(resolution), reach_(reach), dense_(std::move(dense)) {
    const auto w = static_cast<std::size_t>(2 * reach_ + 1);
    if (dense_.size() != w * w) throw std::invalid_argument("dense kernel has wrong size");
    double max_norm2 = 0.0;
    for (int dy = -reach_; dy <= reach_; ++dy)
        for (int dx = -reach_; dx <= reach_; ++dx) {
            const double m = dense_[index(dx, dy)];
            if (m > 0.0) {
                offsets_.push_back({dx, dy});
                masses_.push_back(m);
                max_norm2 = std::max(max_norm2, double(dx) * dx + double(dy) * dy);
            }
        }
    if (offsets_.empty()) throw std::invalid_argument("discrete kernel has no mass");
    // Support is symmetric about the origin, so the diameter is twice the max norm.
    diameter_ = 2.0 * std::sqrt(max_norm2) / resolution_;
    build_alias();
}

void DiscreteKernel::build_alias() {
    const std::size_t n = masses_.size();
    alias_prob_.assign(n, 1.0);
    alias_.resize(n);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = masses_[i] * static_cast<double>(n);
        alias_[i] = static_cast<std::uint32_t>(i);
        (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        const std::size_t s = small.back();
        small.pop_back();
        const std::size_t l = large.back();
        alias_prob_[s] = scaled[s];
        alias_[s] = static_cast<std::uint32_t>(l);
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (std::size_t i : small) alias_prob_[i] = 1.0;
    for (std::size_t i : large) alias_prob_[i] = 1.0;
}

DiscreteKernel discretize(const KernelSpec& raw_spec, int L) {
    if (L < 1) throw std::invalid_argument("discretization resolution L must be >= 1");
    const KernelSpec spec = build_kernel(raw_spec);
    const double h = 1.0 / L;

    int reach = 0;
    switch (spec.family) {
    case KernelFamily::UniformSquare:
    case KernelFamily::TruncatedGaussian:
        reach = static_cast<int>(std::ceil(spec.radius * L)) + 1;
        break;
    case KernelFamily::Table: {
        const int half = table_half(spec);
        reach = static_cast<int>(std::floor(half * spec.spacing * L + 0.5)) + 1;
        break;
    }
    }

    // Quadrant values q(i, j) for i, j >= 0; the other quadrants are copies.
    const auto qw = static_cast<std::size_t>(reach + 1);
    std::vector<double> quad(qw * qw, 0.0);
    auto q = [&](int i, int j) -> double& {
        return quad[static_cast<std::size_t>(j) * qw + static_cast<std::size_t>(i)];
    };

    switch (spec.family) {
    case KernelFamily::UniformSquare: {
        const double rho = spec.radius;
        const double dens = 1.0 / (4.0 * rho * rho);
        std::vector<double> len(qw);
        for (int i = 0; i <= reach; ++i) {
            const double lo = (i - 0.5) * h, hi = (i + 0.5) * h;
            len[i] = std::max(0.0, std::min(hi, rho) - std::max(lo, -rho));
        }
        for (int j = 0; j <= reach; ++j)
            for (int i = 0; i <= reach; ++i) q(i, j) = len[i] * len[j] * dens;
        break;
    }
    case KernelFamily::TruncatedGaussian: {
        for (int j = 0; j <= reach; ++j)
            for (int i = 0; i <= reach; ++i) {
                double acc = 0.0;
                for (int b = 0; b < 4; ++b)
                    for (int a = 0; a < 4; ++a) {
                        const double x = (i + (a + 0.5) / 4.0 - 0.5) * h;
                        const double y = (j + (b + 0.5) / 4.0 - 0.5) * h;
                        acc += kernel_density(spec, x, y);
                    }
                q(i, j) = acc * h * h / 16.0;
            }
        break;
    }
    case KernelFamily::Table: {
        const int half = table_half(spec);
        const auto fw = static_cast<std::size_t>(2 * reach + 1);
        std::vector<double> full(fw * fw, 0.0);
        for (int jj = -half; jj <= half; ++jj)
            for (int ii = -half; ii <= half; ++ii) {
                const double w = spec.table[jj + half][ii + half];
                if (w == 0.0) continue;
                const int ci = static_cast<int>(std::floor(ii * spec.spacing * L + 0.5));
                const int cj = static_cast<int>(std::floor(jj * spec.spacing * L + 0.5));
                full[static_cast<std::size_t>(cj + reach) * fw +
                     static_cast<std::size_t>(ci + reach)] += w;
            }
        auto at = [&](int i, int j) {
            return full[static_cast<std::size_t>(j + reach) * fw +
                        static_cast<std::size_t>(i + reach)];
        };
        for (int j = 0; j <= reach; ++j)
            for (int i = 0; i <= reach; ++i) {
                if (i == 0 && j == 0) {
                    q(i, j) = at(0, 0);
                } else if (i == 0) {
                    q(i, j) = (at(0, j) + at(0, -j)) / 2.0;
                } else if (j == 0) {
                    q(i, j) = (at(i, 0) + at(-i, 0)) / 2.0;
                } else {
                    q(i, j) = (at(i, j) + at(-i, j) + at(i, -j) + at(-i, -j)) / 4.0;
                }
            }
        break;
    }
    }

    // Trim empty outer rings.
    int used = 0;
    for (int j = 0; j <= reach; ++j)
        for (int i = 0; i <= reach; ++i)
            if (q(i, j) > 0.0) used = std::max({used, i, j});

    const auto w = static_cast<std::size_t>(2 * used + 1);
    std::vector<double> dense(w * w, 0.0);
    long double total = 0.0L;
    for (int dy = -used; dy <= used; ++dy)
        for (int dx = -used; dx <= used; ++dx) {
            const double m = q(std::abs(dx), std::abs(dy));
            dense[static_cast<std::size_t>(dy + used) * w + static_cast<std::size_t>(dx + used)] =
                m;
            total += m;
        }
    if (!(total > 0.0L)) throw std::invalid_argument("kernel has no mass at this resolution");
    const auto norm = static_cast<double>(total);
    for (double& m : dense) m /= norm;
    return DiscreteKernel(L, used, std::move(dense));
}

Direction Direction::from_degrees(double deg) {
    const double rad = deg * std::numbers::pi / 180.0;
    return {std::cos(rad), std::sin(rad)};
}

double Direction::degrees() const { return std::atan2(y, x) * 180.0 / std::numbers::pi; }

Kernel1D marginal_1d(const DiscreteKernel& dk, Direction dir, double spacing) {
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw std::invalid_argument("marginal spacing must be positive");
    const double norm = std::hypot(dir.x, dir.y);
    if (!(norm > 0.0)) throw std::invalid_argument("direction must be nonzero");
    double ux = dir.x / norm, uy = dir.y / norm;
    // The kernel is point symmetric, so xi and -xi have the same marginal;
    // canonicalize so both produce bit-identical output.
    if (ux < 0.0 || (ux == 0.0 && uy < 0.0)) {
        ux = -ux;
        uy = -uy;
    }

    const auto offs = dk.offsets();
    const auto mass = dk.masses();
    const double scale = 1.0 / (dk.resolution() * spacing);
    std::vector<int> bins(offs.size());
    int reach = 0;
    for (std::size_t k = 0; k < offs.size(); ++k) {
        const double v = (offs[k].dx * ux + offs[k].dy * uy) * scale;
        bins[k] = static_cast<int>(std::floor(v + 0.5));
        reach = std::max(reach, std::abs(bins[k]));
    }
    std::vector<long double> raw(static_cast<std::size_t>(2 * reach + 1), 0.0L);
    for (std::size_t k = 0; k < offs.size(); ++k)
        raw[static_cast<std::size_t>(bins[k] + reach)] += mass[k];

    Kernel1D out;
    out.spacing = spacing;
    out.reach = reach;
    out.masses.assign(raw.size(), 0.0);
    out.masses[static_cast<std::size_t>(reach)] = static_cast<double>(raw[reach]);
    for (int m = 1; m <= reach; ++m) {
        const auto v = static_cast<double>(
            (raw[static_cast<std::size_t>(reach + m)] + raw[static_cast<std::size_t>(reach - m)]) /
            2.0L);
        out.masses[static_cast<std::size_t>(reach + m)] = v;
        out.masses[static_cast<std::size_t>(reach - m)] = v;
    }
    return out;
}

Kernel1D point_mass_1d(double spacing) {
    Kernel1D k;
    k.spacing = spacing;
    k.reach = 0;
    k.masses = {1.0};
    return k;
}

void write_kernel_csv(std::ostream& os, const DiscreteKernel& dk) {
    os << "dx,dy,mass\n";
    os.precision(17);
    const double h = 1.0 / dk.resolution();
    const auto offs = dk.offsets();
    const auto mass = dk.masses();
    for (std::size_t k = 0; k < offs.size(); ++k)
        os << offs[k].dx * h << ',' << offs[k].dy * h << ',' << mass[k] << '\n';
}

}  // namespace qcp
