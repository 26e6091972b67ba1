#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

namespace qcp {

enum class Boundary { Periodic, Clamped };

/// Density field on a regular grid. Node (i, j) sits at
/// (x0 + i * spacing, y0 + j * spacing); the window is
/// [x0, x0 + nx * spacing) x [y0, y0 + ny * spacing).
struct Field2D {
    double x0 = 0.0;
    double y0 = 0.0;
    double spacing = 1.0;
    int nx = 0;
    int ny = 0;
    Boundary boundary = Boundary::Periodic;
    double clamp_value = 0.0;  ///< value read outside the window when Clamped
    std::vector<double> values;  ///< row-major, j * nx + i

    static Field2D constant(double x0, double y0, double spacing, int nx, int ny, Boundary b,
                            double value, double clamp_value = 0.0);
    static Field2D from_function(double x0, double y0, double spacing, int nx, int ny, Boundary b,
                                 const std::function<double(double, double)>& u,
                                 double clamp_value = 0.0);

    double& at(int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
    double x(int i) const { return x0 + i * spacing; }
    double y(int j) const { return y0 + j * spacing; }
    double width() const { return nx * spacing; }
    double height() const { return ny * spacing; }

    /// Bilinear interpolation honoring the boundary mode.
    double sample(double x, double y) const;
};

/// Density profile on s_i = s_min + i * spacing; reads left of the grid
/// return left_limit and reads right of it return right_limit.
struct Profile1D {
    double s_min = 0.0;
    double spacing = 1.0;
    std::vector<double> values;
    double left_limit = 0.0;
    double right_limit = 0.0;

    std::size_t size() const noexcept { return values.size(); }
    double s(std::size_t i) const noexcept { return s_min + static_cast<double>(i) * spacing; }
    double s_max() const noexcept { return s(values.size() - 1); }
    /// Value at grid index i, which may fall outside the grid.
    double node(long i) const noexcept {
        if (i < 0) return left_limit;
        if (i >= static_cast<long>(values.size())) return right_limit;
        return values[static_cast<std::size_t>(i)];
    }
    /// Linear interpolation between nodes; limits outside [s_min, s_max].
    double operator()(double s) const noexcept;

    bool nonincreasing(double slack = 1e-12) const noexcept;
};

void write_field_csv(std::ostream& os, const Field2D& f);
Field2D read_field_csv(std::istream& is);

}  // namespace qcp
