#include "qcp/field.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qcp {

Field2D Field2D::constant(double x0, double y0, double spacing, int nx, int ny, Boundary b,
                          double value, double clamp_value) {
    if (nx <= 0 || ny <= 0 || !(spacing > 0.0))
        throw std::invalid_argument("field grid must be non-empty with positive spacing");
    Field2D f{x0, y0, spacing, nx, ny, b, clamp_value, {}};
    f.values.assign(static_cast<std::size_t>(nx) * ny, value);
    return f;
}

Field2D Field2D::from_function(double x0, double y0, double spacing, int nx, int ny, Boundary b,
                               const std::function<double(double, double)>& u,
                               double clamp_value) {
    Field2D f = constant(x0, y0, spacing, nx, ny, b, 0.0, clamp_value);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) f.at(i, j) = u(f.x(i), f.y(j));
    return f;
}

double Field2D::sample(double x, double y) const {
    const double gx = (x - x0) / spacing, gy = (y - y0) / spacing;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const double tx = gx - fx, ty = gy - fy;
    const long i0 = static_cast<long>(fx), j0 = static_cast<long>(fy);
    auto node = [&](long i, long j) -> double {
        if (boundary == Boundary::Periodic) {
            i = ((i % nx) + nx) % nx;
            j = ((j % ny) + ny) % ny;
            return at(static_cast<int>(i), static_cast<int>(j));
        }
        if (i < 0 || j < 0 || i >= nx || j >= ny) return clamp_value;
        return at(static_cast<int>(i), static_cast<int>(j));
    };
    const double a = node(i0, j0) * (1 - tx) + node(i0 + 1, j0) * tx;
    const double b = node(i0, j0 + 1) * (1 - tx) + node(i0 + 1, j0 + 1) * tx;
    return a * (1 - ty) + b * ty;
}

double Profile1D::operator()(double s) const noexcept {
    const double g = (s - s_min) / spacing;
    if (g < 0.0) return g > -1e-12 ? values.front() : left_limit;
    const double last = static_cast<double>(values.size() - 1);
    if (g > last) return g < last + 1e-12 ? values.back() : right_limit;
    const auto i = static_cast<std::size_t>(g);
    if (i + 1 >= values.size()) return values.back();
    const double t = g - static_cast<double>(i);
    return values[i] + t * (values[i + 1] - values[i]);
}

bool Profile1D::nonincreasing(double slack) const noexcept {
    if (values.empty()) return left_limit + slack >= right_limit;
    if (values.front() > left_limit + slack) return false;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[i - 1] + slack) return false;
    return values.back() + slack >= right_limit;
}

void write_field_csv(std::ostream& os, const Field2D& f) {
    os.precision(17);
    os << "# x0=" << f.x0 << " y0=" << f.y0 << " x1=" << f.x0 + f.width()
       << " y1=" << f.y0 + f.height() << " spacing=" << f.spacing << " nx=" << f.nx
       << " ny=" << f.ny << " boundary="
       << (f.boundary == Boundary::Periodic ? "periodic" : "clamped")
       << " clamp=" << f.clamp_value << '\n';
    for (int j = 0; j < f.ny; ++j) {
        for (int i = 0; i < f.nx; ++i) {
            if (i) os << ',';
            os << f.at(i, j);
        }
        os << '\n';
    }
}

Field2D read_field_csv(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header.rfind("# ", 0) != 0)
        throw std::runtime_error("field CSV: missing header line");
    std::istringstream hs(header.substr(2));
    Field2D f;
    std::string tok;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "x0") f.x0 = std::stod(val);
        else if (key == "y0") f.y0 = std::stod(val);
        else if (key == "spacing") f.spacing = std::stod(val);
        else if (key == "nx") f.nx = std::stoi(val);
        else if (key == "ny") f.ny = std::stoi(val);
        else if (key == "clamp") f.clamp_value = std::stod(val);
        else if (key == "boundary") {
            if (val == "periodic") f.boundary = Boundary::Periodic;
            else if (val == "clamped") f.boundary = Boundary::Clamped;
            else throw std::runtime_error("field CSV: bad boundary '" + val + "'");
        }
    }
    if (f.nx <= 0 || f.ny <= 0) throw std::runtime_error("field CSV: bad grid size");
    f.values.reserve(static_cast<std::size_t>(f.nx) * f.ny);
    std::string line;
    for (int j = 0; j < f.ny; ++j) {
        if (!std::getline(is, line)) throw std::runtime_error("field CSV: truncated");
        std::istringstream ls(line);
        std::string cell;
        int count = 0;
        while (std::getline(ls, cell, ',')) {
            f.values.push_back(std::stod(cell));
            ++count;
        }
        if (count != f.nx) throw std::runtime_error("field CSV: ragged row");
    }
    return f;
}

}  // namespace qcp
