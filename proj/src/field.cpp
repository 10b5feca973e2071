#include "sturm/field.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "sturm/errors.hpp"
#include "sturm/format.hpp"

namespace sturm {

SpatialGrid::SpatialGrid(std::size_t n_points) : n_(n_points), h_(0.0) {
    if (n_points < 33) throw PreconditionError("SpatialGrid: n_points must be >= 33, got " + std::to_string(n_points));
    if (n_points % 2 == 0) throw PreconditionError("SpatialGrid: n_points must be odd, got " + std::to_string(n_points));
    h_ = std::numbers::pi / static_cast<double>(n_points - 1);
}

std::vector<double> SpatialGrid::nodes() const {
    std::vector<double> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = node(i);
    x.back() = std::numbers::pi;
    return x;
}

StateField::StateField(SpatialGrid grid) : grid_(grid), values_(grid.size(), 0.0) {}

StateField::StateField(SpatialGrid grid, std::vector<double> values, std::optional<double> time)
    : grid_(grid), values_(std::move(values)), time_(time) {
    if (values_.size() != grid_.size())
        throw PreconditionError("StateField: " + std::to_string(values_.size()) + " values for a grid of " +
                                std::to_string(grid_.size()) + " points");
    if (!all_finite()) throw PreconditionError("StateField: non-finite value");
}

bool StateField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

static void require_same_grid(const StateField& a, const StateField& b, const char* op) {
    if (!(a.grid() == b.grid()))
        throw PreconditionError(std::string(op) + ": grid mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + " points)");
}

StateField& StateField::operator+=(const StateField& other) {
    require_same_grid(*this, other, "operator+");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

StateField& StateField::operator-=(const StateField& other) {
    require_same_grid(*this, other, "operator-");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

StateField& StateField::operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
}

StateField mode_field(const SpatialGrid& grid, int j) {
    if (j < 0) throw PreconditionError("mode index must be nonnegative");
    if (j == 0) {
        const double c = 1.0 / std::sqrt(std::numbers::pi);
        return StateField(grid, std::vector<double>(grid.size(), c));
    }
    const double c = std::sqrt(2.0 / std::numbers::pi);
    const double jd = static_cast<double>(j);
    return StateField::from_function(grid, [&](double x) { return c * std::cos(jd * x); });
}

EigenMode eigen_mode(const SpatialGrid& grid, int j) {
    return EigenMode{j, mode_field(grid, j), mode_eigenvalue(j)};
}

double inner(const StateField& u, const StateField& v) {
    require_same_grid(u, v, "inner");
    const auto& g = u.grid();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += g.weight(i) * u[i] * v[i];
    return s;
}

double l2_norm(const StateField& u) { return std::sqrt(std::max(0.0, inner(u, u))); }

double sup_norm(const StateField& u) noexcept {
    double m = 0.0;
    for (double v : u.values()) m = std::max(m, std::abs(v));
    return m;
}

double project_mode(const StateField& u, int j) {
    if (j < 0) throw PreconditionError("project_mode: j must be nonnegative");
    const auto& g = u.grid();
    const double jd = static_cast<double>(j);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += g.weight(i) * u[i] * std::cos(jd * g.node(i));
    return s * (j == 0 ? 1.0 / std::sqrt(std::numbers::pi) : std::sqrt(2.0 / std::numbers::pi));
}

std::vector<double> project_modes(const StateField& u, int count) {
    std::vector<double> c(static_cast<std::size_t>(std::max(count, 0)));
    for (int j = 0; j < count; ++j) c[static_cast<std::size_t>(j)] = project_mode(u, j);
    return c;
}

StateField synthesize_modes(const SpatialGrid& grid, std::span<const double> coeffs) {
    StateField u(grid);
    const double c0 = 1.0 / std::sqrt(std::numbers::pi);
    const double cj = std::sqrt(2.0 / std::numbers::pi);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i);
        double s = 0.0;
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            if (coeffs[j] == 0.0) continue;
            s += coeffs[j] * (j == 0 ? c0 : cj * std::cos(static_cast<double>(j) * x));
        }
        u[i] = s;
    }
    return u;
}

StateField derivative(const StateField& u) {
    StateField d(u.grid());
    const std::size_t n = u.size();
    const double inv2h = 0.5 / u.grid().spacing();
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i - 1]) * inv2h;
    return d;
}

StateField second_derivative(const StateField& u) {
    StateField d(u.grid());
    const std::size_t n = u.size();
    const double h = u.grid().spacing();
    const double inv_h2 = 1.0 / (h * h);
    d[0] = 2.0 * (u[1] - u[0]) * inv_h2;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
    d[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv_h2;
    return d;
}

int zero_number(const StateField& u, double tol) {
    int changes = 0;
    int last_sign = 0;
    for (double v : u.values()) {
        if (std::abs(v) <= tol) continue;
        const int s = v > 0.0 ? 1 : -1;
        if (last_sign != 0 && s != last_sign) ++changes;
        last_sign = s;
    }
    return last_sign == 0 ? -1 : changes;
}

int zero_number(const StateField& u) { return zero_number(u, 1e-9 * sup_norm(u)); }

ZeroKind classify_zero(const StateField& u, std::size_t i, double tol_val, double tol_deriv) {
    const std::size_t n = u.size();
    if (i >= n) throw PreconditionError("classify_zero: node index out of range");
    if (std::abs(u[i]) > tol_val) return ZeroKind::NotAZero;
    const double h = u.grid().spacing();
    double ux;
    if (i == 0)
        ux = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    else if (i + 1 == n)
        ux = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    else
        ux = (u[i + 1] - u[i - 1]) / (2.0 * h);
    return std::abs(ux) > tol_deriv ? ZeroKind::Simple : ZeroKind::Multiple;
}

void write_field_csv(std::ostream& os, const StateField& u) {
    const auto& g = u.grid();
    os << "# n=" << g.size() << ",h=" << format_double(g.spacing()) << '\n';
    os << "x,u\n";
    const auto x = g.nodes();
    for (std::size_t i = 0; i < u.size(); ++i) os << format_double(x[i]) << ',' << format_double(u[i]) << '\n';
}

StateField read_field_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# n=", 0) != 0)
        throw PreconditionError("read_field_csv: missing '# n=,h=' metadata line");
    const std::size_t n = std::stoul(line.substr(4, line.find(',') - 4));
    SpatialGrid grid(n);
    if (!std::getline(is, line) || line != "x,u") throw PreconditionError("read_field_csv: missing 'x,u' header");
    std::vector<double> values;
    values.reserve(n);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw PreconditionError("read_field_csv: malformed row '" + line + "'");
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    return StateField(grid, std::move(values));
}

}  // namespace sturm
