// Spatial discretization of [0, pi] with Neumann boundary: grids, fields,
// trapezoid quadrature, cosine eigenbasis and nodal (zero-number) analysis.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sturm {

inline constexpr std::size_t kDefaultGridPoints = 257;

/// Uniform grid x_i = i*h on [0, pi], h = pi/(n-1). n is odd and >= 33 so
/// that pi/2 is always a node.
class SpatialGrid {
public:
    explicit SpatialGrid(std::size_t n_points = kDefaultGridPoints);

    std::size_t size() const noexcept { return n_; }
    double spacing() const noexcept { return h_; }
    double node(std::size_t i) const noexcept { return static_cast<double>(i) * h_; }
    std::vector<double> nodes() const;

    /// Grid with halved spacing (2n-1 points); every coarse node is a fine node.
    SpatialGrid refined() const { return SpatialGrid(2 * n_ - 1); }

    /// Trapezoid weight of node i.
    double weight(std::size_t i) const noexcept {
        return (i == 0 || i + 1 == n_) ? 0.5 * h_ : h_;
    }

    friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;

private:
    std::size_t n_;
    double h_;
};

/// Samples u_i of a profile on a grid. Values are required to be finite.
class StateField {
public:
    explicit StateField(SpatialGrid grid);
    StateField(SpatialGrid grid, std::vector<double> values, std::optional<double> time = std::nullopt);

    template <class Fn>
    static StateField from_function(const SpatialGrid& grid, Fn&& fn) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.node(i));
        return StateField(grid, std::move(v));
    }

    const SpatialGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    std::optional<double> time() const noexcept { return time_; }
    void set_time(std::optional<double> t) noexcept { time_ = t; }

    bool all_finite() const noexcept;

    StateField& operator+=(const StateField& other);
    StateField& operator-=(const StateField& other);
    StateField& operator*=(double s) noexcept;

    friend StateField operator+(StateField a, const StateField& b) { return a += b; }
    friend StateField operator-(StateField a, const StateField& b) { return a -= b; }
    friend StateField operator*(StateField a, double s) { return a *= s; }
    friend StateField operator*(double s, StateField a) { return a *= s; }
    friend StateField operator-(StateField a) { return a *= -1.0; }

private:
    SpatialGrid grid_;
    std::vector<double> values_;
    std::optional<double> time_;
};

/// Normalized Neumann eigenfunction phi_j of d^2/dx^2 with eigenvalue -j^2:
/// phi_0 = 1/sqrt(pi), phi_j = sqrt(2/pi) cos(jx).
struct EigenMode {
    int index;
    StateField values;
    double eigenvalue;
};

EigenMode eigen_mode(const SpatialGrid& grid, int j);

/// Samples of phi_j as a plain field.
StateField mode_field(const SpatialGrid& grid, int j);

/// Continuous eigenvalue lambda_j = -j^2.
inline double mode_eigenvalue(int j) noexcept { return -static_cast<double>(j) * j; }

/// Composite trapezoid approximation of the L2 pairing on [0, pi].
double inner(const StateField& u, const StateField& v);
double l2_norm(const StateField& u);
double sup_norm(const StateField& u) noexcept;

/// <u, phi_j>
double project_mode(const StateField& u, int j);

/// <u, phi_j> for j = 0..count-1.
std::vector<double> project_modes(const StateField& u, int count);

/// Sum_j coeffs[j] * phi_j on the grid.
StateField synthesize_modes(const SpatialGrid& grid, std::span<const double> coeffs);

/// Centered first derivative with ghost-node Neumann closure (zero at both ends).
StateField derivative(const StateField& u);

/// Second-order centered second derivative, ghost nodes u_{-1}=u_1, u_n=u_{n-2}.
StateField second_derivative(const StateField& u);

/// Number of strict sign changes after discarding entries with |u_i| <= tol;
/// -1 when every entry is discarded (u identically zero).
int zero_number(const StateField& u, double tol);

/// zero_number with the default relative band tol = 1e-9 * ||u||_inf.
int zero_number(const StateField& u);

enum class ZeroKind { Simple, Multiple, NotAZero };

/// Simple zero: |u_i| <= tol_val and |u_x| > tol_deriv; multiple if both small.
/// u_x is centered in the interior and one-sided second order at the ends.
ZeroKind classify_zero(const StateField& u, std::size_t i, double tol_val, double tol_deriv);

/// Writes "# n=<n>,h=<h>", then "x,u", then one row per node (17 significant digits).
void write_field_csv(std::ostream& os, const StateField& u);
StateField read_field_csv(std::istream& is);

}  // namespace sturm
