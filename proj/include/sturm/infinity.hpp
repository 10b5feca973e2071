// Poincare compactification of the phase space, the flows it induces on the
// hemisphere and on the planes C_j, equilibria at infinity and grow-up
// direction diagnostics.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sturm/coefficients.hpp"
#include "sturm/field.hpp"
#include "sturm/infinity_equilibrium.hpp"
#include "sturm/integrator.hpp"

namespace sturm {

/// Number of normalized modes kept by the Galerkin sphere flow.
inline constexpr int kSphereModes = 32;

struct ProjectedState {
    StateField chi;
    double z = 1.0;
};

struct PlaneState {
    StateField xi;
    double zeta = 0.0;
    int j_star = 0;
};

/// (chi, z) = (u, 1) / sqrt(1 + ||u||^2).
ProjectedState project(const StateField& u);

/// u = chi / z. Throws AtInfinityError when z <= 0.
StateField unproject(const ProjectedState& p);

/// floor(sqrt(b / a_inf)), exact at perfect squares.
int infinity_index_bound(double a_inf, double b);

/// +-Phi_j for j = 0..N, ordered (j, +) before (j, -).
std::vector<InfinityEquilibrium> infinity_equilibria(double a_inf, double b);

/// Strict grow-up band membership a_inf * lambda_j + b > 0.
bool in_growup_band(int j, double a_inf, double b) noexcept;

/// Marginal index: a_inf * j^2 == b.
bool marginal_index(int j, double a_inf, double b) noexcept;

/// Limiting diffusion a_inf(x, chi, chi_x) for the general equator flow.
using LimitDiffusionFn = std::function<double(double x, double chi, double chi_x)>;

/// a(chi) chi_xx - chi <a(chi) chi_xx, chi> on the grid.
StateField sphere_vector_field(const StateField& chi, const LimitDiffusionFn& a_inf);
StateField sphere_vector_field(const StateField& chi, double a_inf);

/// One step of the equator flow followed by renormalization. Constant a_inf
/// uses the exact solution of the mode equations in the Galerkin space of
/// kSphereModes modes. The general form uses explicit Euler substeps; a
/// substep whose pre-normalization drift exceeds 1e-3 is split in half.
StateField sphere_flow_step(const StateField& chi, double dt, double a_inf);
StateField sphere_flow_step(const StateField& chi, double dt, const LimitDiffusionFn& a_inf);

/// Dirichlet energy int chi_x^2 / 2 (trapezoid rule, centered differences).
double energy_infinity(const StateField& chi);

struct SphereFlowRecord {
    std::vector<double> times;
    std::vector<double> energies;
    std::vector<std::vector<double>> modes;  // <chi, phi_j>, j < kSphereModes
    StateField final_state;
    double final_speed = 0.0;  // ||chi_t|| at the final state
    bool converged = false;    // final_speed <= speed_tol before t_max
    int limit_index = -1;      // j of the nearest +-phi_j
    int limit_sign = 0;
    double limit_distance = 0.0;

    explicit SphereFlowRecord(const SpatialGrid& g) : final_state(g) {}
};

/// Runs the constant-a_inf equator flow from chi0 (normalized first) with step dt.
SphereFlowRecord sphere_flow(const StateField& chi0, double dt, double t_max, double a_inf,
                             double speed_tol = 1e-9);

/// Index of the largest |<chi, phi_j>|, j < kSphereModes.
int dominant_index(const StateField& chi);

/// (xi, zeta) = (u, 1) / <u, phi_j*>. Throws PreconditionError unless
/// <u, phi_j*> exceeds 1e-12 (1 + ||u||).
PlaneState plane_project(const StateField& u, int j_star);

/// Change of coordinates (chi, z) -> (chi, z) / <chi, phi_j*>; z may be 0.
PlaneState plane_from_sphere(const ProjectedState& p, int j_star);

/// Inverse of plane_from_sphere on the positive sheet.
ProjectedState sphere_from_plane(const PlaneState& q);

/// a_inf (lambda_j - lambda_j*) = a_inf (j*^2 - j^2) for each j.
std::vector<std::pair<int, double>> plane_flow_rates(int j_star, double a_inf, std::span<const int> j_list);

/// Exact limiting plane flow at zeta = 0 over time t, in the Galerkin space.
PlaneState plane_flow(const PlaneState& q, double t, double a_inf);

struct GrowupDirection {
    bool determined = false;
    int j = -1;
    int sign = 0;
    double projection = 0.0;  // smallest |<u/||u||, phi_j>| over the trailing window
};

/// Mode whose normalized projection stays >= 1 - 1e-3 over the trailing
/// window of samples. Requires a grow-up trajectory.
GrowupDirection growup_direction(const TrajectoryRecord& tr, int window = 10);

/// Smallest j in the strict grow-up band with |<u0, phi_j>| above tol, with the
/// sign of that projection; nullopt when no band mode is excited.
std::optional<InfinityEquilibrium> predicted_growup_mode(const StateField& u0, double a_inf, double b,
                                                         double tol = 1e-12);

/// sup over snapshots of ||u - sum_{j <= m_cut} <u, phi_j> phi_j||.
double tail_bound(const TrajectoryRecord& tr, int m_cut);

/// <L_z(chi), chi> = z^2 <a u_xx + b u + f, u> at u = chi / z.
double equator_rate(const StateField& u, const CoefficientSpec& c);

/// Rows (t, z, z * <u, phi_0>, ..., z * <u, phi_J>) of a trajectory.
std::vector<std::vector<double>> projected_rows(const TrajectoryRecord& tr);

}  // namespace sturm
