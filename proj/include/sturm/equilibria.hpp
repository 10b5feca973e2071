// Bounded equilibria: shooting, grid polishing, linearized spectra, Sturm
// permutation and the adjacency relation.
#pragma once

#include <span>
#include <vector>

#include "sturm/coefficients.hpp"
#include "sturm/field.hpp"
#include "sturm/infinity_equilibrium.hpp"
#include "sturm/tridiagonal.hpp"

namespace sturm {

inline constexpr int kDefaultEigenCount = 16;

struct EquilibriumRecord {
    int id = 0;
    StateField profile;
    double eta = 0.0;          // u(0)
    double right_value = 0.0;  // u(pi)
    std::vector<double> eigenvalues;         // descending
    std::vector<StateField> eigenfunctions;  // L2-normalized, positive at x = 0
    int morse_index = 0;
    bool hyperbolic = true;
    double residual = 0.0;  // ||a u_xx + b u + f||_inf on the grid
};

/// Threshold separating zero eigenvalues from discretization noise.
inline double hyperbolicity_tol(double b) noexcept { return 1e-6 * (b > 1.0 ? b : 1.0); }

/// Integrates a u'' + b u + f = 0 from x = 0 with u(0) = eta, u'(0) = 0 and
/// returns the miss distance u'(pi). Escape (|u| > 1e8) returns +-infinity
/// with the sign of u' at escape.
double shoot(double eta, const CoefficientSpec& c);

/// Shooting trajectory sampled at the grid nodes.
StateField shoot_profile(double eta, const CoefficientSpec& c, const SpatialGrid& grid);

/// a u_xx + b u + f evaluated with the grid stencils.
StateField stationary_residual(const StateField& u, const CoefficientSpec& c);

/// Newton iteration on the discrete stationary equation. Returns the polished
/// profile; its residual is checked by the caller.
StateField polish_equilibrium(StateField guess, const CoefficientSpec& c);

/// Discrete v -> a v_xx + (a_p e_xx + f_p) v_x + (a_u e_xx + b + f_u) v with
/// Neumann ghost closure.
Tridiagonal linearized_operator(const StateField& e, const CoefficientSpec& c);

struct Spectrum {
    std::vector<double> eigenvalues;         // m largest, descending
    std::vector<StateField> eigenfunctions;  // matching, normalized, positive at x = 0
    int morse_index = 0;
    bool hyperbolic = true;
};

/// Eigen-decomposition of a tridiagonal operator through the diagonal similarity
/// that symmetrizes it. Requires positive off-diagonal products.
Spectrum tridiagonal_spectrum(const Tridiagonal& op, const SpatialGrid& grid, int m_eigs, double hyp_tol,
                              bool with_vectors = true);

/// Spectrum of the linearization at e. Eigenvalues are Richardson-extrapolated
/// from the grid and its refinement; eigenfunctions come from the grid itself.
Spectrum linearize(const EquilibriumRecord& e, const CoefficientSpec& c, int m_eigs = kDefaultEigenCount);

/// Scan/bracket/refine enumeration of equilibria by shooting; records sorted by
/// eta with spectra attached. Throws PreconditionError when the scan range does
/// not cover [-f_bound/b - 1, f_bound/b + 1].
std::vector<EquilibriumRecord> find_equilibria(double eta_min, double eta_max, int scan_n, const CoefficientSpec& c,
                                               const SpatialGrid& grid = SpatialGrid(),
                                               int m_eigs = kDefaultEigenCount);

/// sigma[k] = 1-based rank, in the u(pi) ordering, of the k-th equilibrium in
/// the u(0) ordering. Throws HypothesisError on ties (1e-8).
std::vector<int> sturm_permutation(std::span<const EquilibriumRecord> eqs);

/// Bounded equilibria u_* strictly between the two x = 0 values with
/// z(e_minus - u_*) = z(e_minus - e_plus) = z(e_plus - u_*). Returns their ids.
std::vector<int> blockers(const EquilibriumRecord& e_minus, const EquilibriumRecord& e_plus,
                          std::span<const EquilibriumRecord> all_bounded);
std::vector<int> blockers(const EquilibriumRecord& e_minus, const InfinityEquilibrium& phi,
                          std::span<const EquilibriumRecord> all_bounded);

bool adjacent(const EquilibriumRecord& e_minus, const EquilibriumRecord& e_plus,
              std::span<const EquilibriumRecord> all_bounded);
bool adjacent(const EquilibriumRecord& e_minus, const InfinityEquilibrium& phi,
              std::span<const EquilibriumRecord> all_bounded);

}  // namespace sturm
