#include "sturm/equilibria.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

#include "sturm/errors.hpp"

namespace sturm {

namespace {

constexpr double kEscape = 1e8;
constexpr double kMissTol = 1e-10;
constexpr double kShootTol = 1e-13;

struct Phase {
    double u, v;
};

Phase rhs(const CoefficientSpec& c, double x, const Phase& y, double norm) {
    const double a = c.a(x, y.u, y.v, norm);
    return {y.v, -(c.b * y.u + c.f(x, y.u, y.v, norm)) / a};
}

Phase rk4(const CoefficientSpec& c, double x, const Phase& y, double h, double norm) {
    const Phase k1 = rhs(c, x, y, norm);
    const Phase k2 = rhs(c, x + 0.5 * h, {y.u + 0.5 * h * k1.u, y.v + 0.5 * h * k1.v}, norm);
    const Phase k3 = rhs(c, x + 0.5 * h, {y.u + 0.5 * h * k2.u, y.v + 0.5 * h * k2.v}, norm);
    const Phase k4 = rhs(c, x + h, {y.u + h * k3.u, y.v + h * k3.v}, norm);
    return {y.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
            y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

// Fixed-step RK4 samples at the grid nodes; substeps per grid cell.
std::vector<double> sampled_shot(double eta, const CoefficientSpec& c, const SpatialGrid& grid, double norm,
                                 int substeps = 8) {
    std::vector<double> u(grid.size());
    Phase y{eta, 0.0};
    u[0] = eta;
    const double h = grid.spacing() / substeps;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double x = grid.node(i - 1);
        for (int s = 0; s < substeps; ++s, x += h) {
            y = rk4(c, x, y, h, norm);
            if (!(std::abs(y.u) < kEscape)) y.u = std::copysign(kEscape, y.u);
        }
        u[i] = y.u;
    }
    return u;
}

double trapezoid_norm(const std::vector<double>& u, const SpatialGrid& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += g.weight(i) * u[i] * u[i];
    return std::sqrt(s);
}

// Norm argument for norm-dependent coefficients: fixed point of
// N -> ||shot(eta; N)||.
double shooting_norm(double eta, const CoefficientSpec& c, const SpatialGrid& grid) {
    if (!c.norm_dependent) return 0.0;
    double norm = std::abs(eta) * std::sqrt(std::numbers::pi);
    for (int it = 0; it < 60; ++it) {
        const double next = trapezoid_norm(sampled_shot(eta, c, grid, norm), grid);
        if (std::abs(next - norm) <= 1e-13 * (1.0 + norm)) return next;
        norm = next;
    }
    return norm;
}

}  // namespace

double shoot(double eta, const CoefficientSpec& c) {
    const double norm = shooting_norm(eta, c, SpatialGrid(513));
    Phase y{eta, 0.0};
    double x = 0.0;
    double h = std::numbers::pi / 128.0;
    const double end = std::numbers::pi;
    int guard = 0;
    while (x < end) {
        if (++guard > 2000000) throw FidelityError("shoot: step budget exhausted");
        h = std::min(h, end - x);
        const Phase full = rk4(c, x, y, h, norm);
        const Phase half = rk4(c, x + 0.5 * h, rk4(c, x, y, 0.5 * h, norm), 0.5 * h, norm);
        const double err = std::max(std::abs(half.u - full.u), std::abs(half.v - full.v)) / 15.0;
        const double scale = kShootTol * (1.0 + std::max(std::abs(half.u), std::abs(half.v)));
        if (!std::isfinite(err) || err > scale) {
            if (!std::isfinite(half.u) || std::abs(half.u) > kEscape) {
                if (h < 1e-12) return std::copysign(std::numeric_limits<double>::infinity(), y.v == 0.0 ? y.u : y.v);
            }
            h *= std::isfinite(err) ? std::max(0.1, 0.9 * std::pow(scale / err, 0.2)) : 0.1;
            continue;
        }
        y = {half.u + (half.u - full.u) / 15.0, half.v + (half.v - full.v) / 15.0};
        x += h;
        if (std::abs(y.u) > kEscape)
            return std::copysign(std::numeric_limits<double>::infinity(), y.v == 0.0 ? y.u : y.v);
        h *= err > 0.0 ? std::min(4.0, 0.9 * std::pow(scale / err, 0.2)) : 4.0;
    }
    return y.v;
}

StateField shoot_profile(double eta, const CoefficientSpec& c, const SpatialGrid& grid) {
    const double norm = shooting_norm(eta, c, grid);
    return StateField(grid, sampled_shot(eta, c, grid, norm));
}

StateField stationary_residual(const StateField& u, const CoefficientSpec& c) {
    const StateField p = derivative(u);
    const StateField uxx = second_derivative(u);
    const double norm = l2_norm(u);
    StateField r(u.grid());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = u.grid().node(i);
        r[i] = c.a(x, u[i], p[i], norm) * uxx[i] + c.b * u[i] + c.f(x, u[i], p[i], norm);
    }
    return r;
}

Tridiagonal linearized_operator(const StateField& e, const CoefficientSpec& c) {
    const auto& g = e.grid();
    const std::size_t n = e.size();
    const double h = g.spacing();
    const double inv_h2 = 1.0 / (h * h);
    const StateField p = derivative(e);
    const StateField exx = second_derivative(e);
    const double norm = l2_norm(e);
    Tridiagonal op(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g.node(i);
        const double a = c.a(x, e[i], p[i], norm);
        const double drift = partial_a_p(c, x, e[i], p[i], norm) * exx[i] + partial_f_p(c, x, e[i], p[i], norm);
        const double react = partial_a_u(c, x, e[i], p[i], norm) * exx[i] + c.b + partial_f_u(c, x, e[i], p[i], norm);
        op.diag[i] = -2.0 * a * inv_h2 + react;
        if (i == 0) {
            op.upper[i] = 2.0 * a * inv_h2;
        } else if (i + 1 == n) {
            op.lower[i] = 2.0 * a * inv_h2;
        } else {
            op.lower[i] = a * inv_h2 - drift / (2.0 * h);
            op.upper[i] = a * inv_h2 + drift / (2.0 * h);
        }
    }
    return op;
}

StateField polish_equilibrium(StateField guess, const CoefficientSpec& c) {
    StateField u = std::move(guess);
    StateField r = stationary_residual(u, c);
    double res = sup_norm(r);
    for (int it = 0; it < 60; ++it) {
        if (res <= 1e-12 * (1.0 + sup_norm(u))) break;
        const Tridiagonal jac = linearized_operator(u, c);
        std::vector<double> minus_r(r.values().begin(), r.values().end());
        for (double& v : minus_r) v = -v;
        std::vector<double> delta;
        try {
            delta = solve(jac, minus_r);
        } catch (const FidelityError&) {
            break;
        }
        double lambda = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 12; ++ls, lambda *= 0.5) {
            StateField trial = u;
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += lambda * delta[i];
            if (!trial.all_finite()) continue;
            StateField tr = stationary_residual(trial, c);
            const double tres = sup_norm(tr);
            if (tres < res) {
                u = std::move(trial);
                r = std::move(tr);
                res = tres;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return u;
}

Spectrum tridiagonal_spectrum(const Tridiagonal& op, const SpatialGrid& grid, int m_eigs, double hyp_tol,
                              bool with_vectors) {
    const std::size_t n = op.size();
    Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n - 1));
    std::vector<double> scale(n, 1.0);
    for (std::size_t k = 0; k < n; ++k) diag(static_cast<Eigen::Index>(k)) = op.diag[k];
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double up = op.upper[k];
        const double lo = op.lower[k + 1];
        if (!(up * lo > 0.0)) {
            std::ostringstream msg;
            msg << "linearization is not symmetrizable at row " << k << " (off-diagonal product " << up * lo
                << "); refine the grid";
            throw FidelityError(msg.str());
        }
        sub(static_cast<Eigen::Index>(k)) = std::copysign(std::sqrt(up * lo), up);
        scale[k + 1] = scale[k] * std::sqrt(lo / up);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw FidelityError("linearization eigen-solver did not converge");

    const auto& values = es.eigenvalues();
    Spectrum s;
    double min_abs = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        if (values(k) > hyp_tol) ++s.morse_index;
        min_abs = std::min(min_abs, std::abs(values(k)));
    }
    s.hyperbolic = min_abs > hyp_tol;
    const int m = std::min<int>(m_eigs, static_cast<int>(n));
    for (int k = 0; k < m; ++k) {
        const Eigen::Index col = static_cast<Eigen::Index>(n) - 1 - k;
        s.eigenvalues.push_back(values(col));
        if (!with_vectors) continue;
        StateField v(grid);
        for (std::size_t i = 0; i < n; ++i) v[i] = scale[i] * es.eigenvectors()(static_cast<Eigen::Index>(i), col);
        const double nv = l2_norm(v);
        v *= (v[0] < 0.0 ? -1.0 : 1.0) / nv;
        s.eigenfunctions.push_back(std::move(v));
    }
    return s;
}

Spectrum linearize(const EquilibriumRecord& e, const CoefficientSpec& c, int m_eigs) {
    if (m_eigs < 1) throw PreconditionError("linearize: m_eigs must be positive");
    const double tol = hyperbolicity_tol(c.b);
    const SpatialGrid& grid = e.profile.grid();
    Spectrum coarse = tridiagonal_spectrum(linearized_operator(e.profile, c), grid, m_eigs, tol, true);

    // Second-order discretization: combine with the refined grid to cancel the
    // h^2 term of every tracked eigenvalue.
    const SpatialGrid fine_grid = grid.refined();
    const StateField fine = polish_equilibrium(shoot_profile(e.profile[0], c, fine_grid), c);
    const double fine_res = sup_norm(stationary_residual(fine, c));
    if (!(fine_res <= 1e-7 * (1.0 + sup_norm(fine))) || std::abs(fine[0] - e.profile[0]) > 1e-3 * (1.0 + std::abs(e.profile[0])))
        return coarse;
    const Spectrum refined = tridiagonal_spectrum(linearized_operator(fine, c), fine_grid, m_eigs, tol, false);

    Spectrum out;
    out.eigenfunctions = std::move(coarse.eigenfunctions);
    double min_abs = std::numeric_limits<double>::infinity();
    int positive = 0;
    for (std::size_t k = 0; k < coarse.eigenvalues.size(); ++k) {
        const double lam = (4.0 * refined.eigenvalues[k] - coarse.eigenvalues[k]) / 3.0;
        out.eigenvalues.push_back(lam);
        if (lam > tol) ++positive;
        min_abs = std::min(min_abs, std::abs(lam));
    }
    const auto m = static_cast<int>(coarse.eigenvalues.size());
    // Eigenvalues beyond the tracked ones are far below zero unless every tracked one is positive.
    out.morse_index = positive == m ? coarse.morse_index : positive;
    out.hyperbolic = min_abs > tol && (positive < m ? true : coarse.hyperbolic);
    return out;
}

namespace {

struct Bracket {
    double lo, hi, f_lo, f_hi;
};

// Bisection interleaved with secant (Illinois) steps; tolerates infinite
// end values produced by escaping shots.
std::optional<double> refine_root(Bracket br, const CoefficientSpec& c) {
    double a = br.lo, b = br.hi, fa = br.f_lo, fb = br.f_hi;
    int side = 0;
    for (int it = 0; it < 400; ++it) {
        double m;
        if (std::isfinite(fa) && std::isfinite(fb) && it % 3 != 2) {
            m = b - fb * (b - a) / (fb - fa);
            if (!(m > std::min(a, b) && m < std::max(a, b))) m = 0.5 * (a + b);
        } else {
            m = 0.5 * (a + b);
        }
        const double fm = shoot(m, c);
        if (std::abs(fm) <= kMissTol) return m;
        if ((fm > 0.0) == (fb > 0.0)) {
            b = m;
            fb = fm;
            if (side == -1 && std::isfinite(fa)) fa *= 0.5;
            side = -1;
        } else {
            a = m;
            fa = fm;
            if (side == 1 && std::isfinite(fb)) fb *= 0.5;
            side = 1;
        }
        if (std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a))) break;
    }
    // Collapsed bracket: accept only a genuine zero, not a pole. Near strongly
    // stable states the miss distance is too steep to reach kMissTol in double
    // precision; a sign change between small values one ulp apart is still a
    // zero, and grid polishing checks the residual afterwards.
    const double mid = 0.5 * (a + b);
    const double fm = shoot(mid, c);
    if (std::abs(fm) <= 10.0 * kMissTol) return mid;
    const double bound = 1e-3 * (1.0 + std::abs(mid));
    if (std::abs(fa) <= bound && std::abs(fb) <= bound && std::abs(b - a) <= 1e-12 * std::max(1.0, std::abs(a)))
        return mid;
    return std::nullopt;
}

}  // namespace

std::vector<EquilibriumRecord> find_equilibria(double eta_min, double eta_max, int scan_n, const CoefficientSpec& c,
                                               const SpatialGrid& grid, int m_eigs) {
    if (!(eta_min < eta_max)) throw PreconditionError("find_equilibria: eta_min must be below eta_max");
    if (scan_n < 100) throw PreconditionError("find_equilibria: scan_n must be >= 100");
    if (std::isfinite(c.f_bound) && c.b > 0.0) {
        const double need = c.f_bound / c.b + 1.0;
        if (eta_min > -need || eta_max < need) {
            std::ostringstream msg;
            msg << "find_equilibria: scan range [" << eta_min << ", " << eta_max << "] must cover [" << -need << ", "
                << need << "]";
            throw PreconditionError(msg.str());
        }
    }

    std::vector<double> etas(static_cast<std::size_t>(scan_n)), miss(etas.size());
    for (std::size_t k = 0; k < etas.size(); ++k) {
        etas[k] = eta_min + (eta_max - eta_min) * static_cast<double>(k) / static_cast<double>(scan_n - 1);
        miss[k] = shoot(etas[k], c);
    }

    // Scan points that already hit the tolerance; a run of consecutive hits is
    // a continuum of equilibria and is represented by its first point.
    std::vector<double> roots;
    std::vector<Bracket> brackets;
    for (std::size_t k = 0; k < etas.size(); ++k) {
        const bool hit = std::abs(miss[k]) <= kMissTol;
        if (hit && (k == 0 || std::abs(miss[k - 1]) > kMissTol)) roots.push_back(etas[k]);
        if (hit || k + 1 == etas.size() || std::abs(miss[k + 1]) <= kMissTol) continue;
        if ((miss[k] > 0.0) != (miss[k + 1] > 0.0)) brackets.push_back({etas[k], etas[k + 1], miss[k], miss[k + 1]});
    }

    std::vector<std::future<std::optional<double>>> pending;
    for (const auto& br : brackets) pending.push_back(std::async(std::launch::async, refine_root, br, std::cref(c)));
    for (auto& p : pending)
        if (auto r = p.get()) roots.push_back(*r);
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(), [](double x, double y) { return std::abs(x - y) < 1e-8; }),
                roots.end());

    auto build = [&](double eta) -> std::optional<EquilibriumRecord> {
        StateField profile = polish_equilibrium(shoot_profile(eta, c, grid), c);
        const double res = sup_norm(stationary_residual(profile, c));
        if (!(res <= 1e-7 * (1.0 + sup_norm(profile)))) return std::nullopt;
        EquilibriumRecord rec{0, profile, profile[0], profile[profile.size() - 1], {}, {}, 0, true, res};
        Spectrum s = linearize(rec, c, m_eigs);
        rec.eigenvalues = std::move(s.eigenvalues);
        rec.eigenfunctions = std::move(s.eigenfunctions);
        rec.morse_index = s.morse_index;
        rec.hyperbolic = s.hyperbolic;
        return rec;
    };
    std::vector<std::future<std::optional<EquilibriumRecord>>> builds;
    for (double eta : roots) builds.push_back(std::async(std::launch::async, build, eta));

    std::vector<EquilibriumRecord> out;
    for (std::size_t k = 0; k < builds.size(); ++k) {
        auto rec = builds[k].get();
        if (!rec) {
            std::ostringstream msg;
            msg << "find_equilibria: grid polishing failed for the shooting root eta=" << roots[k];
            throw FidelityError(msg.str());
        }
        out.push_back(std::move(*rec));
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.eta < y.eta; });
    std::vector<EquilibriumRecord> unique;
    for (auto& rec : out) {
        if (!unique.empty()) {
            StateField d = rec.profile - unique.back().profile;
            if (std::abs(rec.eta - unique.back().eta) < 1e-8 || sup_norm(d) < 1e-6) continue;
        }
        unique.push_back(std::move(rec));
    }
    for (std::size_t k = 0; k < unique.size(); ++k) unique[k].id = static_cast<int>(k);
    return unique;
}

std::vector<int> sturm_permutation(std::span<const EquilibriumRecord> eqs) {
    const std::size_t n = eqs.size();
    std::vector<std::size_t> by_left(n), by_right(n);
    std::iota(by_left.begin(), by_left.end(), 0);
    std::iota(by_right.begin(), by_right.end(), 0);
    std::sort(by_left.begin(), by_left.end(), [&](auto i, auto j) { return eqs[i].eta < eqs[j].eta; });
    std::sort(by_right.begin(), by_right.end(),
              [&](auto i, auto j) { return eqs[i].right_value < eqs[j].right_value; });
    for (std::size_t k = 1; k < n; ++k) {
        if (std::abs(eqs[by_left[k]].eta - eqs[by_left[k - 1]].eta) < 1e-8)
            throw HypothesisError("sturm_permutation: equal values u(0) (non-generic configuration)");
        if (std::abs(eqs[by_right[k]].right_value - eqs[by_right[k - 1]].right_value) < 1e-8)
            throw HypothesisError("sturm_permutation: equal values u(pi) (non-generic configuration)");
    }
    std::vector<int> rank_right(n);
    for (std::size_t r = 0; r < n; ++r) rank_right[by_right[r]] = static_cast<int>(r) + 1;
    std::vector<int> sigma(n);
    for (std::size_t k = 0; k < n; ++k) sigma[k] = rank_right[by_left[k]];
    return sigma;
}

namespace {

int difference_zeros(const StateField& u, const StateField& v) {
    StateField d = u - v;
    return zero_number(d);
}

bool same_equilibrium(const EquilibriumRecord& a, const EquilibriumRecord& b) {
    if (&a == &b) return true;
    StateField d = a.profile - b.profile;
    return sup_norm(d) == 0.0;
}

}  // namespace

std::vector<int> blockers(const EquilibriumRecord& e_minus, const EquilibriumRecord& e_plus,
                          std::span<const EquilibriumRecord> all_bounded) {
    if (same_equilibrium(e_minus, e_plus)) throw PreconditionError("adjacent: equilibria must be distinct");
    const double lo = std::min(e_minus.eta, e_plus.eta);
    const double hi = std::max(e_minus.eta, e_plus.eta);
    const int z_pair = difference_zeros(e_minus.profile, e_plus.profile);
    std::vector<int> out;
    for (const auto& u : all_bounded) {
        if (!(u.eta > lo && u.eta < hi)) continue;
        if (difference_zeros(e_minus.profile, u.profile) == z_pair && difference_zeros(e_plus.profile, u.profile) == z_pair)
            out.push_back(u.id);
    }
    return out;
}

std::vector<int> blockers(const EquilibriumRecord& e_minus, const InfinityEquilibrium& phi,
                          std::span<const EquilibriumRecord> all_bounded) {
    // Any bounded profile differs from +-Phi_k by the sign pattern of -+phi_k,
    // so both z(e_minus - Phi_k) and z(Phi_k - u_*) equal k.
    const int k = phi.j;
    std::vector<int> out;
    for (const auto& u : all_bounded) {
        const bool between = phi.sign > 0 ? u.eta > e_minus.eta : u.eta < e_minus.eta;
        if (!between) continue;
        if (difference_zeros(e_minus.profile, u.profile) == k) out.push_back(u.id);
    }
    return out;
}

bool adjacent(const EquilibriumRecord& e_minus, const EquilibriumRecord& e_plus,
              std::span<const EquilibriumRecord> all_bounded) {
    return blockers(e_minus, e_plus, all_bounded).empty();
}

bool adjacent(const EquilibriumRecord& e_minus, const InfinityEquilibrium& phi,
              std::span<const EquilibriumRecord> all_bounded) {
    return blockers(e_minus, phi, all_bounded).empty();
}

}  // namespace sturm
