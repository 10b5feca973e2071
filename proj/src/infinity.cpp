#include "sturm/infinity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sturm/errors.hpp"

namespace sturm {

ProjectedState project(const StateField& u) {
    const double n = l2_norm(u);
    const double s = 1.0 / std::sqrt(1.0 + n * n);
    return {u * s, s};
}

StateField unproject(const ProjectedState& p) {
    if (!(p.z > 0.0)) throw AtInfinityError("unproject: z = 0 lies on the sphere at infinity");
    return p.chi * (1.0 / p.z);
}

int infinity_index_bound(double a_inf, double b) {
    if (!(a_inf > 0.0)) throw PreconditionError("infinity_equilibria: a_inf must be positive");
    if (!(b > 0.0)) throw PreconditionError("infinity_equilibria: b must be positive");
    auto j = static_cast<int>(std::floor(std::sqrt(b / a_inf)));
    while (a_inf * (j + 1.0) * (j + 1.0) <= b) ++j;
    while (j > 0 && a_inf * static_cast<double>(j) * j > b) --j;
    return j;
}

std::vector<InfinityEquilibrium> infinity_equilibria(double a_inf, double b) {
    const int n = infinity_index_bound(a_inf, b);
    std::vector<InfinityEquilibrium> out;
    for (int j = 0; j <= n; ++j) {
        out.push_back({j, 1});
        out.push_back({j, -1});
    }
    return out;
}

bool in_growup_band(int j, double a_inf, double b) noexcept { return a_inf * mode_eigenvalue(j) + b > 0.0; }

bool marginal_index(int j, double a_inf, double b) noexcept { return a_inf * mode_eigenvalue(j) + b == 0.0; }

StateField sphere_vector_field(const StateField& chi, const LimitDiffusionFn& a_inf) {
    const StateField p = derivative(chi);
    StateField lap = second_derivative(chi);
    for (std::size_t i = 0; i < chi.size(); ++i) lap[i] *= a_inf(chi.grid().node(i), chi[i], p[i]);
    const double proj = inner(lap, chi);
    return lap - chi * proj;
}

StateField sphere_vector_field(const StateField& chi, double a_inf) {
    return sphere_vector_field(chi, [a_inf](double, double, double) { return a_inf; });
}

namespace {

StateField normalized(StateField v) {
    const double n = l2_norm(v);
    if (!(n > 0.0)) throw PreconditionError("sphere flow: zero field has no direction");
    return v * (1.0 / n);
}

void require_unit(const StateField& chi) {
    if (std::abs(l2_norm(chi) - 1.0) > 1e-6) throw PreconditionError("sphere flow: ||chi|| must be 1 +- 1e-6");
}

StateField euler_substep(const StateField& chi, double dt, const LimitDiffusionFn& a_inf, int depth) {
    StateField next = chi + sphere_vector_field(chi, a_inf) * dt;
    const double drift = std::abs(l2_norm(next) - 1.0);
    if (drift > 1e-3 || !next.all_finite()) {
        if (depth > 40) throw FidelityError("sphere_flow_step: step halving did not control the norm drift");
        return euler_substep(euler_substep(chi, 0.5 * dt, a_inf, depth + 1), 0.5 * dt, a_inf, depth + 1);
    }
    return normalized(std::move(next));
}

}  // namespace

StateField sphere_flow_step(const StateField& chi, double dt, double a_inf) {
    if (!(dt > 0.0)) throw PreconditionError("sphere_flow_step: dt must be positive");
    require_unit(chi);
    auto c = project_modes(chi, std::min<int>(kSphereModes, static_cast<int>(chi.size()) - 1));
    double sum = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        c[j] *= std::exp(a_inf * mode_eigenvalue(static_cast<int>(j)) * dt);
        sum += c[j] * c[j];
    }
    const double s = 1.0 / std::sqrt(sum);
    for (double& v : c) v *= s;
    return synthesize_modes(chi.grid(), c);
}

StateField sphere_flow_step(const StateField& chi, double dt, const LimitDiffusionFn& a_inf) {
    if (!(dt > 0.0)) throw PreconditionError("sphere_flow_step: dt must be positive");
    require_unit(chi);
    // Explicit diffusion is stable only below h^2 / (2 a_max).
    const StateField p = derivative(chi);
    double a_max = 0.0;
    for (std::size_t i = 0; i < chi.size(); ++i) a_max = std::max(a_max, a_inf(chi.grid().node(i), chi[i], p[i]));
    const double h = chi.grid().spacing();
    const double stable = 0.4 * h * h / std::max(a_max, 1e-300);
    const auto substeps = static_cast<long>(std::ceil(dt / stable));
    StateField out = chi;
    for (long k = 0; k < substeps; ++k) out = euler_substep(out, dt / static_cast<double>(substeps), a_inf, 0);
    return out;
}

double energy_infinity(const StateField& chi) {
    const StateField p = derivative(chi);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += chi.grid().weight(i) * p[i] * p[i];
    return 0.5 * s;
}

int dominant_index(const StateField& chi) {
    const auto c = project_modes(chi, std::min<int>(kSphereModes, static_cast<int>(chi.size()) - 1));
    int best = 0;
    for (std::size_t j = 1; j < c.size(); ++j)
        if (std::abs(c[j]) > std::abs(c[static_cast<std::size_t>(best)])) best = static_cast<int>(j);
    return best;
}

SphereFlowRecord sphere_flow(const StateField& chi0, double dt, double t_max, double a_inf, double speed_tol) {
    if (!(dt > 0.0 && t_max > 0.0)) throw PreconditionError("sphere_flow: dt and t_max must be positive");
    const int m = std::min<int>(kSphereModes, static_cast<int>(chi0.size()) - 1);
    SphereFlowRecord rec(chi0.grid());
    // Advance the mode coefficients directly so invariant subspaces stay exact.
    auto c = project_modes(chi0, m);
    auto renormalize = [&c] {
        double sum = 0.0;
        for (double v : c) sum += v * v;
        if (!(sum > 0.0)) throw PreconditionError("sphere flow: zero field has no direction");
        const double s = 1.0 / std::sqrt(sum);
        for (double& v : c) v *= s;
    };
    renormalize();
    // Projections at rounding level are quadrature noise of an exact zero.
    for (double& v : c)
        if (std::abs(v) <= 64.0 * std::numeric_limits<double>::epsilon()) v = 0.0;
    renormalize();
    StateField chi = synthesize_modes(chi0.grid(), c);
    double t = 0.0;
    auto record = [&] {
        rec.times.push_back(t);
        rec.energies.push_back(energy_infinity(chi));
        rec.modes.push_back(c);
    };
    record();
    double speed = l2_norm(sphere_vector_field(chi, a_inf));
    while (t < t_max && speed > speed_tol) {
        const double h = std::min(dt, t_max - t);
        for (std::size_t j = 0; j < c.size(); ++j) c[j] *= std::exp(a_inf * mode_eigenvalue(static_cast<int>(j)) * h);
        renormalize();
        chi = synthesize_modes(chi0.grid(), c);
        t += h;
        record();
        speed = l2_norm(sphere_vector_field(chi, a_inf));
    }
    rec.final_speed = speed;
    rec.converged = speed <= speed_tol;
    int j = 0;
    for (std::size_t k = 1; k < c.size(); ++k)
        if (std::abs(c[k]) > std::abs(c[static_cast<std::size_t>(j)])) j = static_cast<int>(k);
    const double cj = c[static_cast<std::size_t>(j)];
    rec.limit_index = j;
    rec.limit_sign = cj >= 0.0 ? 1 : -1;
    rec.limit_distance = l2_norm(chi - mode_field(chi.grid(), j) * static_cast<double>(rec.limit_sign));
    rec.final_state = std::move(chi);
    return rec;
}

PlaneState plane_project(const StateField& u, int j_star) {
    if (j_star < 0) throw PreconditionError("plane_project: j_star must be nonnegative");
    const double anchor = project_mode(u, j_star);
    if (!(anchor > 1e-12 * (1.0 + l2_norm(u)))) {
        std::ostringstream msg;
        msg << "plane_project: <u, phi_" << j_star << "> = " << anchor << " is outside the chart domain";
        throw PreconditionError(msg.str());
    }
    return {u * (1.0 / anchor), 1.0 / anchor, j_star};
}

PlaneState plane_from_sphere(const ProjectedState& p, int j_star) {
    const double anchor = project_mode(p.chi, j_star);
    if (!(anchor > 1e-12)) throw PreconditionError("plane_from_sphere: <chi, phi_j*> must be positive");
    return {p.chi * (1.0 / anchor), p.z / anchor, j_star};
}

ProjectedState sphere_from_plane(const PlaneState& q) {
    const double n = l2_norm(q.xi);
    const double s = 1.0 / std::sqrt(n * n + q.zeta * q.zeta);
    return {q.xi * s, q.zeta * s};
}

std::vector<std::pair<int, double>> plane_flow_rates(int j_star, double a_inf, std::span<const int> j_list) {
    std::vector<std::pair<int, double>> out;
    out.reserve(j_list.size());
    for (int j : j_list) out.emplace_back(j, a_inf * (mode_eigenvalue(j) - mode_eigenvalue(j_star)));
    return out;
}

PlaneState plane_flow(const PlaneState& q, double t, double a_inf) {
    const int m = std::min<int>(kSphereModes, static_cast<int>(q.xi.size()) - 1);
    auto c = project_modes(q.xi, m);
    std::vector<int> js(c.size());
    for (std::size_t j = 0; j < js.size(); ++j) js[j] = static_cast<int>(j);
    const auto rates = plane_flow_rates(q.j_star, a_inf, js);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] *= std::exp(rates[j].second * t);
    return {synthesize_modes(q.xi.grid(), c), q.zeta, q.j_star};
}

GrowupDirection growup_direction(const TrajectoryRecord& tr, int window) {
    if (tr.outcome != Outcome::GrowUp) throw PreconditionError("growup_direction: trajectory is not a grow-up run");
    if (tr.samples() == 0 || tr.mode_history.front().empty())
        throw PreconditionError("growup_direction: no tracked modes");
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(window, 1)), tr.samples());
    const std::size_t modes = tr.mode_history.front().size();
    GrowupDirection best;
    for (std::size_t j = 0; j < modes; ++j) {
        double lowest = 1.0;
        for (std::size_t i = tr.samples() - w; i < tr.samples(); ++i)
            lowest = std::min(lowest, std::abs(tr.mode_history[i][j]) / tr.norms[i]);
        if (lowest > best.projection) {
            best.projection = lowest;
            best.j = static_cast<int>(j);
            best.sign = tr.mode_history.back()[j] >= 0.0 ? 1 : -1;
        }
    }
    best.determined = best.projection >= 1.0 - 1e-3;
    if (!best.determined) {
        best.j = -1;
        best.sign = 0;
    }
    return best;
}

std::optional<InfinityEquilibrium> predicted_growup_mode(const StateField& u0, double a_inf, double b, double tol) {
    const double scale = std::max(l2_norm(u0), 1e-300);
    for (int j = 0; in_growup_band(j, a_inf, b); ++j) {
        const double p = project_mode(u0, j);
        if (std::abs(p) > tol * scale) return InfinityEquilibrium{j, p > 0.0 ? 1 : -1};
    }
    return std::nullopt;
}

double tail_bound(const TrajectoryRecord& tr, int m_cut) {
    if (m_cut < 0) throw PreconditionError("tail_bound: m_cut must be nonnegative");
    double sup = 0.0;
    for (const auto& s : tr.snapshots) {
        const auto head = synthesize_modes(s.grid(), project_modes(s, m_cut + 1));
        sup = std::max(sup, l2_norm(s - head));
    }
    return sup;
}

double equator_rate(const StateField& u, const CoefficientSpec& c) {
    const double n = l2_norm(u);
    const StateField p = derivative(u);
    const StateField uxx = second_derivative(u);
    StateField lu(u.grid());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = u.grid().node(i);
        lu[i] = c.a(x, u[i], p[i], n) * uxx[i] + c.b * u[i] + c.f(x, u[i], p[i], n);
    }
    return inner(lu, u) / (1.0 + n * n);
}

std::vector<std::vector<double>> projected_rows(const TrajectoryRecord& tr) {
    std::vector<std::vector<double>> rows;
    rows.reserve(tr.samples());
    for (std::size_t i = 0; i < tr.samples(); ++i) {
        const double z = 1.0 / std::sqrt(1.0 + tr.norms[i] * tr.norms[i]);
        std::vector<double> row{tr.times[i], z};
        for (double c : tr.mode_history[i]) row.push_back(c * z);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace sturm
