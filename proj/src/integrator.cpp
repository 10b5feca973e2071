#include "sturm/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sturm/errors.hpp"
#include "sturm/tridiagonal.hpp"

namespace sturm {

void StepController::validate() const {
    if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max))
        throw PreconditionError("StepController: require 0 < dt_min <= dt_init <= dt_max");
    if (!(rtol > 0.0 && atol > 0.0 && convergence_tol > 0.0))
        throw PreconditionError("StepController: tolerances must be positive");
    if (!(t_max > 0.0)) throw PreconditionError("StepController: t_max must be positive");
    if (!(growup_norm_threshold > 0.0)) throw PreconditionError("StepController: growup threshold must be positive");
    if (growup_window < 2 || convergence_window < 1 || track_modes < 0 || snapshot_every < 1)
        throw PreconditionError("StepController: invalid window/tracking parameters");
}

StepController StepController::fixed(double dt, double t_max) {
    StepController c;
    c.dt_init = c.dt_min = c.dt_max = dt;
    c.t_max = t_max;
    return c;
}

const char* to_string(Outcome o) noexcept {
    switch (o) {
        case Outcome::Converged: return "converged";
        case Outcome::GrowUp: return "growup";
        case Outcome::TimeLimit: return "time-limit";
    }
    return "?";
}

StateField step(const StateField& u, double dt, const CoefficientSpec& c) {
    if (!(dt > 0.0)) throw PreconditionError("step: dt must be positive");
    if (!(dt * c.b < 1.0)) throw PreconditionError("step: dt*b must be below 1 for the implicit growth term");
    const auto& g = u.grid();
    const std::size_t n = u.size();
    const double h = g.spacing();
    const double r = dt / (h * h);
    const double norm = l2_norm(u);
    const StateField p = derivative(u);

    Tridiagonal m(n);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g.node(i);
        const double a = c.a(x, u[i], p[i], norm);
        m.diag[i] = 1.0 + 2.0 * r * a - dt * c.b;
        if (i == 0) {
            m.upper[i] = -2.0 * r * a;
        } else if (i + 1 == n) {
            m.lower[i] = -2.0 * r * a;
        } else {
            m.lower[i] = -r * a;
            m.upper[i] = -r * a;
        }
        rhs[i] = u[i] + dt * c.f(x, u[i], p[i], norm);
    }
    StateField out(g, solve(m, rhs), u.time() ? std::optional<double>(*u.time() + dt) : std::nullopt);
    return out;
}

namespace {

double ls_slope(std::span<const double> t, std::span<const double> y) {
    const std::size_t n = t.size();
    const double tm = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(n);
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (t[i] - tm) * (y[i] - ym);
        sxx += (t[i] - tm) * (t[i] - tm);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

// Slope of log ||u|| over samples (end - window, end].
double trailing_log_slope(const std::vector<double>& times, const std::vector<double>& norms, std::size_t end,
                          std::size_t window) {
    const std::size_t begin = end - window;
    std::vector<double> t(times.begin() + static_cast<std::ptrdiff_t>(begin),
                          times.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<double> y(window);
    for (std::size_t i = 0; i < window; ++i) y[i] = std::log(std::max(norms[begin + i], 1e-300));
    return ls_slope(t, y);
}

class ModeTracker {
public:
    ModeTracker(const SpatialGrid& g, int count) {
        for (int j = 0; j < count; ++j) {
            StateField phi = mode_field(g, j);
            for (std::size_t i = 0; i < g.size(); ++i) phi[i] *= g.weight(i);
            weighted_.push_back(std::move(phi));
        }
    }
    std::vector<double> operator()(const StateField& u) const {
        std::vector<double> c(weighted_.size());
        for (std::size_t j = 0; j < weighted_.size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) s += weighted_[j][i] * u[i];
            c[j] = s;
        }
        return c;
    }

private:
    std::vector<StateField> weighted_;
};

}  // namespace

TrajectoryRecord integrate(const StateField& u0, const StepController& ctrl, const CoefficientSpec& c,
                           const std::optional<StateField>& reference) {
    ctrl.validate();
    if (!u0.all_finite()) throw PreconditionError("integrate: non-finite initial data");
    if (reference && !(reference->grid() == u0.grid())) throw PreconditionError("integrate: reference grid mismatch");

    const SpatialGrid& g = u0.grid();
    const ModeTracker modes(g, ctrl.track_modes);
    const bool fixed = ctrl.dt_min == ctrl.dt_max;
    // Keep 1 - dt*b away from zero.
    const double dt_cap = c.b > 0.0 ? 0.5 / c.b : std::numeric_limits<double>::infinity();

    TrajectoryRecord tr(g);
    tr.reference = reference;

    StateField u = u0;
    double t = 0.0;
    u.set_time(t);

    auto record = [&](const StateField& state, double time, bool keep_snapshot) {
        tr.times.push_back(time);
        tr.norms.push_back(l2_norm(state));
        tr.mode_history.push_back(modes(state));
        if (reference) {
            const StateField v = state - *reference;
            tr.zero_history.push_back(zero_number(v));
            tr.boundary_history.push_back(v[0]);
        }
        if (keep_snapshot) {
            StateField s = state;
            s.set_time(time);
            tr.snapshots.push_back(std::move(s));
        }
    };
    record(u, t, true);

    double dt = std::min(ctrl.dt_init, dt_cap);
    int quiet_steps = 0;
    long accepted = 0;
    std::optional<std::size_t> first_crossing;
    const double eps_t = 1e-12 * std::max(1.0, ctrl.t_max);

    while (t < ctrl.t_max - eps_t) {
        const double h = std::min({dt, ctrl.t_max - t, dt_cap});
        StateField next(g);
        double err = 0.0;
        if (fixed && ctrl.extrapolate) {
            next = 2.0 * step(step(u, 0.5 * h, c), 0.5 * h, c) - step(u, h, c);
        } else if (fixed) {
            next = step(u, h, c);
        } else {
            const StateField full = step(u, h, c);
            const StateField half = step(step(u, 0.5 * h, c), 0.5 * h, c);
            double diff = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) diff = std::max(diff, std::abs(half[i] - full[i]));
            err = diff / (ctrl.atol + ctrl.rtol * std::max(sup_norm(half), sup_norm(u)));
            if (err > 1.0) {
                if (h <= ctrl.dt_min * (1.0 + 1e-12)) {
                    std::ostringstream msg;
                    msg << "integrate: step size underflow at t=" << t << " (dt=" << h << ", error ratio " << err
                        << ")";
                    throw FidelityError(msg.str());
                }
                dt = std::max(ctrl.dt_min, h * std::max(0.2, 0.9 / std::sqrt(err)));
                continue;
            }
            next = ctrl.extrapolate ? 2.0 * half - full : half;
        }
        if (!next.all_finite()) throw FidelityError("integrate: non-finite state at t=" + std::to_string(t + h));

        double velocity = 0.0;
        {
            StateField d = next - u;
            velocity = l2_norm(d) / h;
        }
        t += h;
        u = std::move(next);
        u.set_time(t);
        ++accepted;
        record(u, t, accepted % ctrl.snapshot_every == 0);

        if (!fixed) {
            const double grow = err > 0.0 ? 0.9 / std::sqrt(err) : 2.0;
            dt = std::clamp(h * std::min(2.0, grow), ctrl.dt_min, ctrl.dt_max);
        }

        quiet_steps = velocity < ctrl.convergence_tol ? quiet_steps + 1 : 0;
        if (quiet_steps >= ctrl.convergence_window) {
            tr.outcome = Outcome::Converged;
            break;
        }

        const std::size_t k = tr.norms.size();
        if (!first_crossing && tr.norms.back() > ctrl.growup_norm_threshold) first_crossing = k - 1;
        if (first_crossing && tr.norms.back() > ctrl.growup_norm_threshold &&
            k >= static_cast<std::size_t>(ctrl.growup_window) &&
            trailing_log_slope(tr.times, tr.norms, k, static_cast<std::size_t>(ctrl.growup_window)) > 0.0) {
            tr.outcome = Outcome::GrowUp;
            tr.growup_time = tr.times[*first_crossing];
            break;
        }
        if (tr.norms.back() <= ctrl.growup_norm_threshold) first_crossing.reset();
    }

    if (tr.snapshots.empty() || tr.snapshots.back().time() != t) {
        StateField s = u;
        s.set_time(t);
        tr.snapshots.push_back(std::move(s));
    }
    tr.final_state = u;
    return tr;
}

GrowupVerdict detect_growup(const TrajectoryRecord& tr, const StepController& ctrl) {
    if (tr.samples() == 0) throw PreconditionError("detect_growup: empty trajectory");
    if (!std::isfinite(ctrl.growup_norm_threshold)) return {};
    const auto window = static_cast<std::size_t>(ctrl.growup_window);
    std::optional<std::size_t> crossing;
    for (std::size_t i = 0; i < tr.samples(); ++i) {
        if (tr.norms[i] <= ctrl.growup_norm_threshold) {
            crossing.reset();
            continue;
        }
        if (!crossing) crossing = i;
        if (i + 1 >= window && trailing_log_slope(tr.times, tr.norms, i + 1, window) > 0.0)
            return {true, tr.times[*crossing]};
    }
    return {};
}

std::vector<ModeRate> mode_growth_rates(const TrajectoryRecord& tr, std::span<const int> j_list,
                                        double window_fraction, double noise_floor) {
    if (tr.samples() == 0) throw PreconditionError("mode_growth_rates: empty trajectory");
    std::vector<ModeRate> out;
    for (int j : j_list) {
        ModeRate r{j, std::nullopt};
        if (j < 0 || tr.mode_history.front().size() <= static_cast<std::size_t>(j)) {
            out.push_back(r);
            continue;
        }
        const auto visible = [&](std::size_t i) {
            const double v = std::abs(tr.mode_history[i][static_cast<std::size_t>(j)]);
            return v > noise_floor * tr.norms[i] && v > 1e-280;
        };
        // Last contiguous run of visible samples.
        std::size_t end = tr.samples();
        while (end > 0 && !visible(end - 1)) --end;
        std::size_t begin = end;
        while (begin > 0 && visible(begin - 1)) --begin;
        if (end - begin >= 5) {
            const double t_end = tr.times[end - 1];
            const double t_start = t_end - window_fraction * (t_end - tr.times[begin]);
            std::vector<double> t, y;
            for (std::size_t i = begin; i < end; ++i) {
                if (tr.times[i] < t_start) continue;
                t.push_back(tr.times[i]);
                y.push_back(std::log(std::abs(tr.mode_history[i][static_cast<std::size_t>(j)])));
            }
            if (t.size() >= 5) r.rate = ls_slope(t, y);
        }
        out.push_back(r);
    }
    return out;
}

RateBand rate_band(int j, double a_inf, double delta, double b) noexcept {
    const double lambda = mode_eigenvalue(j);
    return {(a_inf + delta) * lambda + b, (a_inf - delta) * lambda + b};
}

double measured_delta(const TrajectoryRecord& tr, const CoefficientSpec& c, double t_from) {
    double delta = 0.0;
    for (const auto& s : tr.snapshots) {
        if (s.time().value_or(0.0) < t_from) continue;
        const double norm = l2_norm(s);
        const StateField p = derivative(s);
        for (std::size_t i = 0; i < s.size(); ++i)
            delta = std::max(delta, std::abs(c.a(s.grid().node(i), s[i], p[i], norm) - c.a_inf));
    }
    return delta;
}

namespace {

constexpr double kDifferenceFloor = 1e-8;

bool has_near_multiple_zero(const StateField& v) {
    const double vmax = sup_norm(v);
    if (vmax == 0.0) return false;
    const double dmax = sup_norm(derivative(v));
    for (std::size_t i = 0; i < v.size(); ++i)
        if (classify_zero(v, i, 1e-2 * vmax, 5e-2 * std::max(dmax, 1e-300)) == ZeroKind::Multiple) return true;
    return false;
}

}  // namespace

DropMonitor difference_zero_monitor(const TrajectoryRecord& tr1, const TrajectoryRecord& tr2) {
    if (!(tr1.grid == tr2.grid)) throw PreconditionError("difference_zero_monitor: grid mismatch");
    DropMonitor mon;
    std::optional<StateField> previous;
    std::size_t k2 = 0;
    for (const auto& s1 : tr1.snapshots) {
        const double t = s1.time().value_or(0.0);
        const double slack = 1e-9 * std::max(1.0, std::abs(t));
        while (k2 + 1 < tr2.snapshots.size() && tr2.snapshots[k2 + 1].time().value_or(0.0) <= t + slack) ++k2;
        if (tr2.snapshots.empty() || tr2.snapshots[k2].time().value_or(0.0) > t + slack) continue;
        // A converged partner is held at its final state; otherwise stop where it ends.
        if (tr2.snapshots.back().time().value_or(0.0) + slack < t && tr2.outcome != Outcome::Converged) break;
        StateField v = s1 - tr2.snapshots[k2];
        // Differences at the resolution floor count as zero and end the record.
        const double floor = kDifferenceFloor * (1.0 + std::max(sup_norm(s1), sup_norm(tr2.snapshots[k2])));
        if (sup_norm(v) <= floor) {
            if (!mon.samples.empty() && mon.samples.back().z > -1)
                mon.drops.push_back({t, mon.samples.back().z, -1, false});
            mon.samples.push_back({t, -1});
            break;
        }
        const int z = zero_number(v);
        if (!mon.samples.empty()) {
            const int prev = mon.samples.back().z;
            if (z > prev) {
                std::ostringstream msg;
                msg << "zero number of the difference increased from " << prev << " to " << z << " at t=" << t
                    << "; refine the grid or the time step";
                throw FidelityError(msg.str());
            }
            if (z < prev) mon.drops.push_back({t, prev, z, previous && has_near_multiple_zero(*previous)});
        }
        mon.samples.push_back({t, z});
        previous = std::move(v);
    }
    return mon;
}

}  // namespace sturm
