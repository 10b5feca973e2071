// Method-of-lines time integration, grow-up/convergence events and
// zero-number monitoring of differences of solutions.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sturm/coefficients.hpp"
#include "sturm/field.hpp"

namespace sturm {

struct StepController {
    double dt_init = 1e-3;
    double dt_min = 1e-8;
    double dt_max = 5e-2;
    double rtol = 1e-4;
    double atol = 1e-10;
    double growup_norm_threshold = 1e6;  // +inf disables grow-up detection
    double convergence_tol = 1e-9;
    double t_max = 100.0;

    int growup_window = 20;       // trailing samples for the log-slope test
    int convergence_window = 20;  // consecutive quiet steps required
    int track_modes = 8;          // <u, phi_j> recorded for j = 0..track_modes-1
    int snapshot_every = 10;      // keep every k-th accepted state (first and last always kept)
    // Use the Richardson combination 2*(two half steps) - (full step) as the
    // accepted state, in fixed and adaptive mode alike. Raises time accuracy to
    // second order but gives up the variation-diminishing property of the
    // plain implicit step.
    bool extrapolate = false;

    /// Throws PreconditionError unless 0 < dt_min <= dt_init <= dt_max and tolerances are positive.
    void validate() const;

    /// Constant step dt (no step doubling).
    static StepController fixed(double dt, double t_max);
};

enum class Outcome { Converged, GrowUp, TimeLimit };

const char* to_string(Outcome o) noexcept;

struct TrajectoryRecord {
    SpatialGrid grid;
    std::vector<double> times;
    std::vector<double> norms;                      // L2 norm per sample
    std::vector<std::vector<double>> mode_history;  // <u, phi_j> per sample
    std::vector<StateField> snapshots;              // thinned; time-stamped
    std::optional<StateField> reference;
    std::vector<int> zero_history;        // z(u(t) - reference) per sample, when a reference is attached
    std::vector<double> boundary_history; // u(t,0) - reference(0) per sample, when a reference is attached
    Outcome outcome = Outcome::TimeLimit;
    double growup_time = 0.0;             // first threshold crossing, when outcome == GrowUp
    StateField final_state;

    explicit TrajectoryRecord(const SpatialGrid& g) : grid(g), final_state(g) {}
    std::size_t samples() const noexcept { return times.size(); }
};

/// One IMEX step: a frozen at the step start, a u_xx + b u implicit, f explicit.
StateField step(const StateField& u, double dt, const CoefficientSpec& c);

/// Integrates until t_max, grow-up or convergence. Step size is adapted by step
/// doubling unless dt_min == dt_max. Throws FidelityError on dt underflow.
TrajectoryRecord integrate(const StateField& u0, const StepController& ctrl, const CoefficientSpec& c,
                           const std::optional<StateField>& reference = std::nullopt);

struct GrowupVerdict {
    bool growup = false;
    double t_cross = 0.0;
};

/// GrowUp iff ||u|| crosses the threshold with positive trailing log-slope.
GrowupVerdict detect_growup(const TrajectoryRecord& tr, const StepController& ctrl);

struct ModeRate {
    int j;
    std::optional<double> rate;  // absent when the mode stays below the noise floor
};

/// Least-squares slope of log|u_j(t)| over the trailing window_fraction of the
/// last interval where |u_j| > noise_floor * ||u||.
std::vector<ModeRate> mode_growth_rates(const TrajectoryRecord& tr, std::span<const int> j_list,
                                        double window_fraction = 0.25, double noise_floor = 1e-11);

/// Rate band [(a_inf + delta) lambda_j + b, (a_inf - delta) lambda_j + b].
struct RateBand {
    double lower, upper;
};
RateBand rate_band(int j, double a_inf, double delta, double b) noexcept;

/// sup |a - a_inf| over the snapshots with time >= t_from.
double measured_delta(const TrajectoryRecord& tr, const CoefficientSpec& c, double t_from);

struct DropSample {
    double t;
    int z;
};

struct DropEvent {
    double t;
    int from, to;
    bool multiple_zero_seen;  // a near-multiple zero was present just before the drop
};

struct DropMonitor {
    std::vector<DropSample> samples;
    std::vector<DropEvent> drops;
};

/// z(u1 - u2) at every snapshot time of tr1 (tr2 resampled at its nearest
/// earlier snapshot, a converged tr2 held at its final state). A difference
/// below 1e-8 (1 + ||u||_inf) is recorded as -1 and ends the sequence.
/// Throws FidelityError if the count ever increases.
DropMonitor difference_zero_monitor(const TrajectoryRecord& tr1, const TrajectoryRecord& tr2);

}  // namespace sturm
