// Connection graph of the attractor: prediction from adjacency and Morse
// indices, verification by simulation, the y-map diagnostic and reports.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sturm/coefficients.hpp"
#include "sturm/equilibria.hpp"
#include "sturm/infinity.hpp"
#include "sturm/integrator.hpp"

namespace sturm {

struct NodeRef {
    bool at_infinity = false;
    int id = 0;                 // bounded equilibrium id
    InfinityEquilibrium inf{};  // when at_infinity

    static NodeRef bounded(int id) { return {false, id, {}}; }
    static NodeRef infinity(InfinityEquilibrium e) { return {true, 0, e}; }

    friend bool operator==(const NodeRef& a, const NodeRef& b) {
        return a.at_infinity == b.at_infinity && (a.at_infinity ? a.inf == b.inf : a.id == b.id);
    }
};

enum class EdgeKind { Hb, Hup, Hinf };
enum class EdgeStatus { Predicted, VerifiedNumerically, Refuted, Undetermined };

const char* to_string(EdgeKind k) noexcept;
const char* to_string(EdgeStatus s) noexcept;

struct Edge {
    NodeRef source, target;
    EdgeKind kind = EdgeKind::Hb;
    EdgeStatus status = EdgeStatus::Predicted;
};

struct ConnectionGraph {
    std::vector<EquilibriumRecord> bounded;
    std::vector<InfinityEquilibrium> infinity;
    double a_inf = 1.0;
    std::vector<Edge> edges;

    const EquilibriumRecord& record(int id) const;
    std::string label(const NodeRef& n) const;  // "e{id}(i=m)" or "+Phi{j}"
    std::vector<NodeRef> nodes() const;

    /// Throws PreconditionError on self-edges or kind/endpoint mismatches.
    void validate() const;

    /// Kahn ordering of all nodes; nullopt when the edge set has a cycle.
    std::optional<std::vector<NodeRef>> topological_order() const;
    bool acyclic() const { return topological_order().has_value(); }
};

/// Hb: adjacent and Morse drop; Hup: adjacent to +-Phi_k; Hinf: j > k, both
/// target signs from each source sign. Throws HypothesisError when a bounded
/// equilibrium is not hyperbolic.
ConnectionGraph predicted_graph(std::span<const EquilibriumRecord> bounded,
                                std::span<const InfinityEquilibrium> infinity, double a_inf);

struct VerificationRun {
    double eps = 0.0;
    Outcome outcome = Outcome::TimeLimit;
    std::optional<NodeRef> omega;  // nearest bounded equilibrium or grow-up direction, when classified
    bool reached_target = false;
    bool captured_by_blocker = false;
    double distance = 0.0;  // sup distance to omega (bounded) or 1 - projection (infinity)
};

struct VerificationResult {
    EdgeStatus status = EdgeStatus::Undetermined;
    std::vector<VerificationRun> runs;
    std::vector<int> blockers;
    std::string diagnostic;
};

/// Bounded sources are integrated from source + s eps 2^m v_k (m = 0..scales-1),
/// with k = z(target - source), s = sign(target(0) - source(0)) and v_k the
/// k-th eigenfunction. Verified if any run reaches the target, Refuted if every
/// run is captured by a blocking equilibrium, otherwise Undetermined. Hinf
/// edges are checked against the plane-flow rates. The edge need not belong to
/// the graph.
VerificationResult verify_edge(const ConnectionGraph& g, const Edge& edge, const CoefficientSpec& c,
                               const StepController& ctrl, double eps = 1e-6, int scales = 8,
                               double capture_tol = 1e-5);

struct YMapResult {
    int n = 0;
    std::vector<double> t;     // dropping times; +inf when the count never drops to k
    std::vector<double> tau;   // tanh(t_k), 1 for +inf
    std::vector<int> iota;     // sign of u(t*, 0) - e(0)
    std::vector<double> y;     // iota_k sqrt(tau_{k-1} - tau_k), tau_{-1} = 1
};

/// Requires tr to carry the reference e and z(u(0) - e) <= n; throws
/// FidelityError if the recorded zero count ever increases.
YMapResult ymap(const TrajectoryRecord& tr, const EquilibriumRecord& reference, int n);

/// z(t) = min{k : t >= t_k} at each given time.
std::vector<int> reconstruct_zero_history(const YMapResult& y, std::span<const double> times);

struct Scenario {
    std::string name = "scenario";
    CoefficientSpec coeff;
    SpatialGrid grid;
    double eta_min = -10.0;
    double eta_max = 10.0;
    int scan_n = 400;
    int m_eigs = kDefaultEigenCount;
    StepController ctrl;
    double eps = 1e-6;
    int scales = 8;
    bool verify = true;
};

struct AttractorReport {
    std::string name;
    ConnectionGraph graph;
    std::vector<VerificationResult> verification;  // parallel to graph.edges when verified
    std::vector<int> permutation;                  // empty when non-generic
    bool acyclic = true;
    std::vector<std::string> discrepancies;
    std::vector<std::string> notes;
};

/// find_equilibria -> infinity_equilibria -> predicted_graph -> verify_edge.
AttractorReport assemble_attractor(const Scenario& s);

std::string to_dot(const ConnectionGraph& g);
nlohmann::ordered_json to_json(const AttractorReport& r);

}  // namespace sturm
