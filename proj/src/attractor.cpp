#include "sturm/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "sturm/errors.hpp"
#include "sturm/format.hpp"

namespace sturm {

const char* to_string(EdgeKind k) noexcept {
    switch (k) {
        case EdgeKind::Hb: return "Hb";
        case EdgeKind::Hup: return "Hup";
        case EdgeKind::Hinf: return "Hinf";
    }
    return "?";
}

const char* to_string(EdgeStatus s) noexcept {
    switch (s) {
        case EdgeStatus::Predicted: return "Predicted";
        case EdgeStatus::VerifiedNumerically: return "VerifiedNumerically";
        case EdgeStatus::Refuted: return "Refuted";
        case EdgeStatus::Undetermined: return "Undetermined";
    }
    return "?";
}

const EquilibriumRecord& ConnectionGraph::record(int id) const {
    for (const auto& e : bounded)
        if (e.id == id) return e;
    throw PreconditionError("connection graph: unknown bounded node e" + std::to_string(id));
}

std::string ConnectionGraph::label(const NodeRef& n) const {
    if (n.at_infinity) return n.inf.label();
    return "e" + std::to_string(n.id) + "(i=" + std::to_string(record(n.id).morse_index) + ")";
}

std::vector<NodeRef> ConnectionGraph::nodes() const {
    std::vector<NodeRef> out;
    for (const auto& e : bounded) out.push_back(NodeRef::bounded(e.id));
    for (const auto& e : infinity) out.push_back(NodeRef::infinity(e));
    return out;
}

void ConnectionGraph::validate() const {
    for (const auto& e : edges) {
        if (e.source == e.target) throw PreconditionError("connection graph: self-edge at " + label(e.source));
        const bool ok = (e.kind == EdgeKind::Hb && !e.source.at_infinity && !e.target.at_infinity) ||
                        (e.kind == EdgeKind::Hup && !e.source.at_infinity && e.target.at_infinity) ||
                        (e.kind == EdgeKind::Hinf && e.source.at_infinity && e.target.at_infinity);
        if (!ok)
            throw PreconditionError(std::string("connection graph: ") + to_string(e.kind) + " edge " + label(e.source) +
                                    " -> " + label(e.target) + " has endpoints of the wrong kind");
    }
}

std::optional<std::vector<NodeRef>> ConnectionGraph::topological_order() const {
    const auto all = nodes();
    auto index_of = [&](const NodeRef& n) {
        return static_cast<std::size_t>(std::find(all.begin(), all.end(), n) - all.begin());
    };
    std::vector<int> indegree(all.size(), 0);
    std::vector<std::vector<std::size_t>> out(all.size());
    for (const auto& e : edges) {
        const auto s = index_of(e.source), t = index_of(e.target);
        if (s == all.size() || t == all.size()) throw PreconditionError("connection graph: edge endpoint is not a node");
        out[s].push_back(t);
        ++indegree[t];
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < all.size(); ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::vector<NodeRef> order;
    while (!ready.empty()) {
        const auto i = ready.front();
        ready.erase(ready.begin());
        order.push_back(all[i]);
        for (auto t : out[i])
            if (--indegree[t] == 0) ready.push_back(t);
    }
    if (order.size() != all.size()) return std::nullopt;
    return order;
}

ConnectionGraph predicted_graph(std::span<const EquilibriumRecord> bounded,
                                std::span<const InfinityEquilibrium> infinity, double a_inf) {
    for (const auto& e : bounded) {
        if (e.hyperbolic) continue;
        std::size_t k = 0;
        for (std::size_t i = 1; i < e.eigenvalues.size(); ++i)
            if (std::abs(e.eigenvalues[i]) < std::abs(e.eigenvalues[k])) k = i;
        std::ostringstream msg;
        msg << "bounded equilibrium e" << e.id << " is not hyperbolic: eigenvalue " << k << " is "
            << (e.eigenvalues.empty() ? 0.0 : e.eigenvalues[k]) << " (zero within tolerance)";
        throw HypothesisError(msg.str());
    }
    ConnectionGraph g;
    g.bounded.assign(bounded.begin(), bounded.end());
    g.infinity.assign(infinity.begin(), infinity.end());
    g.a_inf = a_inf;

    for (const auto& s : bounded)
        for (const auto& t : bounded)
            if (s.id != t.id && s.morse_index > t.morse_index && adjacent(s, t, bounded))
                g.edges.push_back({NodeRef::bounded(s.id), NodeRef::bounded(t.id), EdgeKind::Hb});
    for (const auto& s : bounded)
        for (const auto& phi : infinity)
            if (adjacent(s, phi, bounded))
                g.edges.push_back({NodeRef::bounded(s.id), NodeRef::infinity(phi), EdgeKind::Hup});
    for (const auto& s : infinity)
        for (const auto& t : infinity)
            if (s.j > t.j) g.edges.push_back({NodeRef::infinity(s), NodeRef::infinity(t), EdgeKind::Hinf});
    g.validate();
    return g;
}

namespace {

int sign_of(double v) { return v >= 0.0 ? 1 : -1; }

VerificationRun run_seed(const ConnectionGraph& g, const EquilibriumRecord& src, const StateField& seed,
                         const NodeRef& target, const std::vector<int>& blocker_ids, const CoefficientSpec& c,
                         const StepController& ctrl, double eps, double capture_tol) {
    VerificationRun run;
    run.eps = eps;
    const auto tr = integrate(seed, ctrl, c);
    run.outcome = tr.outcome;
    if (tr.outcome == Outcome::GrowUp) {
        const auto dir = growup_direction(tr);
        if (dir.determined) {
            run.omega = NodeRef::infinity({dir.j, dir.sign});
            run.distance = 1.0 - dir.projection;
        }
    } else {
        double best = std::numeric_limits<double>::infinity();
        int best_id = -1;
        for (const auto& e : g.bounded) {
            const double d = sup_norm(tr.final_state - e.profile);
            if (d < best) {
                best = d;
                best_id = e.id;
            }
        }
        if (best_id >= 0 && best < capture_tol) {
            run.omega = NodeRef::bounded(best_id);
            run.distance = best;
            run.captured_by_blocker =
                std::find(blocker_ids.begin(), blocker_ids.end(), best_id) != blocker_ids.end();
        }
    }
    (void)src;
    run.reached_target = run.omega && *run.omega == target;
    return run;
}

}  // namespace

VerificationResult verify_edge(const ConnectionGraph& g, const Edge& edge, const CoefficientSpec& c,
                               const StepController& ctrl, double eps, int scales, double capture_tol) {
    VerificationResult res;
    if (edge.source == edge.target) throw PreconditionError("verify_edge: source and target coincide");
    if (edge.source.at_infinity) {
        if (!edge.target.at_infinity) throw PreconditionError("verify_edge: edges leave infinity only to infinity");
        const int j = edge.source.inf.j, k = edge.target.inf.j;
        const std::vector<int> jk{k}, kj{j};
        const double expand = plane_flow_rates(j, g.a_inf, jk).front().second;
        const double contract = plane_flow_rates(k, g.a_inf, kj).front().second;
        std::ostringstream msg;
        msg << "rate of phi_" << k << " at Phi_" << j << " = " << format_double(expand) << ", rate of phi_" << j
            << " at Phi_" << k << " = " << format_double(contract);
        res.diagnostic = msg.str();
        res.status = expand > 0.0 && contract < 0.0 ? EdgeStatus::VerifiedNumerically : EdgeStatus::Refuted;
        return res;
    }

    const EquilibriumRecord& src = g.record(edge.source.id);
    int k = 0, s = 1;
    if (edge.target.at_infinity) {
        k = edge.target.inf.j;
        s = edge.target.inf.sign;
        res.blockers = blockers(src, edge.target.inf, g.bounded);
    } else {
        const EquilibriumRecord& tgt = g.record(edge.target.id);
        k = zero_number(tgt.profile - src.profile);
        s = sign_of(tgt.eta - src.eta);
        res.blockers = blockers(src, tgt, g.bounded);
    }
    if (k < 0 || k >= src.morse_index || static_cast<std::size_t>(k) >= src.eigenfunctions.size()) {
        std::ostringstream msg;
        msg << "no unstable eigendirection with " << k << " zeros at " << g.label(edge.source) << " (Morse index "
            << src.morse_index << ")";
        res.diagnostic = msg.str();
        res.status = EdgeStatus::Undetermined;
        return res;
    }

    const StateField& v = src.eigenfunctions[static_cast<std::size_t>(k)];
    std::vector<std::future<VerificationRun>> pending;
    for (int m = 0; m < scales; ++m) {
        const double amp = eps * std::ldexp(1.0, m);
        StateField seed = src.profile + v * (s * amp);
        pending.push_back(std::async(std::launch::async, run_seed, std::cref(g), std::cref(src), std::move(seed),
                                     edge.target, std::cref(res.blockers), std::cref(c), std::cref(ctrl), amp,
                                     capture_tol));
    }
    for (auto& p : pending) res.runs.push_back(p.get());

    const bool any_reached = std::any_of(res.runs.begin(), res.runs.end(), [](const auto& r) { return r.reached_target; });
    const bool all_captured =
        !res.runs.empty() && std::all_of(res.runs.begin(), res.runs.end(), [](const auto& r) { return r.captured_by_blocker; });
    if (any_reached) {
        res.status = EdgeStatus::VerifiedNumerically;
    } else if (all_captured) {
        res.status = EdgeStatus::Refuted;
        res.diagnostic = "every run was captured by a blocking equilibrium";
    } else {
        res.status = EdgeStatus::Undetermined;
        res.diagnostic = "no run reached the target and not every run was captured by a blocker";
    }
    return res;
}

YMapResult ymap(const TrajectoryRecord& tr, const EquilibriumRecord& reference, int n) {
    if (!tr.reference || tr.zero_history.size() != tr.samples())
        throw PreconditionError("ymap: trajectory carries no reference zero history");
    if (sup_norm(*tr.reference - reference.profile) > 1e-12 * (1.0 + sup_norm(reference.profile)))
        throw PreconditionError("ymap: trajectory reference differs from the given equilibrium");
    if (n < 0) throw PreconditionError("ymap: n must be nonnegative");
    if (tr.zero_history.front() > n) {
        std::ostringstream msg;
        msg << "ymap: z(u(0) - e) = " << tr.zero_history.front() << " exceeds n = " << n;
        throw PreconditionError(msg.str());
    }
    for (std::size_t i = 1; i < tr.samples(); ++i)
        if (tr.zero_history[i] > tr.zero_history[i - 1]) {
            std::ostringstream msg;
            msg << "ymap: zero number of u - e increased at t=" << tr.times[i];
            throw FidelityError(msg.str());
        }

    const double inf = std::numeric_limits<double>::infinity();
    YMapResult r;
    r.n = n;
    std::vector<std::size_t> first(static_cast<std::size_t>(n) + 1, tr.samples());
    for (int k = 0; k <= n; ++k) {
        for (std::size_t i = 0; i < tr.samples(); ++i)
            if (tr.zero_history[i] <= k) {
                first[static_cast<std::size_t>(k)] = i;
                break;
            }
        const auto fi = first[static_cast<std::size_t>(k)];
        r.t.push_back(fi < tr.samples() ? tr.times[fi] : inf);
        r.tau.push_back(fi < tr.samples() ? std::tanh(tr.times[fi]) : 1.0);
    }
    r.t[static_cast<std::size_t>(n)] = 0.0;
    r.tau[static_cast<std::size_t>(n)] = 0.0;

    double bmax = 0.0;
    for (double b : tr.boundary_history) bmax = std::max(bmax, std::abs(b));
    const double btol = 1e-12 * std::max(1.0, bmax);

    for (int k = 0; k <= n; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double tau_prev = k == 0 ? 1.0 : r.tau[uk - 1];
        const double t_prev = k == 0 ? inf : r.t[uk - 1];
        const double width = std::max(tau_prev - r.tau[uk], 0.0);
        // Samples inside [t_k, t_{k-1}); the sign of u(t, 0) - e(0) is constant there.
        std::size_t lo = first[uk], hi = lo;
        while (hi < tr.samples() && tr.times[hi] < t_prev) ++hi;
        int iota = 1;
        if (lo < hi) {
            const double mid = 0.5 * (r.tau[uk] + tau_prev);
            const double t_star = mid < 1.0 ? std::atanh(mid) : inf;
            std::size_t best = lo;
            for (std::size_t i = lo; i < hi; ++i)
                if (std::abs(tr.times[i] - t_star) < std::abs(tr.times[best] - t_star)) best = i;
            std::size_t pick = best;
            for (std::size_t off = 0; off < hi - lo; ++off) {
                if (best + off < hi && std::abs(tr.boundary_history[best + off]) > btol) {
                    pick = best + off;
                    break;
                }
                if (best >= lo + off && std::abs(tr.boundary_history[best - off]) > btol) {
                    pick = best - off;
                    break;
                }
            }
            iota = sign_of(tr.boundary_history[pick]);
        } else if (lo < tr.samples()) {
            iota = sign_of(tr.boundary_history[lo]);
        }
        r.iota.push_back(iota);
        r.y.push_back(iota * std::sqrt(width));
    }
    return r;
}

std::vector<int> reconstruct_zero_history(const YMapResult& y, std::span<const double> times) {
    std::vector<int> out;
    out.reserve(times.size());
    for (double t : times) {
        int z = y.n;
        for (int k = 0; k <= y.n; ++k)
            if (t >= y.t[static_cast<std::size_t>(k)]) {
                z = k;
                break;
            }
        out.push_back(z);
    }
    return out;
}

AttractorReport assemble_attractor(const Scenario& s) {
    AttractorReport rep;
    rep.name = s.name;
    std::vector<EquilibriumRecord> bounded;
    try {
        bounded = find_equilibria(s.eta_min, s.eta_max, s.scan_n, s.coeff, s.grid, s.m_eigs);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("assemble_attractor: equilibria: ") + e.what());
    }
    const auto infinity = infinity_equilibria(s.coeff.a_inf, s.coeff.b);
    rep.graph = predicted_graph(bounded, infinity, s.coeff.a_inf);
    try {
        rep.permutation = sturm_permutation(rep.graph.bounded);
    } catch (const HypothesisError& e) {
        rep.notes.push_back(e.what());
    }
    rep.acyclic = rep.graph.acyclic();
    if (!rep.acyclic) rep.discrepancies.push_back("predicted edge set contains a cycle");
    if (std::any_of(rep.graph.edges.begin(), rep.graph.edges.end(), [](const Edge& e) { return e.kind == EdgeKind::Hinf; }))
        rep.notes.push_back(
            "Hinf: both target signs emitted per index pair; sign-pair selection is not resolved by the index rule");

    if (!s.verify) return rep;

    std::vector<std::future<VerificationResult>> pending;
    for (const auto& e : rep.graph.edges)
        pending.push_back(std::async(std::launch::async, [&, e] {
            return verify_edge(rep.graph, e, s.coeff, s.ctrl, s.eps, s.scales);
        }));
    for (std::size_t i = 0; i < pending.size(); ++i) {
        rep.verification.push_back(pending[i].get());
        rep.graph.edges[i].status = rep.verification.back().status;
    }

    auto predicted_from = [&](const NodeRef& src, const NodeRef& tgt) {
        return std::any_of(rep.graph.edges.begin(), rep.graph.edges.end(),
                           [&](const Edge& e) { return e.source == src && e.target == tgt; });
    };
    for (std::size_t i = 0; i < rep.graph.edges.size(); ++i) {
        const auto& e = rep.graph.edges[i];
        const std::string name = rep.graph.label(e.source) + " -> " + rep.graph.label(e.target);
        if (e.status != EdgeStatus::VerifiedNumerically) {
            std::string d = "predicted but not verified: " + name + " (" + to_string(e.status) + ")";
            if (!rep.verification[i].diagnostic.empty()) d += ": " + rep.verification[i].diagnostic;
            rep.discrepancies.push_back(d);
        }
        for (const auto& run : rep.verification[i].runs) {
            if (!run.omega || *run.omega == e.source || predicted_from(e.source, *run.omega)) continue;
            if (!run.omega->at_infinity || std::any_of(rep.graph.infinity.begin(), rep.graph.infinity.end(),
                                                       [&](const auto& p) { return p == run.omega->inf; })) {
                const std::string d = "observed but unpredicted: " + rep.graph.label(e.source) + " -> " +
                                      rep.graph.label(*run.omega) + " (seed toward " + rep.graph.label(e.target) +
                                      ", eps " + format_double(run.eps) + ")";
                if (std::find(rep.discrepancies.begin(), rep.discrepancies.end(), d) == rep.discrepancies.end())
                    rep.discrepancies.push_back(d);
            } else {
                rep.discrepancies.push_back("grow-up toward " + run.omega->inf.label() +
                                            ", which is not an equilibrium at infinity of this scenario");
            }
        }
    }
    return rep;
}

namespace {

std::string dot_id(const NodeRef& n) {
    if (!n.at_infinity) return "e" + std::to_string(n.id);
    return std::string(n.inf.sign > 0 ? "pPhi" : "mPhi") + std::to_string(n.inf.j);
}

const char* dot_style(EdgeKind k) {
    switch (k) {
        case EdgeKind::Hb: return "solid";
        case EdgeKind::Hup: return "dashed";
        case EdgeKind::Hinf: return "dotted";
    }
    return "solid";
}

const char* dot_color(EdgeStatus s) {
    switch (s) {
        case EdgeStatus::Predicted: return "black";
        case EdgeStatus::VerifiedNumerically: return "darkgreen";
        case EdgeStatus::Refuted: return "red";
        case EdgeStatus::Undetermined: return "orange";
    }
    return "black";
}

}  // namespace

std::string to_dot(const ConnectionGraph& g) {
    std::ostringstream os;
    os << "digraph attractor {\n  rankdir=TB;\n";
    for (const auto& n : g.nodes())
        os << "  " << dot_id(n) << " [label=\"" << g.label(n) << "\", shape=" << (n.at_infinity ? "doublecircle" : "circle")
           << "];\n";
    for (const auto& e : g.edges)
        os << "  " << dot_id(e.source) << " -> " << dot_id(e.target) << " [style=" << dot_style(e.kind)
           << ", color=" << dot_color(e.status) << ", label=\"" << to_string(e.kind) << "\"];\n";
    os << "}\n";
    return os.str();
}

nlohmann::ordered_json to_json(const AttractorReport& r) {
    using nlohmann::ordered_json;
    const auto& g = r.graph;
    ordered_json j;
    j["name"] = r.name;
    j["a_inf"] = g.a_inf;
    ordered_json bounded = ordered_json::array();
    for (const auto& e : g.bounded)
        bounded.push_back({{"id", e.id},
                           {"label", g.label(NodeRef::bounded(e.id))},
                           {"eta", e.eta},
                           {"u_pi", e.right_value},
                           {"morse", e.morse_index},
                           {"hyperbolic", e.hyperbolic},
                           {"residual", e.residual},
                           {"eigenvalues", e.eigenvalues}});
    j["bounded"] = bounded;
    ordered_json inf = ordered_json::array();
    for (const auto& p : g.infinity) inf.push_back({{"j", p.j}, {"sign", p.sign}, {"label", p.label()}});
    j["infinity"] = inf;
    ordered_json edges = ordered_json::array();
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto& e = g.edges[i];
        ordered_json je{{"source", g.label(e.source)},
                        {"target", g.label(e.target)},
                        {"kind", to_string(e.kind)},
                        {"status", to_string(e.status)}};
        if (i < r.verification.size()) {
            const auto& v = r.verification[i];
            je["blockers"] = v.blockers;
            je["diagnostic"] = v.diagnostic;
            ordered_json runs = ordered_json::array();
            for (const auto& run : v.runs)
                runs.push_back({{"eps", run.eps},
                                {"outcome", to_string(run.outcome)},
                                {"omega", run.omega ? g.label(*run.omega) : std::string("unclassified")},
                                {"distance", run.distance},
                                {"reached_target", run.reached_target},
                                {"captured_by_blocker", run.captured_by_blocker}});
            je["runs"] = runs;
        }
        edges.push_back(je);
    }
    j["edges"] = edges;
    j["sturm_permutation"] = r.permutation;
    j["acyclic"] = r.acyclic;
    j["discrepancies"] = r.discrepancies;
    j["notes"] = r.notes;
    return j;
}

}  // namespace sturm
