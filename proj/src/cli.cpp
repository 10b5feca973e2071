#include "sturm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <span>
#include <sstream>

#include <CLI11.hpp>

#include "sturm/attractor.hpp"
#include "sturm/config.hpp"
#include "sturm/errors.hpp"
#include "sturm/format.hpp"

namespace sturm {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Options {
    std::string command;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool plots = false;
};

class Writer {
public:
    explicit Writer(fs::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw ConfigError("config key 'output.dir': cannot create '" + dir_.string() + "': " + ec.message());
    }

    void text(const std::string& name, const std::string& body) const {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw ConfigError("config key 'output.dir': cannot write '" + (dir_ / name).string() + "'");
        os << body;
    }

    void json(const std::string& name, const ordered_json& j) const { text(name, j.dump(2) + "\n"); }

    void field(const std::string& name, const StateField& u) const {
        std::ostringstream os;
        write_field_csv(os, u);
        text(name, os.str());
    }

    // Two whitespace-separated columns for gnuplot.
    void columns(const std::string& name, std::span<const double> a, std::span<const double> b) const {
        std::ostringstream os;
        for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) os << format_double(a[i]) << ' ' << format_double(b[i]) << '\n';
        text(name, os.str());
    }

private:
    fs::path dir_;
};

std::string csv_row(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_double(v[i]);
    }
    return s;
}

ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::vector<EquilibriumRecord> equilibria_of(const ScenarioConfig& cfg, const CoefficientSpec& c) {
    return find_equilibria(cfg.eta_min, cfg.eta_max, cfg.scan_n, c, cfg.grid, cfg.eig_count);
}

int cmd_simulate(const ScenarioConfig& cfg, const Options& opt, const Writer& w, std::ostream& out) {
    const auto seed = cfg.seeds.front();
    const StateField u0 = initial_field(cfg, seed);
    const auto tr = integrate(u0, cfg.ctrl, cfg.coeff, StateField(cfg.grid));

    std::ostringstream traj;
    traj << "t,norm,z";
    for (int j = 0; j < cfg.ctrl.track_modes; ++j) traj << ",u_" << j;
    traj << '\n';
    for (std::size_t i = 0; i < tr.samples(); ++i) {
        std::vector<double> row{tr.times[i], tr.norms[i], static_cast<double>(tr.zero_history[i])};
        row.insert(row.end(), tr.mode_history[i].begin(), tr.mode_history[i].end());
        traj << csv_row(row) << '\n';
    }
    w.text("trajectory.csv", traj.str());

    std::ostringstream proj;
    proj << "t,z";
    for (int j = 0; j < cfg.ctrl.track_modes; ++j) proj << ",chi_" << j;
    proj << '\n';
    for (const auto& row : projected_rows(tr)) proj << csv_row(row) << '\n';
    w.text("projected.csv", proj.str());

    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%04zu.csv", k);
        w.field(name, tr.snapshots[k]);
    }

    ordered_json s;
    s["name"] = cfg.name;
    s["seed"] = seed;
    s["outcome"] = to_string(tr.outcome);
    s["final_time"] = tr.times.back();
    s["final_norm"] = tr.norms.back();
    s["samples"] = tr.samples();
    if (tr.outcome == Outcome::GrowUp) {
        s["growup_time"] = tr.growup_time;
        const auto d = growup_direction(tr);
        s["growup_direction"] = d.determined ? ordered_json{{"j", d.j}, {"sign", d.sign}, {"projection", d.projection}}
                                             : ordered_json(nullptr);
    }
    if (!cfg.coeff.norm_dependent && cfg.coeff.b > 0.0) {
        const auto p = predicted_growup_mode(u0, cfg.coeff.a_inf, cfg.coeff.b);
        s["predicted_growup_mode"] = p ? ordered_json{{"j", p->j}, {"sign", p->sign}} : ordered_json(nullptr);
    }
    w.json("summary.json", s);
    if (opt.plots) {
        w.columns("norm.dat", tr.times, tr.norms);
        std::vector<double> z(tr.zero_history.begin(), tr.zero_history.end());
        w.columns("zero_number.dat", tr.times, z);
    }
    out << "simulate: " << to_string(tr.outcome) << " at t=" << format_double(tr.times.back()) << " after "
        << tr.samples() << " samples\n";
    return 0;
}

int cmd_equilibria(const ScenarioConfig& cfg, const Options& opt, const Writer& w, std::ostream& out) {
    const auto eqs = equilibria_of(cfg, cfg.coeff);
    std::ostringstream table;
    table << "id,eta,u_pi,morse,hyperbolic";
    for (int k = 0; k < cfg.eig_count; ++k) table << ",lambda_" << k;
    table << '\n';
    for (const auto& e : eqs) {
        table << e.id << ',' << format_double(e.eta) << ',' << format_double(e.right_value) << ',' << e.morse_index
              << ',' << (e.hyperbolic ? "true" : "false");
        for (int k = 0; k < cfg.eig_count; ++k) {
            table << ',';
            if (static_cast<std::size_t>(k) < e.eigenvalues.size()) table << format_double(e.eigenvalues[static_cast<std::size_t>(k)]);
        }
        table << '\n';
        w.field("profile_" + std::to_string(e.id) + ".csv", e.profile);
        if (opt.plots) {
            const auto x = cfg.grid.nodes();
            w.columns("profile_" + std::to_string(e.id) + ".dat", x, e.profile.values());
        }
    }
    w.text("equilibria.csv", table.str());
    try {
        w.json("permutation.json", ordered_json(sturm_permutation(eqs)));
    } catch (const HypothesisError& e) {
        w.json("permutation.json", ordered_json(nullptr));
        out << "note: " << e.what() << '\n';
    }
    out << "equilibria: " << eqs.size() << " found\n";
    for (const auto& e : eqs)
        out << "  e" << e.id << " eta=" << format_double(e.eta) << " morse=" << e.morse_index
            << (e.hyperbolic ? "" : " (not hyperbolic)") << '\n';
    return 0;
}

int cmd_infinity(const ScenarioConfig& cfg, const Options& opt, const Writer& w, std::ostream& out) {
    const auto inf = infinity_equilibria(cfg.coeff.a_inf, cfg.coeff.b);
    ordered_json list = ordered_json::array();
    for (const auto& p : inf) list.push_back({{"j", p.j}, {"sign", p.sign}});
    w.json("infinity.json", list);

    const StateField chi0 = initial_field(cfg, cfg.seeds.front());
    const int initial_dominant = dominant_index(chi0);
    const auto rec = sphere_flow(chi0, cfg.sphere_dt, cfg.sphere_t_max, cfg.coeff.a_inf);

    std::ostringstream energy, modes;
    energy << "t,E_inf\n";
    modes << "t,z";
    const std::size_t m = rec.modes.empty() ? 0 : rec.modes.front().size();
    for (std::size_t j = 0; j < m; ++j) modes << ",chi_" << j;
    modes << '\n';
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        energy << format_double(rec.times[i]) << ',' << format_double(rec.energies[i]) << '\n';
        std::vector<double> row{rec.times[i], 0.0};
        row.insert(row.end(), rec.modes[i].begin(), rec.modes[i].end());
        modes << csv_row(row) << '\n';
    }
    w.text("energy.csv", energy.str());
    w.text("sphere_modes.csv", modes.str());
    if (opt.plots) w.columns("energy.dat", rec.times, rec.energies);

    ordered_json s;
    s["a_inf"] = cfg.coeff.a_inf;
    s["b"] = cfg.coeff.b;
    s["equilibria_at_infinity"] = inf.size();
    s["initial_dominant_index"] = initial_dominant;
    s["converged"] = rec.converged;
    s["final_speed"] = rec.final_speed;
    s["limit"] = {{"j", rec.limit_index}, {"sign", rec.limit_sign}, {"distance", rec.limit_distance}};
    w.json("sphere_flow.json", s);

    out << "infinity: " << inf.size() << " equilibria at infinity;";
    for (const auto& p : inf) out << ' ' << p.label();
    out << "\nsphere flow: limit " << (rec.limit_sign > 0 ? '+' : '-') << "phi_" << rec.limit_index << " at distance "
        << format_double(rec.limit_distance) << '\n';
    return 0;
}

Scenario scenario_of(const ScenarioConfig& cfg, const CoefficientSpec& c) {
    Scenario s;
    s.name = cfg.name;
    s.coeff = c;
    s.grid = cfg.grid;
    s.eta_min = cfg.eta_min;
    s.eta_max = cfg.eta_max;
    s.scan_n = cfg.scan_n;
    s.m_eigs = cfg.eig_count;
    s.ctrl = cfg.ctrl;
    s.eps = cfg.verify_eps;
    s.scales = cfg.verify_scales;
    s.verify = cfg.verify;
    return s;
}

int cmd_graph(const ScenarioConfig& cfg, const Options&, const Writer& w, std::ostream& out) {
    const auto rep = assemble_attractor(scenario_of(cfg, cfg.coeff));
    w.text("graph.dot", to_dot(rep.graph));
    w.json("report.json", to_json(rep));
    out << "graph: " << rep.graph.nodes().size() << " nodes, " << rep.graph.edges.size() << " edges, "
        << (rep.acyclic ? "acyclic" : "cyclic") << '\n';
    for (std::size_t i = 0; i < rep.graph.edges.size(); ++i) {
        const auto& e = rep.graph.edges[i];
        out << "  " << rep.graph.label(e.source) << " -> " << rep.graph.label(e.target) << " [" << to_string(e.kind)
            << "] " << to_string(e.status) << '\n';
    }
    for (const auto& d : rep.discrepancies) out << "discrepancy: " << d << '\n';
    for (const auto& n : rep.notes) out << "note: " << n << '\n';
    return 0;
}

int cmd_ymap(const ScenarioConfig& cfg, const Options&, const Writer& w, std::ostream& out) {
    const auto eqs = equilibria_of(cfg, cfg.coeff);
    const int ref = cfg.ymap_reference.value_or(0);
    if (eqs.empty()) throw ConfigError("config key 'ymap.reference': no bounded equilibria were found");
    if (ref >= static_cast<int>(eqs.size()))
        throw ConfigError("config key 'ymap.reference': index " + std::to_string(ref) + " but only " +
                          std::to_string(eqs.size()) + " equilibria exist");
    const auto& e = eqs[static_cast<std::size_t>(ref)];
    const auto seed = cfg.seeds.front();
    const auto tr = integrate(initial_field(cfg, seed), cfg.ctrl, cfg.coeff, e.profile);
    const int n = cfg.ymap_n.value_or(std::max(tr.zero_history.front(), 0));
    const auto y = ymap(tr, e, n);

    ordered_json j;
    j["reference"] = e.id;
    j["seed"] = seed;
    j["n"] = y.n;
    ordered_json t = ordered_json::array();
    for (double v : y.t) t.push_back(finite_or_null(v));
    j["t"] = t;
    j["tau"] = y.tau;
    j["iota"] = y.iota;
    j["y"] = y.y;
    double s = 0.0;
    for (double v : y.y) s += v * v;
    j["norm_squared"] = s;
    w.json("ymap.json", j);
    out << "ymap: n=" << n << " |y|^2=" << format_double(s) << '\n';
    return 0;
}

struct SweepRow {
    double b = 0.0;
    std::string status = "ok";
    int bounded = 0, infinity = 0, hb = 0, hup = 0, hinf = 0;
    bool acyclic = true;
};

SweepRow sweep_one(const ScenarioConfig& cfg, double b) {
    SweepRow r;
    r.b = b;
    try {
        const auto c = build_coefficients(cfg.coeff_source, b);
        const auto eqs = equilibria_of(cfg, c);
        r.bounded = static_cast<int>(eqs.size());
        const auto inf = b > 0.0 ? infinity_equilibria(c.a_inf, b) : std::vector<InfinityEquilibrium>{};
        r.infinity = static_cast<int>(inf.size());
        const auto g = predicted_graph(eqs, inf, c.a_inf);
        for (const auto& e : g.edges) {
            r.hb += e.kind == EdgeKind::Hb;
            r.hup += e.kind == EdgeKind::Hup;
            r.hinf += e.kind == EdgeKind::Hinf;
        }
        r.acyclic = g.acyclic();
    } catch (const std::exception& e) {
        r.status = e.what();
    }
    return r;
}

int cmd_sweep(const ScenarioConfig& cfg, const Options& opt, const Writer& w, std::ostream& out) {
    if (cfg.sweep_b.empty()) throw ConfigError("config key 'sweep.b': required by the sweep subcommand");
    std::vector<SweepRow> rows(cfg.sweep_b.size());
    const std::size_t jobs = static_cast<std::size_t>(std::max(opt.jobs, 1));
    for (std::size_t start = 0; start < rows.size(); start += jobs) {
        std::vector<std::future<SweepRow>> batch;
        for (std::size_t i = start; i < std::min(rows.size(), start + jobs); ++i)
            batch.push_back(std::async(std::launch::async, sweep_one, std::cref(cfg), cfg.sweep_b[i]));
        for (std::size_t k = 0; k < batch.size(); ++k) rows[start + k] = batch[k].get();
    }
    std::ostringstream csv;
    csv << "b,bounded,infinity,hb,hup,hinf,acyclic,status\n";
    ordered_json j = ordered_json::array();
    for (const auto& r : rows) {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        csv << format_double(r.b) << ',' << r.bounded << ',' << r.infinity << ',' << r.hb << ',' << r.hup << ','
            << r.hinf << ',' << (r.acyclic ? "true" : "false") << ',' << status << '\n';
        j.push_back({{"b", r.b},
                     {"bounded", r.bounded},
                     {"infinity", r.infinity},
                     {"hb", r.hb},
                     {"hup", r.hup},
                     {"hinf", r.hinf},
                     {"acyclic", r.acyclic},
                     {"status", r.status}});
        out << "b=" << format_double(r.b) << ": " << r.bounded << " bounded, " << r.infinity << " at infinity, "
            << r.hb + r.hup + r.hinf << " edges" << (r.status == "ok" ? "" : " (" + r.status + ")") << '\n';
    }
    w.text("sweep.csv", csv.str());
    w.json("sweep.json", j);
    if (opt.plots) {
        std::vector<double> b, n;
        for (const auto& r : rows) {
            b.push_back(r.b);
            n.push_back(r.bounded);
        }
        w.columns("bounded_count.dat", b, n);
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options opt;
    CLI::App app{"Numerical laboratory for slowly non-dissipative quasilinear parabolic equations on [0, pi]"};
    app.add_option("command", opt.command, "simulate | equilibria | infinity | graph | ymap | sweep")
        ->required()
        ->check(CLI::IsMember({"simulate", "equilibria", "infinity", "graph", "ymap", "sweep"}));
    app.add_option("--config", opt.config, "scenario JSON file")->required();
    app.add_option("--out", opt.out, "output directory (overrides output.dir)");
    app.add_option("--seed", opt.seed, "seed for random initial data (overrides seeds)");
    app.add_option("--jobs", opt.jobs, "concurrent scenario runs for sweep")->check(CLI::Range(1, 1024));
    app.add_flag("--emit-plots-data", opt.plots, "also write two-column .dat files");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        ScenarioConfig cfg = load_config(opt.config);
        if (opt.seed) cfg.seeds = {*opt.seed};
        if (!opt.out.empty()) cfg.output_dir = opt.out;
        const Writer w(cfg.output_dir);
        if (opt.command == "simulate") return cmd_simulate(cfg, opt, w, out);
        if (opt.command == "equilibria") return cmd_equilibria(cfg, opt, w, out);
        if (opt.command == "infinity") return cmd_infinity(cfg, opt, w, out);
        if (opt.command == "graph") return cmd_graph(cfg, opt, w, out);
        if (opt.command == "ymap") return cmd_ymap(cfg, opt, w, out);
        return cmd_sweep(cfg, opt, w, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const FidelityError& e) {
        err << "numerical fidelity error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << opt.command << " failed: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace sturm
