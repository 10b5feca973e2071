#include "sturm/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "sturm/errors.hpp"
#include "sturm/expression.hpp"

namespace sturm {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
}

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

void check_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad(prefix.empty() ? "<root>" : prefix, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
        if (!ok.count(k)) bad(join(prefix, k), "unknown key");
}

double get_real(const json& obj, const std::string& prefix, const char* key, double fallback, double lo, double hi,
                bool lo_open = false) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    const std::string name = join(prefix, key);
    if (!v.is_number()) bad(name, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d) || d > hi || d < lo || (lo_open && d == lo)) {
        std::ostringstream msg;
        msg << "value " << d << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
        bad(name, msg.str());
    }
    return d;
}

int get_int(const json& obj, const std::string& prefix, const char* key, int fallback, int lo, int hi) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    const std::string name = join(prefix, key);
    if (!v.is_number_integer()) bad(name, "expected an integer");
    const auto i = v.get<long long>();
    if (i < lo || i > hi) bad(name, "value " + std::to_string(i) + " outside [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
    return static_cast<int>(i);
}

bool get_bool(const json& obj, const std::string& prefix, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) bad(join(prefix, key), "expected true or false");
    return obj.at(key).get<bool>();
}

std::string get_string(const json& obj, const std::string& prefix, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) bad(join(prefix, key), "expected a string");
    return obj.at(key).get<std::string>();
}

CoefficientFn compile(const std::string& key, const std::string& text, bool& uses_norm) {
    try {
        Expression e(text);
        uses_norm = uses_norm || e.uses_norm();
        return [e](double x, double u, double p, double norm) { return e(x, u, p, norm); };
    } catch (const PreconditionError& err) {
        bad(key, err.what());
    }
}

constexpr double kHuge = 1e12;

}  // namespace

CoefficientSpec build_coefficients(const json& coeff, std::optional<double> b_override) {
    check_keys(coeff, "coeff", {"preset", "b", "a_inf", "c", "a", "f", "epsilon", "f_bound", "cutoff_R"});
    const double b = b_override ? *b_override : get_real(coeff, "coeff", "b", 0.5, 0.0, kHuge);
    const double a_inf = get_real(coeff, "coeff", "a_inf", 1.0, 0.0, kHuge, true);
    const bool inline_a = coeff.contains("a"), inline_f = coeff.contains("f");
    std::string preset = get_string(coeff, "coeff", "preset", inline_a || inline_f ? "custom" : "linear");

    CoefficientSpec c;
    try {
        if (preset == "linear") {
            c = presets::linear(b, a_inf);
        } else if (preset == "tanh-reaction") {
            c = presets::tanh_reaction(b, get_real(coeff, "coeff", "c", 1.0, -kHuge, kHuge), a_inf);
        } else if (preset == "arctan-diffusion") {
            c = presets::arctan_diffusion(b, a_inf);
        } else if (preset == "oscillating-diffusion") {
            c = presets::oscillating_diffusion(b, a_inf, get_real(coeff, "coeff", "c", 2.0, 1.0, kHuge, true));
        } else if (preset == "custom") {
            c = presets::linear(b, a_inf);
            c.name = "custom";
            c.a_u = c.a_p = c.f_u = c.f_p = nullptr;
        } else {
            bad("coeff.preset", "unknown preset '" + preset + "'");
        }
    } catch (const PreconditionError& e) {
        bad("coeff", e.what());
    }
    if (preset != "custom" && (inline_a || inline_f)) bad("coeff.preset", "inline a/f require preset \"custom\"");
    if (preset != "tanh-reaction" && preset != "oscillating-diffusion" && coeff.contains("c"))
        bad("coeff.c", "only used by the tanh-reaction and oscillating-diffusion presets");

    if (preset == "custom") {
        bool uses_norm = false;
        if (inline_a) {
            if (!coeff.at("a").is_string()) bad("coeff.a", "expected an expression string");
            c.a = compile("coeff.a", coeff.at("a").get<std::string>(), uses_norm);
            if (!coeff.contains("epsilon")) bad("coeff.epsilon", "required with an inline a");
        }
        if (inline_f) {
            if (!coeff.at("f").is_string()) bad("coeff.f", "expected an expression string");
            c.f = compile("coeff.f", coeff.at("f").get<std::string>(), uses_norm);
            if (!coeff.contains("f_bound")) bad("coeff.f_bound", "required with an inline f");
        }
        c.norm_dependent = uses_norm;
        c.epsilon = get_real(coeff, "coeff", "epsilon", a_inf, 0.0, kHuge, true);
        c.f_bound = get_real(coeff, "coeff", "f_bound", 0.0, 0.0, kHuge);
    } else if (coeff.contains("epsilon") || coeff.contains("f_bound")) {
        bad(coeff.contains("epsilon") ? "coeff.epsilon" : "coeff.f_bound", "only allowed with inline coefficients");
    }
    try {
        validate(c);
        if (coeff.contains("cutoff_R")) c = build_cutoff(c, get_real(coeff, "coeff", "cutoff_R", 1.0, 0.0, kHuge, true));
    } catch (const PreconditionError& e) {
        bad("coeff", e.what());
    }
    return c;
}

ScenarioConfig parse_config(const json& doc) {
    check_keys(doc, "", {"name", "grid", "coeff", "scan", "integrate", "track", "initial", "seeds", "sphere", "verify",
                         "ymap", "sweep", "output"});
    ScenarioConfig cfg;
    cfg.name = get_string(doc, "", "name", cfg.name);

    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        check_keys(g, "grid", {"n"});
        cfg.grid = SpatialGrid(static_cast<std::size_t>(get_int(g, "grid", "n", 257, 5, 100001)));
    }

    cfg.coeff_source = doc.contains("coeff") ? doc.at("coeff") : json::object();
    cfg.coeff = build_coefficients(cfg.coeff_source);

    if (doc.contains("scan")) {
        const auto& s = doc.at("scan");
        check_keys(s, "scan", {"eta_min", "eta_max", "scan_n", "eigenvalues"});
        cfg.eta_min = get_real(s, "scan", "eta_min", cfg.eta_min, -kHuge, kHuge);
        cfg.eta_max = get_real(s, "scan", "eta_max", cfg.eta_max, -kHuge, kHuge);
        if (!(cfg.eta_max > cfg.eta_min)) bad("scan.eta_max", "must exceed scan.eta_min");
        cfg.scan_n = get_int(s, "scan", "scan_n", cfg.scan_n, 2, 10000000);
        cfg.eig_count = get_int(s, "scan", "eigenvalues", cfg.eig_count, 1, 1000);
    }

    if (doc.contains("integrate")) {
        const auto& s = doc.at("integrate");
        check_keys(s, "integrate", {"dt_init", "dt_min", "dt_max", "t_max", "growup_threshold", "rtol", "atol",
                                    "convergence_tol", "extrapolate"});
        auto& c = cfg.ctrl;
        c.dt_init = get_real(s, "integrate", "dt_init", c.dt_init, 0.0, kHuge, true);
        c.dt_min = get_real(s, "integrate", "dt_min", c.dt_min, 0.0, kHuge, true);
        c.dt_max = get_real(s, "integrate", "dt_max", c.dt_max, 0.0, kHuge, true);
        c.t_max = get_real(s, "integrate", "t_max", c.t_max, 0.0, kHuge, true);
        c.growup_norm_threshold = get_real(s, "integrate", "growup_threshold", c.growup_norm_threshold, 0.0, 1e300, true);
        c.rtol = get_real(s, "integrate", "rtol", c.rtol, 0.0, 1.0, true);
        c.atol = get_real(s, "integrate", "atol", c.atol, 0.0, 1.0, true);
        c.convergence_tol = get_real(s, "integrate", "convergence_tol", c.convergence_tol, 0.0, 1.0, true);
        c.extrapolate = get_bool(s, "integrate", "extrapolate", c.extrapolate);
        try {
            c.validate();
        } catch (const PreconditionError& e) {
            bad("integrate", e.what());
        }
    }

    if (doc.contains("track")) {
        const auto& s = doc.at("track");
        check_keys(s, "track", {"modes", "snapshot_every"});
        cfg.ctrl.track_modes = get_int(s, "track", "modes", cfg.ctrl.track_modes, 1, 256);
        cfg.ctrl.snapshot_every = get_int(s, "track", "snapshot_every", cfg.ctrl.snapshot_every, 1, 1000000);
    }
    if (cfg.ctrl.track_modes >= static_cast<int>(cfg.grid.size())) bad("track.modes", "must be below grid.n");

    if (doc.contains("initial")) {
        const auto& s = doc.at("initial");
        check_keys(s, "initial", {"modes", "expression", "random_amplitude", "random_modes"});
        if (s.contains("modes") && s.contains("expression"))
            bad("initial.expression", "give either initial.modes or initial.expression");
        if (s.contains("modes")) {
            const auto& m = s.at("modes");
            if (!m.is_array() || m.empty()) bad("initial.modes", "expected a nonempty array of numbers");
            for (std::size_t i = 0; i < m.size(); ++i) {
                if (!m[i].is_number() || !std::isfinite(m[i].get<double>()))
                    bad("initial.modes[" + std::to_string(i) + "]", "expected a finite number");
                cfg.initial_modes.push_back(m[i].get<double>());
            }
            if (cfg.initial_modes.size() >= cfg.grid.size()) bad("initial.modes", "more modes than grid.n - 1");
        }
        if (s.contains("expression")) {
            cfg.initial_expr = get_string(s, "initial", "expression", "");
            try {
                Expression e(*cfg.initial_expr);
                if (e.uses_norm()) bad("initial.expression", "may only depend on x");
            } catch (const PreconditionError& err) {
                bad("initial.expression", err.what());
            }
        }
        cfg.random_amplitude = get_real(s, "initial", "random_amplitude", cfg.random_amplitude, 0.0, kHuge, true);
        cfg.random_modes = get_int(s, "initial", "random_modes", cfg.random_modes, 1, 256);
    }

    if (doc.contains("seeds")) {
        const auto& s = doc.at("seeds");
        if (!s.is_array() || s.empty()) bad("seeds", "expected a nonempty array of nonnegative integers");
        cfg.seeds.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s[i].is_number_unsigned()) bad("seeds[" + std::to_string(i) + "]", "expected a nonnegative integer");
            cfg.seeds.push_back(s[i].get<std::uint64_t>());
        }
    }

    if (doc.contains("sphere")) {
        const auto& s = doc.at("sphere");
        check_keys(s, "sphere", {"dt", "t_max"});
        cfg.sphere_dt = get_real(s, "sphere", "dt", cfg.sphere_dt, 0.0, kHuge, true);
        cfg.sphere_t_max = get_real(s, "sphere", "t_max", cfg.sphere_t_max, 0.0, kHuge, true);
    }

    if (doc.contains("verify")) {
        const auto& s = doc.at("verify");
        check_keys(s, "verify", {"enabled", "eps", "scales"});
        cfg.verify = get_bool(s, "verify", "enabled", cfg.verify);
        cfg.verify_eps = get_real(s, "verify", "eps", cfg.verify_eps, 0.0, 1.0, true);
        cfg.verify_scales = get_int(s, "verify", "scales", cfg.verify_scales, 1, 64);
    }

    if (doc.contains("ymap")) {
        const auto& s = doc.at("ymap");
        check_keys(s, "ymap", {"reference", "n"});
        if (s.contains("reference")) cfg.ymap_reference = get_int(s, "ymap", "reference", 0, 0, 1000000);
        if (s.contains("n")) cfg.ymap_n = get_int(s, "ymap", "n", 0, 0, 1000000);
    }

    if (doc.contains("sweep")) {
        const auto& s = doc.at("sweep");
        check_keys(s, "sweep", {"b"});
        if (!s.contains("b") || !s.at("b").is_array() || s.at("b").empty())
            bad("sweep.b", "expected a nonempty array of numbers");
        for (std::size_t i = 0; i < s.at("b").size(); ++i) {
            const auto& v = s.at("b")[i];
            const std::string key = "sweep.b[" + std::to_string(i) + "]";
            if (!v.is_number() || !std::isfinite(v.get<double>()) || v.get<double>() < 0.0)
                bad(key, "expected a finite nonnegative number");
            cfg.sweep_b.push_back(v.get<double>());
        }
    }

    if (doc.contains("output")) {
        const auto& s = doc.at("output");
        check_keys(s, "output", {"dir"});
        cfg.output_dir = get_string(s, "output", "dir", cfg.output_dir);
        if (cfg.output_dir.empty()) bad("output.dir", "must not be empty");
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

StateField initial_field(const ScenarioConfig& cfg, std::uint64_t seed) {
    const auto& g = cfg.grid;
    if (!cfg.initial_modes.empty()) return synthesize_modes(g, cfg.initial_modes);
    if (cfg.initial_expr) {
        Expression e(*cfg.initial_expr);
        StateField u(g);
        for (std::size_t i = 0; i < g.size(); ++i) u[i] = e(g.node(i), 0.0, 0.0, 0.0);
        if (!u.all_finite()) throw ConfigError("config key 'initial.expression': non-finite value on the grid");
        return u;
    }
    std::mt19937_64 rng(seed);
    const int m = std::min<int>(cfg.random_modes, static_cast<int>(g.size()) - 1);
    std::vector<double> c(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
        c[static_cast<std::size_t>(j)] = cfg.random_amplitude * (2.0 * unit_uniform(rng()) - 1.0) * std::pow(0.7, j);
    return synthesize_modes(g, c);
}

}  // namespace sturm
