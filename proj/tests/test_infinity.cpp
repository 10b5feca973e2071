#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sturm/coefficients.hpp"
#include "sturm/errors.hpp"
#include "sturm/infinity.hpp"
#include "sturm/integrator.hpp"

using namespace sturm;

namespace {

struct Uniform {
    std::mt19937_64 rng;
    explicit Uniform(std::uint64_t seed) : rng(seed) {}
    double operator()(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53; }
};

StateField random_field(const SpatialGrid& g, Uniform& u, int modes, double scale) {
    std::vector<double> c(modes);
    for (auto& v : c) v = u(-scale, scale);
    return synthesize_modes(g, c);
}

StateField random_unit(const SpatialGrid& g, Uniform& u) {
    auto f = random_field(g, u, kSphereModes, 1.0);
    return f * (1.0 / l2_norm(f));
}

TrajectoryRecord growup_run(const StateField& u0, double b) {
    StepController ctrl;
    ctrl.t_max = 100.0;
    return integrate(u0, ctrl, presets::linear(b));
}

}  // namespace

TEST_CASE("projection onto the hemisphere") {
    SpatialGrid g;
    auto p0 = project(StateField(g));
    CHECK(p0.z == 1.0);
    CHECK(sup_norm(p0.chi) == 0.0);

    auto unit = mode_field(g, 3);
    CHECK(project(unit).z == doctest::Approx(1.0 / std::sqrt(2.0)));

    auto big = project(mode_field(g, 0) * 1e6);
    CHECK(l2_norm(big.chi - mode_field(g, 0)) <= 2e-12);
    CHECK(big.z <= 1e-6);

    Uniform rnd(5);
    for (int k = 0; k < 100; ++k) {
        auto u = random_field(g, rnd, 10, rnd(0.0, 50.0));
        auto p = project(u);
        CHECK(std::abs(l2_norm(p.chi) * l2_norm(p.chi) + p.z * p.z - 1.0) <= 1e-9);
        auto back = project(unproject(p));
        CHECK(l2_norm(back.chi - p.chi) <= 1e-9);
        CHECK(std::abs(back.z - p.z) <= 1e-9);
    }
    CHECK(sup_norm(unproject({StateField(g), 1.0})) == 0.0);
    CHECK_THROWS_AS(unproject({mode_field(g, 0), 0.0}), AtInfinityError);
}

TEST_CASE("equilibria at infinity") {
    CHECK(infinity_equilibria(1.0, 5.0).size() == 6);
    CHECK(infinity_equilibria(2.0, 1.0).size() == 2);
    CHECK(infinity_equilibria(3.0, 3.0).size() == 4);
    CHECK(infinity_equilibria(1.0, 17.0).size() == 10);
    CHECK(infinity_equilibria(1.0, 4.0).size() == 6);
    for (const auto& e : infinity_equilibria(1.0, 17.0)) CHECK(zero_number(e.direction(SpatialGrid()).values) == e.j);
    CHECK(in_growup_band(2, 1.0, 5.0));
    CHECK_FALSE(in_growup_band(2, 1.0, 4.0));
    CHECK(marginal_index(2, 1.0, 4.0));
}

TEST_CASE("sphere flow step") {
    SpatialGrid g;
    for (int j = 0; j < 12; ++j) {
        auto phi = mode_field(g, j);
        CHECK(l2_norm(sphere_flow_step(phi, 0.05, 1.0) - phi) <= 1e-8);
        CHECK(l2_norm(sphere_flow_step(-phi, 0.05, 1.0) + phi) <= 1e-8);
        CHECK(l2_norm(sphere_vector_field(phi, 1.0)) <= 1e-8);
    }
    auto mix = (mode_field(g, 0) + mode_field(g, 1)) * (1.0 / std::sqrt(2.0));
    auto next = sphere_flow_step(mix, 0.05, 1.0);
    CHECK(project_mode(next, 0) > project_mode(mix, 0));
    CHECK(l2_norm(sphere_flow_step(-mix, 0.05, 1.0) + next) <= 1e-14);
    CHECK_THROWS_AS(sphere_flow_step(mix * 2.0, 0.05, 1.0), PreconditionError);
}

TEST_CASE("sphere flow step with a general limiting diffusion") {
    SpatialGrid g(65);
    LimitDiffusionFn a = [](double x, double, double) { return 1.0 + 0.5 * std::cos(x) * std::cos(x); };
    auto phi0 = mode_field(g, 0);
    CHECK(l2_norm(sphere_flow_step(phi0, 0.01, a) - phi0) <= 1e-8);
    auto mix = (mode_field(g, 0) + mode_field(g, 1)) * (1.0 / std::sqrt(2.0));
    auto next = sphere_flow_step(mix, 0.01, a);
    CHECK(std::abs(l2_norm(next) - 1.0) < 1e-12);
    CHECK(energy_infinity(next) < energy_infinity(mix));
    CHECK(l2_norm(sphere_flow_step(-mix, 0.01, a) + next) <= 1e-12);
}

TEST_CASE("energy at infinity") {
    SpatialGrid g;
    CHECK(energy_infinity(mode_field(g, 0)) == 0.0);
    CHECK(std::abs(energy_infinity(mode_field(g, 1)) - 0.5) <= 1e-4);
    // Centered differences scale the mode energy by (sin(jh) / (jh))^2.
    const double h = g.spacing();
    for (int j = 2; j < 12; ++j) {
        const double discrete = j * j / 2.0 * std::pow(std::sin(j * h) / (j * h), 2);
        CHECK(energy_infinity(mode_field(g, j)) == doctest::Approx(discrete).epsilon(1e-10));
    }
}

TEST_CASE("sphere flow fixed points are the normalized modes") {
    SpatialGrid g;
    Uniform rnd(17);
    for (int k = 0; k < 100; ++k) CHECK(l2_norm(sphere_vector_field(random_unit(g, rnd), 1.0)) >= 1e-3);
}

TEST_CASE("sphere flow decreases the energy and converges to a mode") {
    SpatialGrid g;
    Uniform rnd(23);
    for (int k = 0; k < 5; ++k) {
        auto chi0 = random_unit(g, rnd);
        auto rec = sphere_flow(chi0, 0.05, 60.0, 1.0);
        for (std::size_t i = 1; i < rec.energies.size(); ++i) CHECK(rec.energies[i] - rec.energies[i - 1] <= 1e-12);
        CHECK(rec.converged);
        CHECK(rec.limit_distance <= 1e-6);
        CHECK(rec.limit_index <= dominant_index(chi0));
    }
}

TEST_CASE("plane chart") {
    SpatialGrid g;
    auto q = plane_project(mode_field(g, 2) * 5.0, 2);
    CHECK(l2_norm(q.xi - mode_field(g, 2)) <= 1e-12);
    CHECK(q.zeta == doctest::Approx(0.2));
    CHECK(std::abs(project_mode(q.xi, 2) - 1.0) <= 1e-9);
    CHECK_THROWS_AS(plane_project(mode_field(g, 1), 2), PreconditionError);

    Uniform rnd(29);
    for (int k = 0; k < 100; ++k) {
        const int js = static_cast<int>(rnd.rng() % 4);
        auto u = random_field(g, rnd, 8, rnd(0.1, 20.0));
        if (project_mode(u, js) < 0) u = -u;
        if (project_mode(u, js) < 1e-3) continue;
        auto p = project(u);
        auto a = plane_project(unproject(p), js);
        auto b = plane_from_sphere(p, js);
        CHECK(l2_norm(a.xi - b.xi) <= 1e-9);
        CHECK(std::abs(a.zeta - b.zeta) <= 1e-9);
        auto back = sphere_from_plane(b);
        CHECK(l2_norm(back.chi - p.chi) <= 1e-9);
    }
}

TEST_CASE("plane flow rates") {
    const std::vector<int> js{0, 2, 3};
    auto r = plane_flow_rates(2, 1.0, js);
    CHECK(r[0].second == 4.0);
    CHECK(r[1].second == 0.0);
    auto r2 = plane_flow_rates(1, 2.0, js);
    CHECK(r2[2].second == -16.0);
}

TEST_CASE("sphere and plane charts carry the same flow") {
    SpatialGrid g;
    Uniform rnd(31);
    for (int k = 0; k < 5; ++k) {
        auto chi = random_unit(g, rnd);
        const int js = 1;
        if (project_mode(chi, js) < 0) chi = -chi;
        auto plane0 = plane_from_sphere({chi, 0.0}, js);
        double t = 0.0;
        for (int s = 0; s < 40; ++s) {
            chi = sphere_flow_step(chi, 0.01, 1.0);
            t += 0.01;
            auto via_sphere = plane_from_sphere({chi, 0.0}, js);
            auto via_plane = plane_flow(plane0, t, 1.0);
            CHECK(l2_norm(via_sphere.xi - via_plane.xi) <= 1e-6 * std::max(1.0, l2_norm(via_plane.xi)));
        }
    }
}

TEST_CASE("grow-up direction") {
    SpatialGrid g;
    auto d1 = growup_direction(growup_run(mode_field(g, 1) + mode_field(g, 2), 5.0));
    CHECK(d1.determined);
    CHECK(d1.j == 1);
    CHECK(d1.sign == 1);
    auto u0 = mode_field(g, 1) * 0.5 - mode_field(g, 0);
    auto d0 = growup_direction(growup_run(u0, 5.0));
    CHECK(d0.j == 0);
    CHECK(d0.sign == -1);
    auto pred = predicted_growup_mode(u0, 1.0, 5.0);
    REQUIRE(pred);
    CHECK(pred->j == 0);
    CHECK(pred->sign == -1);
    // Rounding seeds phi_0 at ~1e-17 and it outgrows phi_2 by exp(4t); start
    // large enough to cross the threshold before that matters.
    auto d2 = growup_direction(growup_run(mode_field(g, 2) * 2.5e3, 5.0));
    CHECK(d2.j == 2);
    CHECK(d2.sign == 1);
    CHECK(d2.projection >= 0.999);

    StepController ctrl;
    ctrl.t_max = 1.0;
    auto bounded = integrate(mode_field(g, 4), ctrl, presets::linear(5.0));
    CHECK_THROWS_AS(growup_direction(bounded), PreconditionError);
}

TEST_CASE("tail bound") {
    SpatialGrid g;
    auto band = growup_run(mode_field(g, 0) + mode_field(g, 1) + mode_field(g, 2), 5.0);
    CHECK(tail_bound(band, 2) <= 1e-9 * band.norms.back());

    auto with5 = growup_run(mode_field(g, 0) + mode_field(g, 5), 5.0);
    CHECK(tail_bound(with5, 2) == doctest::Approx(1.0).epsilon(1e-6));
    const auto& last = with5.snapshots.back();
    auto head = synthesize_modes(g, project_modes(last, 3));
    CHECK(l2_norm(last - head) < 1e-6);

    StepController ctrl;
    ctrl.t_max = 100.0;
    auto tanh_run = integrate(mode_field(g, 1) * 3.0, ctrl, presets::tanh_reaction(5.0, 2.0));
    CHECK(tanh_run.outcome == Outcome::GrowUp);
    const double bound = tail_bound(tanh_run, 2);
    CHECK(std::isfinite(bound));
    CHECK(bound < 10.0);
}

TEST_CASE("equator rate stays bounded along grow-up") {
    SpatialGrid g;
    auto c = presets::tanh_reaction(5.0, 2.0);
    StepController ctrl;
    ctrl.t_max = 100.0;
    auto tr = integrate(mode_field(g, 1) * 3.0 + mode_field(g, 4) * 0.5, ctrl, c);
    REQUIRE(tr.outcome == Outcome::GrowUp);
    for (const auto& s : tr.snapshots) CHECK(std::abs(equator_rate(s, c)) <= 30.0);
    auto rows = projected_rows(tr);
    CHECK(rows.size() == tr.samples());
    CHECK(rows.back()[1] < rows.front()[1]);
    // Eventually monotone: z decreases over the last half of the run.
    for (std::size_t i = rows.size() / 2 + 1; i < rows.size(); ++i) CHECK(rows[i][1] <= rows[i - 1][1]);
}
