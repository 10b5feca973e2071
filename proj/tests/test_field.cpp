#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "sturm/errors.hpp"
#include "sturm/field.hpp"

using namespace sturm;

namespace {

// Plain sign-change scan over adjacent nodes, no tolerance band.
int brute_sign_changes(const std::vector<double>& v) {
    int count = 0;
    int last = 0;
    for (double x : v) {
        const int s = x > 0 ? 1 : (x < 0 ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) ++count;
        last = s;
    }
    return count;
}

std::vector<double> dense_samples(double (*fn)(double, int, int), int j, int k, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = fn(std::numbers::pi * static_cast<double>(i) / (n - 1), j, k);
    return v;
}

double mode_difference(double x, int j, int k) {
    const auto phi = [](double y, int m) {
        return m == 0 ? 1.0 / std::sqrt(std::numbers::pi) : std::sqrt(2.0 / std::numbers::pi) * std::cos(m * y);
    };
    return phi(x, j) - phi(x, k);
}

}  // namespace

TEST_CASE("grid construction") {
    SpatialGrid g;
    CHECK(g.size() == 257);
    CHECK(g.node(0) == 0.0);
    CHECK(g.nodes().back() == std::numbers::pi);
    CHECK(g.spacing() == doctest::Approx(std::numbers::pi / 256));
    CHECK_THROWS_AS(SpatialGrid(32), PreconditionError);
    CHECK_THROWS_AS(SpatialGrid(34), PreconditionError);
    CHECK(g.refined().size() == 513);
}

TEST_CASE("state field rejects non-finite values and size mismatch") {
    SpatialGrid g(33);
    std::vector<double> v(33, 0.0);
    v[5] = std::nan("");
    CHECK_THROWS_AS(StateField(g, v), PreconditionError);
    CHECK_THROWS_AS(StateField(g, std::vector<double>(31, 0.0)), PreconditionError);
}

TEST_CASE("zero number examples") {
    SpatialGrid g;
    auto c3 = StateField::from_function(g, [](double x) { return std::cos(3 * x); });
    CHECK(zero_number(c3, 1e-12) == 3);
    CHECK(zero_number(StateField(g)) == -1);

    SpatialGrid g129(129);
    auto d = StateField::from_function(g129, [](double x) { return std::cos(x) - std::cos(2 * x); });
    std::vector<double> raw(d.values().begin(), d.values().end());
    CHECK(zero_number(d) == brute_sign_changes(raw));
}

TEST_CASE("zero number invariances") {
    SpatialGrid g;
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> coeffs(8);
        for (auto& c : coeffs) c = static_cast<double>(rng() % 2001) / 1000.0 - 1.0;
        auto u = synthesize_modes(g, coeffs);
        const int z = zero_number(u);
        CHECK(zero_number(u * 3.7) == z);
        CHECK(zero_number(u * 1e-5) == z);
        CHECK(zero_number(-u) == z);
    }
}

TEST_CASE("zero number of mode differences matches a dense sampling") {
    SpatialGrid g;
    for (int j = 0; j < 6; ++j)
        for (int k = 0; k < 6; ++k) {
            if (j == k) continue;
            auto d = mode_field(g, j) - mode_field(g, k);
            auto dense = dense_samples(mode_difference, j, k, 10 * (g.size() - 1) + 1);
            CHECK(zero_number(d) == brute_sign_changes(dense));
        }
}

TEST_CASE("classify zero") {
    SpatialGrid g;
    const std::size_t mid = (g.size() - 1) / 2;
    auto c1 = StateField::from_function(g, [](double x) { return std::cos(x); });
    CHECK(classify_zero(c1, mid, 1e-8, 1e-3) == ZeroKind::Simple);
    auto c2 = StateField::from_function(g, [](double x) { return std::cos(2 * x) + 1.0; });
    CHECK(classify_zero(c2, mid, 1e-8, 1e-3) == ZeroKind::Multiple);
    auto pos = StateField::from_function(g, [](double x) { return std::cos(x) + 2.0; });
    for (std::size_t i : {std::size_t{0}, mid, g.size() - 1}) CHECK(classify_zero(pos, i, 1e-8, 1e-3) == ZeroKind::NotAZero);
    // Boundary node: u = x^2 - ... has zero value with vanishing one-sided slope at x = 0.
    auto quad = StateField::from_function(g, [](double x) { return 1.0 - std::cos(x); });
    CHECK(classify_zero(quad, 0, 1e-8, 1e-3) == ZeroKind::Multiple);
}

TEST_CASE("inner product and modes") {
    SpatialGrid g;
    auto c1 = StateField::from_function(g, [](double x) { return std::cos(x); });
    auto c2 = StateField::from_function(g, [](double x) { return std::cos(2 * x); });
    CHECK(std::abs(inner(c1, c1) - std::numbers::pi / 2) <= 1e-6);
    CHECK(std::abs(inner(c1, c2)) <= 1e-8);
    CHECK(inner(StateField(g), c2) == 0.0);
    CHECK_THROWS(inner(c1, StateField(SpatialGrid(33))));

    for (int j = 0; j < 12; ++j) {
        auto m = eigen_mode(g, j);
        CHECK(m.eigenvalue == -static_cast<double>(j * j));
        CHECK(std::abs(l2_norm(m.values) - 1.0) <= 1e-10);
        for (int k = 0; k < j; ++k) CHECK(std::abs(inner(m.values, mode_field(g, k))) <= 1e-8);
    }
    auto p2 = mode_field(g, 2);
    CHECK(std::abs(project_mode(p2, 2) - 1.0) <= 1e-8);
    CHECK(std::abs(project_mode(p2, 3)) <= 1e-8);
    auto mix = mode_field(g, 0) * 3.0 + mode_field(g, 1) * 4.0;
    CHECK(project_mode(mix, 0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(project_mode(mix, 1) == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("Parseval for band-limited fields") {
    SpatialGrid g;
    std::mt19937_64 rng(11);
    const int band = static_cast<int>(g.size() / 4);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> coeffs(band + 1);
        for (auto& c : coeffs) c = static_cast<double>(rng() % 2001) / 1000.0 - 1.0;
        auto u = synthesize_modes(g, coeffs);
        double sum = 0.0;
        for (double c : project_modes(u, static_cast<int>(g.size()) - 1)) sum += c * c;
        CHECK(std::abs(l2_norm(u) * l2_norm(u) - sum) <= 1e-6);
    }
}

TEST_CASE("derivative stencils") {
    SpatialGrid g;
    auto c2 = StateField::from_function(g, [](double x) { return std::cos(2 * x); });
    auto d2 = second_derivative(c2);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(d2[i] + 4.0 * c2[i]));
    CHECK(err < 1e-3);
    auto d1 = derivative(c2);
    CHECK(d1[0] == 0.0);
    CHECK(d1[g.size() - 1] == 0.0);
}

TEST_CASE("csv round trip") {
    SpatialGrid g(33);
    auto u = StateField::from_function(g, [](double x) { return std::sin(x) + 0.1; });
    std::stringstream ss;
    write_field_csv(ss, u);
    const std::string text = ss.str();
    CHECK(text.rfind("# n=33,h=", 0) == 0);
    auto back = read_field_csv(ss);
    CHECK(back.grid() == g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back[i] == u[i]);
}
