#include "sturm/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sturm/errors.hpp"

namespace sturm {

void validate(const CoefficientSpec& c) {
    if (!c.a || !c.f) throw PreconditionError("coefficients '" + c.name + "': a and f must be set");
    if (!(c.epsilon > 0.0)) throw PreconditionError("coefficients '" + c.name + "': epsilon must be positive");
    if (!(c.a_inf > 0.0)) throw PreconditionError("coefficients '" + c.name + "': a_inf must be positive");
    if (!(c.b >= 0.0))
        throw PreconditionError("coefficients '" + c.name + "': b must be nonnegative");
    static constexpr double kProbeU[] = {-1e3, -25.0, -3.0, -1.0, -0.1, 0.0, 0.2, 1.0, 2.5, 30.0, 1e3};
    static constexpr double kProbeP[] = {-40.0, -1.0, 0.0, 0.5, 40.0};
    static constexpr double kProbeNorm[] = {0.0, 0.5, 1.0, 10.0, 1e3, 1e8};
    for (int k = 0; k <= 8; ++k) {
        const double x = std::numbers::pi * k / 8.0;
        for (double u : kProbeU)
            for (double p : kProbeP)
                for (double nrm : kProbeNorm) {
                    const double a = c.a(x, u, p, nrm);
                    if (!(a >= c.epsilon))
                        throw PreconditionError("coefficients '" + c.name + "': parabolicity violated, a(" +
                                                std::to_string(x) + "," + std::to_string(u) + "," + std::to_string(p) +
                                                ") = " + std::to_string(a) + " < epsilon = " +
                                                std::to_string(c.epsilon));
                    if (std::isfinite(c.f_bound)) {
                        const double f = c.f(x, u, p, nrm);
                        if (!(std::abs(f) <= c.f_bound * (1.0 + 1e-12)))
                            throw PreconditionError("coefficients '" + c.name + "': |f| = " + std::to_string(f) +
                                                    " exceeds f_bound = " + std::to_string(c.f_bound));
                    }
                }
    }
}

namespace {

double central(const CoefficientFn& fn, double x, double u, double p, double norm, bool wrt_u) {
    const double h = kPartialStep * std::max(1.0, std::abs(wrt_u ? u : p));
    if (wrt_u) return (fn(x, u + h, p, norm) - fn(x, u - h, p, norm)) / (2.0 * h);
    return (fn(x, u, p + h, norm) - fn(x, u, p - h, norm)) / (2.0 * h);
}

}  // namespace

double partial_a_u(const CoefficientSpec& c, double x, double u, double p, double norm) {
    return c.a_u ? c.a_u(x, u, p, norm) : central(c.a, x, u, p, norm, true);
}
double partial_a_p(const CoefficientSpec& c, double x, double u, double p, double norm) {
    return c.a_p ? c.a_p(x, u, p, norm) : central(c.a, x, u, p, norm, false);
}
double partial_f_u(const CoefficientSpec& c, double x, double u, double p, double norm) {
    return c.f_u ? c.f_u(x, u, p, norm) : central(c.f, x, u, p, norm, true);
}
double partial_f_p(const CoefficientSpec& c, double x, double u, double p, double norm) {
    return c.f_p ? c.f_p(x, u, p, norm) : central(c.f, x, u, p, norm, false);
}

namespace presets {

namespace {
CoefficientFn constant(double v) {
    return [v](double, double, double, double) { return v; };
}
}  // namespace

CoefficientSpec linear(double b, double a_inf) {
    CoefficientSpec c;
    c.name = "linear";
    c.a = constant(a_inf);
    c.f = constant(0.0);
    c.b = b;
    c.a_u = c.a_p = c.f_u = c.f_p = constant(0.0);
    c.a_inf = a_inf;
    c.epsilon = a_inf;
    c.f_bound = 0.0;
    validate(c);
    return c;
}

CoefficientSpec tanh_reaction(double b, double cc, double a_inf) {
    CoefficientSpec c;
    c.name = "tanh-reaction";
    c.a = constant(a_inf);
    c.f = [cc](double, double u, double, double) { return -cc * std::tanh(u); };
    c.b = b;
    c.a_u = c.a_p = c.f_p = constant(0.0);
    c.f_u = [cc](double, double u, double, double) {
        const double s = 1.0 / std::cosh(u);
        return -cc * s * s;
    };
    c.a_inf = a_inf;
    c.epsilon = a_inf;
    c.f_bound = std::abs(cc);
    validate(c);
    return c;
}

CoefficientSpec arctan_diffusion(double b, double a_inf) {
    CoefficientSpec c;
    c.name = "arctan-diffusion";
    c.a = [a_inf](double, double, double, double norm) {
        return a_inf * (2.0 / std::numbers::pi) * std::atan(norm + 1.0);
    };
    c.f = constant(0.0);
    c.b = b;
    c.a_u = c.a_p = c.f_u = c.f_p = constant(0.0);
    c.a_inf = a_inf;
    c.epsilon = 0.5 * a_inf;  // atan(1) * 2/pi
    c.f_bound = 0.0;
    c.norm_dependent = true;
    validate(c);
    return c;
}

CoefficientSpec oscillating_diffusion(double b, double a_inf, double cc) {
    if (!(cc > 1.0)) throw PreconditionError("oscillating-diffusion: c must exceed 1");
    CoefficientSpec c;
    c.name = "oscillating-diffusion";
    c.a = [a_inf, cc](double, double, double, double norm) { return a_inf + (std::sin(norm) + cc) / (norm + 1.0); };
    c.f = constant(0.0);
    c.b = b;
    c.a_u = c.a_p = c.f_u = c.f_p = constant(0.0);
    c.a_inf = a_inf;
    c.epsilon = a_inf;
    c.f_bound = 0.0;
    c.norm_dependent = true;
    validate(c);
    return c;
}

}  // namespace presets

double smoothstep(double r) noexcept {
    if (r <= 0.0) return 0.0;
    if (r >= 1.0) return 1.0;
    return r * r * r * (r * (6.0 * r - 15.0) + 10.0);
}

CoefficientSpec build_cutoff(const CoefficientSpec& c, double R) {
    if (!(R > 0.0)) throw PreconditionError("build_cutoff: R must be positive");
    CoefficientSpec m = c;
    m.name = c.name + "+cutoff(" + std::to_string(R) + ")";
    const double b = c.b;
    auto f = c.f;
    m.f = [f, b, R](double x, double u, double p, double norm) {
        const double r = std::max(std::abs(u), std::abs(p)) - R;
        if (r <= 0.0) return f(x, u, p, norm);
        const double s = smoothstep(r);
        const double outer = -(1.0 + b) * u;
        if (s >= 1.0) return outer;
        return (1.0 - s) * f(x, u, p, norm) + s * outer;
    };
    // The blend depends on |u| and |u_x| through the max; partials come from
    // finite differences of the assembled reaction.
    m.f_u = nullptr;
    m.f_p = nullptr;
    m.f_bound = std::numeric_limits<double>::infinity();
    m.dissipative = true;
    return m;
}

}  // namespace sturm
