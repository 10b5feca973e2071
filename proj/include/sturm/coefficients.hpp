// Coefficients of u_t = a(x,u,u_x) u_xx + b u + f(x,u,u_x).
#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace sturm {

/// Pointwise coefficient evaluated at (x, u, p = u_x). The last argument is the
/// L2 norm of the whole field, for diffusions such as a(||u||) that depend on it.
using CoefficientFn = std::function<double(double x, double u, double p, double norm)>;

struct CoefficientSpec {
    std::string name;
    CoefficientFn a;
    CoefficientFn f;
    double b = 0.0;
    // Optional analytic partials; finite differences are substituted when absent.
    CoefficientFn a_u, a_p, f_u, f_p;
    double a_inf = 1.0;       // limit of a outside large balls
    double epsilon = 0.0;     // declared lower bound of a
    double f_bound = 0.0;     // certified sup |f|; +inf when f is unbounded (cut-off systems)
    bool norm_dependent = false;
    bool dissipative = false; // set by build_cutoff
};

/// Samples a and f on probe points and throws PreconditionError when a < epsilon,
/// epsilon <= 0, a_inf <= 0 or |f| > f_bound.
void validate(const CoefficientSpec& c);

/// Finite-difference step used when a partial derivative is not provided.
inline constexpr double kPartialStep = 1e-6;

double partial_a_u(const CoefficientSpec& c, double x, double u, double p, double norm);
double partial_a_p(const CoefficientSpec& c, double x, double u, double p, double norm);
double partial_f_u(const CoefficientSpec& c, double x, double u, double p, double norm);
double partial_f_p(const CoefficientSpec& c, double x, double u, double p, double norm);

namespace presets {

/// a = a_inf, f = 0.
CoefficientSpec linear(double b, double a_inf = 1.0);

/// a = a_inf, f = -c tanh(u).
CoefficientSpec tanh_reaction(double b, double c, double a_inf = 1.0);

/// a = a_inf (2/pi) arctan(||u|| + 1), f = 0. Rescaled so that a -> a_inf.
CoefficientSpec arctan_diffusion(double b, double a_inf = 1.0);

/// a = a_inf + (sin ||u|| + c) / (||u|| + 1) with c > 1, f = 0.
CoefficientSpec oscillating_diffusion(double b, double a_inf, double c);

}  // namespace presets

/// C^2 quintic transition s(r) = 6r^5 - 15r^4 + 10r^3 clamped to [0,1].
double smoothstep(double r) noexcept;

/// Dissipative modification of c: the reaction equals f while max(|u|,|u_x|) <= R
/// and is replaced by -(1+b)u (so that bu + F = -u) beyond R+1, blended by the
/// smoothstep of max(|u|,|u_x|) - R. Diffusion and b are kept.
CoefficientSpec build_cutoff(const CoefficientSpec& c, double R);

}  // namespace sturm
