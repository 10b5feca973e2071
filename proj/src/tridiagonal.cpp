#include "sturm/tridiagonal.hpp"

#include <cmath>

#include "sturm/errors.hpp"

namespace sturm {

std::vector<double> Tridiagonal::apply(std::span<const double> v) const {
    const std::size_t n = size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = diag[i] * v[i];
        if (i > 0) s += lower[i] * v[i - 1];
        if (i + 1 < n) s += upper[i] * v[i + 1];
        r[i] = s;
    }
    return r;
}

std::vector<double> solve(const Tridiagonal& m, std::span<const double> rhs) {
    const std::size_t n = m.size();
    if (rhs.size() != n) throw PreconditionError("tridiagonal solve: size mismatch");
    std::vector<double> c(n), d(n);
    double pivot = m.diag[0];
    if (std::abs(pivot) < 1e-300) throw FidelityError("tridiagonal solve: singular pivot at row 0");
    c[0] = (n > 1 ? m.upper[0] : 0.0) / pivot;
    d[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = m.diag[i] - m.lower[i] * c[i - 1];
        if (std::abs(pivot) < 1e-300)
            throw FidelityError("tridiagonal solve: singular pivot at row " + std::to_string(i));
        c[i] = (i + 1 < n ? m.upper[i] : 0.0) / pivot;
        d[i] = (rhs[i] - m.lower[i] * d[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
}

}  // namespace sturm
