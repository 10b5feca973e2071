#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sturm {

/// Tridiagonal matrix stored by diagonals; lower[0] and upper[n-1] are unused.
struct Tridiagonal {
    std::vector<double> lower, diag, upper;

    explicit Tridiagonal(std::size_t n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
    std::size_t size() const noexcept { return diag.size(); }

    std::vector<double> apply(std::span<const double> v) const;
};

/// Thomas algorithm. Throws FidelityError on a vanishing pivot.
std::vector<double> solve(const Tridiagonal& m, std::span<const double> rhs);

}  // namespace sturm
