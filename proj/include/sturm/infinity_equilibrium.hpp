#pragma once

#include <string>

#include "sturm/field.hpp"

namespace sturm {

/// Equilibrium at infinity +-Phi_j: the limit of grow-up along +-phi_j.
/// Its zero number is j and Phi_j(0) = sign * infinity.
struct InfinityEquilibrium {
    int j = 0;
    int sign = 1;

    EigenMode direction(const SpatialGrid& grid) const { return eigen_mode(grid, j); }
    std::string label() const { return (sign > 0 ? "+Phi" : "-Phi") + std::to_string(j); }

    friend bool operator==(const InfinityEquilibrium&, const InfinityEquilibrium&) = default;
};

}  // namespace sturm
