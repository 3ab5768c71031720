#pragma once

#include "rka/linalg.hpp"

#include <optional>

namespace rka {

/// A·x ≈ b, optionally with the known least-squares solution and residual
/// (used for error measurement and horizon bounds).
struct LinearSystem {
    Matrix a;
    Vector b;
    std::optional<Vector> x_star;
    std::optional<Vector> r_star;
};

/// Shape checks plus, when both are present, b = A·x⋆ + r⋆ and Aᵀr⋆ ≈ 0.
void validate_system(const LinearSystem& system);

} // namespace rka
