#include "rka/system.hpp"
#include "rka/error.hpp"

#include <algorithm>
#include <cmath>

namespace rka {

void validate_system(const LinearSystem& system)
{
    const auto& a = system.a;
    if (system.b.size() != a.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "rhs length does not match the number of rows");
    }
    require_finite(system.b, "rhs");
    if (system.x_star && system.x_star->size() != a.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "x_star length does not match the number of columns");
    }
    if (system.r_star && system.r_star->size() != a.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "r_star length does not match the number of rows");
    }
    if (system.x_star && system.r_star) {
        Vector rebuilt = multiply(a, *system.x_star);
        for (std::size_t i = 0; i < rebuilt.size(); ++i) {
            rebuilt[i] += (*system.r_star)[i];
        }
        if (std::sqrt(error_sq(rebuilt, system.b)) > 1e-12 * std::max(1.0, norm(system.b))) {
            throw Error(ErrorCode::InvalidArgument, "b differs from A·x_star + r_star");
        }
        const double leak = norm(multiply_transposed(a, *system.r_star));
        if (leak > 1e-10 * std::sqrt(frobenius_sq(a)) * norm(*system.r_star)) {
            throw Error(ErrorCode::InvalidArgument, "r_star is not orthogonal to the range of A");
        }
    }
}

} // namespace rka
