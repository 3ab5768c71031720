#pragma once

#include "rka/linalg.hpp"
#include "rka/rng.hpp"

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace rka {

/// How row probabilities and averaging weights are chosen for a given
/// relaxation α.
enum class SchemeKind {
    UniformWeightsRowNormProbs, ///< w_i = α, p_i = ‖A_i‖²/‖A‖_F²
    RowNormWeightsUniformProbs, ///< w_i = α·m·‖A_i‖²/‖A‖_F², p_i = 1/m
    UniformWeightsUniformProbs, ///< w_i = α, p_i = 1/m (coupled only for equal row norms)
};

/// CLI identifiers: uniform-w-rownorm-p, rownorm-w-uniform-p, uniform-w-uniform-p.
std::string_view scheme_name(SchemeKind kind) noexcept;
std::optional<SchemeKind> parse_scheme(std::string_view name) noexcept;

inline constexpr double coupling_tol = 1e-10;

/// Coupling satisfied: p_i·w_i·‖A‖_F²/‖A_i‖² equals `alpha` for every row.
struct CouplingHolds {
    double alpha;
};

/// Coupling broken; reports the worst row and its deviation relative to the
/// mean ratio.
struct CouplingViolation {
    double max_rel_deviation;
    std::size_t index;
};

using CouplingResult = std::variant<CouplingHolds, CouplingViolation>;

/// Row distribution plus per-row weights for one matrix. Immutable once built
/// and safe to share between threads.
class SamplingScheme {
public:
    /// Validates the invariants (probabilities sum to one, weights and row
    /// norms positive) and precomputes the cumulative distribution.
    SamplingScheme(Vector probs, Vector weights, Vector row_norms_sq);

    const Vector& probs() const noexcept { return probs_; }
    const Vector& weights() const noexcept { return weights_; }
    const Vector& row_norms_sq() const noexcept { return row_norms_sq_; }
    double frob_sq() const noexcept { return frob_sq_; }
    std::size_t rows() const noexcept { return probs_.size(); }

    /// Coupling constant when the probability/weight coupling holds.
    std::optional<double> alpha() const noexcept { return alpha_; }

    /// Inverse-CDF lookup for u in [0, 1).
    std::size_t index_for(double u) const noexcept;

private:
    Vector probs_;
    Vector weights_;
    Vector row_norms_sq_;
    Vector cumulative_;
    double frob_sq_;
    std::optional<double> alpha_;
};

SamplingScheme make_scheme(SchemeKind kind, double alpha, const Matrix& a);

CouplingResult check_coupling(const SamplingScheme& scheme);

/// Row indices τ drawn with replacement, in draw order.
struct SampleBatch {
    std::vector<std::size_t> indices;
};

SampleBatch draw_batch(const SamplingScheme& scheme, std::size_t q, Rng& rng);
void draw_batch_into(const SamplingScheme& scheme, std::size_t q, Rng& rng, SampleBatch& batch);

} // namespace rka
