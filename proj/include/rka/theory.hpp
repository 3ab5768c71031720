#pragma once

#include "rka/linalg.hpp"
#include "rka/sampling.hpp"

#include <optional>
#include <utility>

namespace rka::theory {

/// Per-iteration bound E‖e^{k+1}‖² ≤ rate·‖e^k‖² + horizon_step.
struct BoundReport {
    double rate = 1.0;
    double horizon_step = 0.0;
    /// horizon_step/(1 − rate), present only when rate < 1.
    std::optional<double> horizon_limit;
};

/// AᵀA/‖A‖_F². Throws RankDeficient for rank-deficient A.
Matrix gram_normalized(const Matrix& a);

/// Contraction constant of the general weighted bound:
/// σ_max((I − αG)² − (α²/q)G²) with G = AᵀA/‖A‖_F². Evaluated over every
/// eigenvalue of G.
double rate_general(const SpectralInfo& spectrum, double alpha, double q);
double rate_general(const Matrix& a, double alpha, double q);

/// p(σ) = 1 − 2ασ + α²(σ/q + (1 − 1/q)σ²), the rate polynomial for uniform
/// weights with row-norm probabilities. Requires σ ∈ (0, 1].
double p_poly(double sigma, double alpha, double q);

/// max(p(s_min), p(s_max)).
double rate_uniform(double s_min, double s_max, double alpha, double q);
double rate_uniform(const SpectralInfo& spectrum, double alpha, double q);

/// Uniform-weight bound with horizon α²‖r⋆‖²/(q‖A‖_F²).
BoundReport horizon_uniform(const SpectralInfo& spectrum, double alpha, double q, double r_star_norm_sq);

/// Bound on E‖e^K‖² from iterating `report` K times from ‖e⁰‖².
double iterate_bound(const BoundReport& report, std::size_t k, double e0_sq);

/// Consistent-system rate for general coupled weights:
/// σ_max((I − αG)² + (α/q)AᵀWA/‖A‖_F² − (α²/q)G²). Throws CouplingViolated
/// unless the scheme's probabilities and weights are coupled.
double rate_consistent_general(const Matrix& a, const SamplingScheme& scheme, double alpha, double q);

/// Closed forms of E[M] and E[MᵀAAᵀM] for the weighted sampling matrix M of a
/// q-row batch (both m×m).
std::pair<Matrix, Matrix> moments_mk(const Matrix& a, const SamplingScheme& scheme, std::size_t q);

/// Relaxation minimizing the uniform-weight rate bound.
double optimal_alpha(double s_min, double s_max, double q);

/// q/(1 + (q − 1)s_max), the parallel sketch-and-project choice.
double rt_alpha(double s_max, double q);

} // namespace rka::theory
