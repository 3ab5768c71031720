#pragma once

#include "rka/linalg.hpp"
#include "rka/sampling.hpp"
#include "rka/system.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace rka {

struct SolverConfig {
    std::size_t threads = 1;     ///< q: rows averaged per iteration
    std::size_t iterations = 0;  ///< K: iteration cap
    double lambda = 1.0;         ///< relaxation for plain RK only
    std::uint64_t seed = 0;
    bool record_trace = true;
    bool record_residual = true;
    unsigned workers = 1;        ///< OS threads computing per-row updates
    /// Stop once ‖b − A·x‖ falls to this value. Not part of the plain method;
    /// off by default.
    std::optional<double> residual_tol;
    /// Initial iterate, zero when absent.
    std::optional<Vector> x0;
};

void validate_config(const SolverConfig& config);

struct SolveTrace {
    Vector sq_err;  ///< ‖x^k − x⋆‖² for k = 0..K; empty without x⋆
    Vector sq_res;  ///< ‖b − A·x^k‖² for k = 0..K; empty unless recorded
    Vector x_final;
    std::size_t iterations_run = 0;
    std::optional<std::size_t> stopped_at;
};

/// Called after every iteration with the batch that produced x_after.
using StepObserver = std::function<void(std::size_t k, const SampleBatch& batch, std::span<const double> x_before,
                                        std::span<const double> x_after)>;

/// Relaxed Kaczmarz projection onto row i:
/// x − λ·(A_i·x − b_i)/‖A_i‖²·A_iᵀ.
Vector rk_step(const Matrix& a, std::span<const double> b, std::span<const double> x, std::size_t i, double lambda);

/// Averaged update x − (1/q)·Σ_{i∈τ} w_i·(A_i·x − b_i)/‖A_i‖²·A_iᵀ, summed in
/// batch order.
Vector avg_step(const Matrix& a, std::span<const double> b, std::span<const double> x, const SampleBatch& batch,
                const SamplingScheme& scheme);

/// The diagonal matrix M with M_ii = (1/q)·Σ_{j: τ_j = i} w_i/‖A_i‖², so
/// that one averaged step is e ↦ (I − AᵀMA)e + AᵀM·r⋆.
Matrix sampling_matrix(const SampleBatch& batch, const SamplingScheme& scheme);

/// Runs K averaged steps from x⁰ with batches drawn from `scheme`. Batches
/// are drawn sequentially before dispatch and per-row updates are reduced in
/// batch order; the result does not depend on `config.workers`.
SolveTrace solve(const LinearSystem& system, const SamplingScheme& scheme, const SolverConfig& config,
                 const StepObserver& observer = {});

/// Plain relaxed RK: one row per iteration drawn from the scheme's
/// probabilities, step scaled by `config.lambda`; weights are ignored.
SolveTrace solve_relaxed(const LinearSystem& system, const SamplingScheme& scheme, const SolverConfig& config,
                         const StepObserver& observer = {});

} // namespace rka
