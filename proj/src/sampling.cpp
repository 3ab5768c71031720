#include "rka/sampling.hpp"
#include "rka/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rka {

namespace {

// Neumaier-compensated sum; keeps Σ p_i within a couple of ulps of one even
// for long vectors.
double compensated_sum(std::span<const double> v)
{
    double sum = 0.0;
    double c = 0.0;
    for (double x : v) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    return sum + c;
}

CouplingResult coupling_of(const Vector& probs, const Vector& weights, const Vector& row_norms_sq, double frob_sq)
{
    const std::size_t m = probs.size();
    Vector ratio(m);
    for (std::size_t i = 0; i < m; ++i) {
        ratio[i] = probs[i] * weights[i] * frob_sq / row_norms_sq[i];
    }
    const double mean = compensated_sum(ratio) / static_cast<double>(m);
    double worst = 0.0;
    std::size_t worst_index = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dev = std::abs(ratio[i] - mean);
        if (dev > worst) {
            worst = dev;
            worst_index = i;
        }
    }
    if (mean > 0.0 && worst <= coupling_tol * mean) {
        return CouplingHolds{mean};
    }
    return CouplingViolation{mean > 0.0 ? worst / mean : worst, worst_index};
}

} // namespace

std::string_view scheme_name(SchemeKind kind) noexcept
{
    switch (kind) {
    case SchemeKind::UniformWeightsRowNormProbs: return "uniform-w-rownorm-p";
    case SchemeKind::RowNormWeightsUniformProbs: return "rownorm-w-uniform-p";
    case SchemeKind::UniformWeightsUniformProbs: return "uniform-w-uniform-p";
    }
    return "unknown";
}

std::optional<SchemeKind> parse_scheme(std::string_view name) noexcept
{
    for (auto kind : {SchemeKind::UniformWeightsRowNormProbs, SchemeKind::RowNormWeightsUniformProbs,
                      SchemeKind::UniformWeightsUniformProbs}) {
        if (scheme_name(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

SamplingScheme::SamplingScheme(Vector probs, Vector weights, Vector row_norms_sq)
    : probs_(std::move(probs)), weights_(std::move(weights)), row_norms_sq_(std::move(row_norms_sq))
{
    const std::size_t m = probs_.size();
    if (m == 0 || weights_.size() != m || row_norms_sq_.size() != m) {
        throw Error(ErrorCode::ShapeMismatch, "probabilities, weights and row norms must have equal nonzero length");
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (!(row_norms_sq_[i] > 0.0) || !std::isfinite(row_norms_sq_[i])) {
            throw Error(ErrorCode::ZeroRow, "row " + std::to_string(i) + " has zero norm");
        }
        if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i])) {
            throw Error(ErrorCode::InvalidArgument, "probability " + std::to_string(i) + " is negative");
        }
        if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
            throw Error(ErrorCode::InvalidArgument, "weight " + std::to_string(i) + " is not positive");
        }
    }
    const double total = compensated_sum(probs_);
    if (std::abs(total - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "probabilities sum to " + std::to_string(total));
    }

    frob_sq_ = compensated_sum(row_norms_sq_);
    cumulative_.resize(m);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        acc += probs_[i];
        cumulative_[i] = acc;
    }

    const auto coupling = coupling_of(probs_, weights_, row_norms_sq_, frob_sq_);
    if (const auto* ok = std::get_if<CouplingHolds>(&coupling)) {
        alpha_ = ok->alpha;
    }
}

std::size_t SamplingScheme::index_for(double u) const noexcept
{
    const double target = u * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) {
        // Only reachable through rounding at the top end; take the last row
        // with positive mass.
        std::size_t i = probs_.size() - 1;
        while (i > 0 && probs_[i] == 0.0) {
            --i;
        }
        return i;
    }
    return static_cast<std::size_t>(it - cumulative_.begin());
}

SamplingScheme make_scheme(SchemeKind kind, double alpha, const Matrix& a)
{
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
    }
    Vector norms = row_norms_sq(a);
    for (std::size_t i = 0; i < norms.size(); ++i) {
        if (norms[i] == 0.0) {
            throw Error(ErrorCode::ZeroRow, "row " + std::to_string(i) + " of A is zero");
        }
    }
    const std::size_t m = a.rows();
    const double frob = compensated_sum(norms);
    const double md = static_cast<double>(m);

    Vector probs(m);
    Vector weights(m);
    for (std::size_t i = 0; i < m; ++i) {
        switch (kind) {
        case SchemeKind::UniformWeightsRowNormProbs:
            probs[i] = norms[i] / frob;
            weights[i] = alpha;
            break;
        case SchemeKind::RowNormWeightsUniformProbs:
            probs[i] = 1.0 / md;
            weights[i] = alpha * md * norms[i] / frob;
            break;
        case SchemeKind::UniformWeightsUniformProbs:
            probs[i] = 1.0 / md;
            weights[i] = alpha;
            break;
        }
    }
    return SamplingScheme(std::move(probs), std::move(weights), std::move(norms));
}

CouplingResult check_coupling(const SamplingScheme& scheme)
{
    return coupling_of(scheme.probs(), scheme.weights(), scheme.row_norms_sq(), scheme.frob_sq());
}

void draw_batch_into(const SamplingScheme& scheme, std::size_t q, Rng& rng, SampleBatch& batch)
{
    if (q == 0) {
        throw Error(ErrorCode::InvalidArgument, "batch size must be at least 1");
    }
    batch.indices.resize(q);
    for (std::size_t j = 0; j < q; ++j) {
        batch.indices[j] = scheme.index_for(rng.uniform());
    }
}

SampleBatch draw_batch(const SamplingScheme& scheme, std::size_t q, Rng& rng)
{
    SampleBatch batch;
    draw_batch_into(scheme, q, rng, batch);
    return batch;
}

} // namespace rka
