#include "rka/theory.hpp"
#include "rka/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

namespace rka::theory {

namespace {

void check_alpha_q(double alpha, double q)
{
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorCode::DomainError, "alpha must be a nonnegative finite number");
    }
    if (!(q >= 1.0) || !std::isfinite(q)) {
        throw Error(ErrorCode::DomainError, "q must be at least 1");
    }
}

void check_sigma(double sigma, const char* name)
{
    if (!(sigma > 0.0 && sigma <= 1.0)) {
        throw Error(ErrorCode::DomainError, std::string(name) + " must lie in (0, 1], got " + std::to_string(sigma));
    }
}

void check_extremes(double s_min, double s_max)
{
    check_sigma(s_min, "s_min");
    check_sigma(s_max, "s_max");
    if (s_min > s_max) {
        throw Error(ErrorCode::DomainError, "s_min exceeds s_max");
    }
}

} // namespace

Matrix gram_normalized(const Matrix& a)
{
    spectral_extremes(a);
    Matrix g = gram(a);
    const double f = frobenius_sq(a);
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
            g(i, j) /= f;
        }
    }
    return g;
}

double rate_general(const SpectralInfo& spectrum, double alpha, double q)
{
    check_alpha_q(alpha, q);
    double worst = 0.0;
    for (double s : spectrum.s_all) {
        const double one_minus = 1.0 - alpha * s;
        worst = std::max(worst, std::abs(one_minus * one_minus - alpha * alpha / q * s * s));
    }
    return worst;
}

double rate_general(const Matrix& a, double alpha, double q) { return rate_general(spectral_extremes(a), alpha, q); }

double p_poly(double sigma, double alpha, double q)
{
    check_sigma(sigma, "sigma");
    check_alpha_q(alpha, q);
    // 1 − 2ασ + α²(σ/q + (1 − 1/q)σ²), nested.
    return 1.0 - alpha * sigma * (2.0 - alpha * (1.0 / q + (1.0 - 1.0 / q) * sigma));
}

double rate_uniform(double s_min, double s_max, double alpha, double q)
{
    check_extremes(s_min, s_max);
    return std::max(p_poly(s_min, alpha, q), p_poly(s_max, alpha, q));
}

double rate_uniform(const SpectralInfo& spectrum, double alpha, double q)
{
    return rate_uniform(spectrum.s_min, spectrum.s_max, alpha, q);
}

BoundReport horizon_uniform(const SpectralInfo& spectrum, double alpha, double q, double r_star_norm_sq)
{
    if (!(r_star_norm_sq >= 0.0)) {
        throw Error(ErrorCode::DomainError, "‖r⋆‖² must be nonnegative");
    }
    BoundReport report;
    report.rate = rate_uniform(spectrum, alpha, q);
    report.horizon_step = alpha * alpha * r_star_norm_sq / (q * spectrum.frob_sq);
    if (report.rate < 1.0) {
        report.horizon_limit = report.horizon_step / (1.0 - report.rate);
    }
    return report;
}

double iterate_bound(const BoundReport& report, std::size_t k, double e0_sq)
{
    const double rk = std::pow(report.rate, static_cast<double>(k));
    double geometric = 0.0;
    if (report.rate == 1.0) {
        geometric = static_cast<double>(k);
    } else {
        geometric = (1.0 - rk) / (1.0 - report.rate);
    }
    return rk * e0_sq + report.horizon_step * geometric;
}

double rate_consistent_general(const Matrix& a, const SamplingScheme& scheme, double alpha, double q)
{
    check_alpha_q(alpha, q);
    if (scheme.rows() != a.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "scheme and matrix row counts differ");
    }
    const auto coupling = check_coupling(scheme);
    if (const auto* bad = std::get_if<CouplingViolation>(&coupling)) {
        throw Error(ErrorCode::CouplingViolated, "probability/weight coupling fails at row " +
                                                     std::to_string(bad->index) + " (relative deviation " +
                                                     std::to_string(bad->max_rel_deviation) + ")");
    }

    const std::size_t n = a.cols();
    const Matrix g = gram_normalized(a);
    const double f = frobenius_sq(a);

    // AᵀWA / ‖A‖_F²
    Matrix awa(n, n);
    const auto& w = scheme.weights();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto ar = a.row(r);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                awa(i, j) += w[r] * ar[i] * ar[j];
            }
        }
    }

    Matrix i_minus = Matrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            i_minus(i, j) -= alpha * g(i, j);
        }
    }
    const Matrix sq = multiply(i_minus, i_minus);
    const Matrix g2 = multiply(g, g);
    Matrix total(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            total(i, j) = sq(i, j) + alpha / q * awa(i, j) / f - alpha * alpha / q * g2(i, j);
        }
    }
    return symmetric_sigma_max(total);
}

std::pair<Matrix, Matrix> moments_mk(const Matrix& a, const SamplingScheme& scheme, std::size_t q)
{
    if (q < 1) {
        throw Error(ErrorCode::InvalidArgument, "q must be at least 1");
    }
    if (scheme.rows() != a.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "scheme and matrix row counts differ");
    }
    const std::size_t m = a.rows();
    const auto& p = scheme.probs();
    const auto& w = scheme.weights();
    const auto& nsq = scheme.row_norms_sq();
    const double qd = static_cast<double>(q);

    // PWD⁻² is diagonal with entries p_i·w_i/‖A_i‖².
    Vector pwd(m);
    Vector pw2d(m);
    for (std::size_t i = 0; i < m; ++i) {
        pwd[i] = p[i] * w[i] / nsq[i];
        pw2d[i] = p[i] * w[i] * w[i] / nsq[i];
    }
    Matrix first = Matrix::diagonal(pwd);

    Matrix second(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double aat = dot(a.row(i), a.row(j));
            second(i, j) = (1.0 - 1.0 / qd) * pwd[i] * aat * pwd[j];
        }
        second(i, i) += pw2d[i] / qd;
    }
    return {std::move(first), std::move(second)};
}

double optimal_alpha(double s_min, double s_max, double q)
{
    check_extremes(s_min, s_max);
    check_alpha_q(1.0, q);
    if (1.0 - (q - 1.0) * (s_max - s_min) >= 0.0) {
        return q / (1.0 + (q - 1.0) * s_min);
    }
    return 2.0 * q / (1.0 + (q - 1.0) * (s_min + s_max));
}

double rt_alpha(double s_max, double q)
{
    check_sigma(s_max, "s_max");
    check_alpha_q(1.0, q);
    return q / (1.0 + (q - 1.0) * s_max);
}

} // namespace rka::theory
