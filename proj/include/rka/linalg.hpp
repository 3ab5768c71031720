#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rka {

using Vector = std::vector<double>;

/// Dense real matrix stored row-major. Construction rejects empty shapes and
/// non-finite entries.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

    Matrix transpose() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

/// Normalized spectral quantities of a full-rank matrix A. The `s_*` values are
/// eigenvalues of AᵀA divided by ‖A‖_F², so they lie in (0, 1] and sum to one.
struct SpectralInfo {
    double frob_sq = 0.0;
    double sigma_min_sq = 0.0;
    double sigma_max_sq = 0.0;
    double s_min = 0.0;
    double s_max = 0.0;
    /// All eigenvalues of AᵀA/‖A‖_F², ascending.
    std::vector<double> s_all;
};

inline constexpr double default_rank_tol = 1e-10;

// Vector helpers.
double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> v);
double norm(std::span<const double> v);
void require_finite(std::span<const double> v, const char* what);

Matrix multiply(const Matrix& a, const Matrix& b);
Vector multiply(const Matrix& a, std::span<const double> x);
Vector multiply_transposed(const Matrix& a, std::span<const double> y);
/// AᵀA.
Matrix gram(const Matrix& a);
double frobenius_sq(const Matrix& a);
double trace(const Matrix& a);

Vector row_norms_sq(const Matrix& a);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotation, ascending.
/// Only the upper triangle is read.
std::vector<double> symmetric_eigenvalues(const Matrix& s);

/// Largest singular value of a symmetric matrix, i.e. max |λ|.
double symmetric_sigma_max(const Matrix& s);

/// Eigen-decomposition of AᵀA. Throws RankDeficient when an eigenvalue is not
/// above `rank_tol` times the largest one.
SpectralInfo spectral_extremes(const Matrix& a, double rank_tol = default_rank_tol);

/// Least-squares solution by Householder QR. Requires rows ≥ cols and full
/// column rank.
Vector least_squares(const Matrix& a, std::span<const double> b, double rank_tol = default_rank_tol);

/// b − A·x.
Vector residual(const Matrix& a, std::span<const double> x, std::span<const double> b);

/// ‖x − y‖².
double error_sq(std::span<const double> x, std::span<const double> y);

} // namespace rka
