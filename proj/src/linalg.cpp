#include "rka/linalg.hpp"
#include "rka/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rka {

namespace {

void check_shape(std::size_t rows, std::size_t cols)
{
    if (rows == 0 || cols == 0) {
        throw Error(ErrorCode::ShapeMismatch, "matrix dimensions must be positive");
    }
}

void require_same_length(std::span<const double> a, std::span<const double> b, const char* op)
{
    if (a.size() != b.size()) {
        throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": length " + std::to_string(a.size()) +
                                                  " vs " + std::to_string(b.size()));
    }
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols)
{
    check_shape(rows, cols);
    data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries))
{
    check_shape(rows, cols);
    if (data_.size() != rows * cols) {
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(rows * cols) + " entries, got " +
                                                  std::to_string(data_.size()));
    }
    require_finite(data_, "matrix");
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag)
{
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m(i, i) = diag[i];
    }
    require_finite(diag, "diagonal");
    return m;
}

Matrix Matrix::transpose() const
{
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            t(j, i) = (*this)(i, j);
        }
    }
    return t;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    require_same_length(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm_sq(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(norm_sq(v)); }

void require_finite(std::span<const double> v, const char* what)
{
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw Error(ErrorCode::InvalidArgument,
                        std::string(what) + " has a non-finite entry at index " + std::to_string(i));
        }
    }
}

Matrix multiply(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "matrix product inner dimensions differ");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c(i, j) += aik * b(k, j);
            }
        }
    }
    return c;
}

Vector multiply(const Matrix& a, std::span<const double> x)
{
    if (a.cols() != x.size()) {
        throw Error(ErrorCode::ShapeMismatch, "matrix-vector product: A has " + std::to_string(a.cols()) +
                                                  " columns, x has length " + std::to_string(x.size()));
    }
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        y[i] = dot(a.row(i), x);
    }
    return y;
}

Vector multiply_transposed(const Matrix& a, std::span<const double> y)
{
    if (a.rows() != y.size()) {
        throw Error(ErrorCode::ShapeMismatch, "transposed product: A has " + std::to_string(a.rows()) +
                                                  " rows, y has length " + std::to_string(y.size()));
    }
    Vector x(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ai = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            x[j] += y[i] * ai[j];
        }
    }
    return x;
}

Matrix gram(const Matrix& a)
{
    const std::size_t n = a.cols();
    Matrix g(n, n);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto ar = a.row(r);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i; j < n; ++j) {
                g(i, j) += ar[i] * ar[j];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            g(i, j) = g(j, i);
        }
    }
    return g;
}

double frobenius_sq(const Matrix& a) { return norm_sq(a.data()); }

double trace(const Matrix& a)
{
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) {
        t += a(i, i);
    }
    return t;
}

Vector row_norms_sq(const Matrix& a)
{
    Vector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        out[i] = norm_sq(a.row(i));
    }
    return out;
}

std::vector<double> symmetric_eigenvalues(const Matrix& s)
{
    if (s.rows() != s.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "eigenvalues need a square matrix");
    }
    const std::size_t n = s.rows();
    Matrix a = s;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            a(i, j) = a(j, i);
        }
    }

    // For PSD input ‖S‖_F ≤ trace, so this threshold is at least as strict as
    // one relative to the trace.
    const double threshold = 1e-14 * std::sqrt(frobenius_sq(a));
    constexpr int max_sweeps = 100;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                off = std::max(off, std::abs(a(p, q)));
            }
        }
        if (off < threshold || off == 0.0) {
            break;
        }

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;

                const double app = a(p, p);
                const double aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) {
                        continue;
                    }
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = a(p, k) = c * akp - sn * akq;
                    a(k, q) = a(q, k) = sn * akp + c * akq;
                }
            }
        }
    }

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) {
        eig[i] = a(i, i);
    }
    std::sort(eig.begin(), eig.end());
    return eig;
}

double symmetric_sigma_max(const Matrix& s)
{
    const auto eig = symmetric_eigenvalues(s);
    return std::max(std::abs(eig.front()), std::abs(eig.back()));
}

SpectralInfo spectral_extremes(const Matrix& a, double rank_tol)
{
    if (!(rank_tol > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "rank_tol must be positive");
    }
    const auto eig = symmetric_eigenvalues(gram(a));
    const double top = eig.back();
    if (!(top > 0.0) || !(eig.front() > rank_tol * top)) {
        throw Error(ErrorCode::RankDeficient, "smallest eigenvalue of AᵀA is " + std::to_string(eig.front()) +
                                                  " against largest " + std::to_string(top));
    }

    SpectralInfo info;
    info.frob_sq = frobenius_sq(a);
    info.sigma_min_sq = eig.front();
    info.sigma_max_sq = top;
    info.s_min = info.sigma_min_sq / info.frob_sq;
    info.s_max = info.sigma_max_sq / info.frob_sq;
    info.s_all.reserve(eig.size());
    for (double e : eig) {
        info.s_all.push_back(e / info.frob_sq);
    }
    return info;
}

Vector least_squares(const Matrix& a, std::span<const double> b, double rank_tol)
{
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (b.size() != m) {
        throw Error(ErrorCode::ShapeMismatch, "least squares: rhs length " + std::to_string(b.size()) +
                                                  " does not match " + std::to_string(m) + " rows");
    }
    if (m < n) {
        throw Error(ErrorCode::RankDeficient, "least squares needs at least as many rows as columns");
    }
    require_finite(b, "rhs");

    Matrix r = a;
    Vector y(b.begin(), b.end());
    Vector v(m);
    Vector diag(n);

    for (std::size_t k = 0; k < n; ++k) {
        double col_norm_sq = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            col_norm_sq += r(i, k) * r(i, k);
        }
        const double col_norm = std::sqrt(col_norm_sq);
        if (col_norm == 0.0) {
            throw Error(ErrorCode::RankDeficient, "column " + std::to_string(k) + " is dependent");
        }
        const double alpha = -std::copysign(col_norm, r(k, k));
        for (std::size_t i = k; i < m; ++i) {
            v[i] = r(i, k);
        }
        v[k] -= alpha;
        const double v_norm_sq = col_norm_sq - r(k, k) * r(k, k) + v[k] * v[k];

        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) {
                s += v[i] * r(i, j);
            }
            const double f = 2.0 * s / v_norm_sq;
            for (std::size_t i = k; i < m; ++i) {
                r(i, j) -= f * v[i];
            }
        }
        double s = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            s += v[i] * y[i];
        }
        const double f = 2.0 * s / v_norm_sq;
        for (std::size_t i = k; i < m; ++i) {
            y[i] -= f * v[i];
        }
        diag[k] = alpha;
    }

    // |R_kk|² plays the role of an eigenvalue of AᵀA for the rank test.
    double largest = 0.0;
    for (double d : diag) {
        largest = std::max(largest, std::abs(d));
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (diag[k] * diag[k] <= rank_tol * largest * largest) {
            throw Error(ErrorCode::RankDeficient, "R(" + std::to_string(k) + "," + std::to_string(k) +
                                                      ") is negligible");
        }
    }

    Vector x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = y[k];
        for (std::size_t j = k + 1; j < n; ++j) {
            s -= r(k, j) * x[j];
        }
        x[k] = s / r(k, k);
    }
    return x;
}

Vector residual(const Matrix& a, std::span<const double> x, std::span<const double> b)
{
    if (b.size() != a.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "residual: rhs length does not match rows");
    }
    Vector r = multiply(a, x);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = b[i] - r[i];
    }
    return r;
}

double error_sq(std::span<const double> x, std::span<const double> y)
{
    require_same_length(x, y, "error_sq");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

} // namespace rka
