#include "rka/solver.hpp"
#include "rka/error.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <string>
#include <thread>

namespace rka {

namespace {

void check_step_inputs(const Matrix& a, std::span<const double> b, std::span<const double> x)
{
    if (b.size() != a.rows() || x.size() != a.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "step: A is " + std::to_string(a.rows()) + "x" +
                                                  std::to_string(a.cols()) + ", b has " + std::to_string(b.size()) +
                                                  ", x has " + std::to_string(x.size()));
    }
}

void check_scheme_matches(const Matrix& a, const SamplingScheme& scheme)
{
    if (scheme.rows() != a.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "scheme built for " + std::to_string(scheme.rows()) +
                                                  " rows, matrix has " + std::to_string(a.rows()));
    }
}

void check_batch(const SampleBatch& batch, std::size_t m)
{
    if (batch.indices.empty()) {
        throw Error(ErrorCode::InvalidArgument, "empty batch");
    }
    for (auto i : batch.indices) {
        if (i >= m) {
            throw Error(ErrorCode::InvalidArgument, "batch index " + std::to_string(i) + " out of range");
        }
    }
}

// w_i·(A_i·x − b_i)/‖A_i‖² for batch slots [begin, end).
void row_coefficients(const Matrix& a, std::span<const double> b, std::span<const double> x,
                      const SampleBatch& batch, const SamplingScheme& scheme, std::size_t begin, std::size_t end,
                      std::span<double> coef)
{
    const auto& w = scheme.weights();
    const auto& nsq = scheme.row_norms_sq();
    for (std::size_t j = begin; j < end; ++j) {
        const std::size_t i = batch.indices[j];
        double ax = 0.0;
        const auto ai = a.row(i);
        for (std::size_t c = 0; c < ai.size(); ++c) {
            ax += ai[c] * x[c];
        }
        coef[j] = w[i] * (ax - b[i]) / nsq[i];
    }
}

// Fixed-order reduction; identical for any partition of the coefficient work.
void apply_average(const Matrix& a, const SampleBatch& batch, std::span<const double> coef, std::span<double> acc,
                   std::span<double> x)
{
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < batch.indices.size(); ++j) {
        const auto ai = a.row(batch.indices[j]);
        for (std::size_t c = 0; c < acc.size(); ++c) {
            acc[c] += coef[j] * ai[c];
        }
    }
    const double q = static_cast<double>(batch.indices.size());
    for (std::size_t c = 0; c < x.size(); ++c) {
        x[c] -= acc[c] / q;
    }
}

// Persistent workers that split the per-row coefficient work of one iteration.
class CoefficientPool {
public:
    explicit CoefficientPool(unsigned workers)
        : count_(std::max(1u, workers)), start_(count_), done_(count_)
    {
        for (unsigned t = 1; t < count_; ++t) {
            threads_.emplace_back([this, t] { worker_loop(t); });
        }
    }

    CoefficientPool(const CoefficientPool&) = delete;
    CoefficientPool& operator=(const CoefficientPool&) = delete;

    ~CoefficientPool()
    {
        if (!threads_.empty()) {
            stop_.store(true, std::memory_order_relaxed);
            start_.arrive_and_wait();
            for (auto& t : threads_) {
                t.join();
            }
        }
    }

    void compute(const Matrix& a, std::span<const double> b, std::span<const double> x, const SampleBatch& batch,
                 const SamplingScheme& scheme, std::span<double> coef)
    {
        if (threads_.empty()) {
            row_coefficients(a, b, x, batch, scheme, 0, batch.indices.size(), coef);
            return;
        }
        job_ = Job{&a, b, x, &batch, &scheme, coef};
        start_.arrive_and_wait();
        run_share(0);
        done_.arrive_and_wait();
    }

private:
    struct Job {
        const Matrix* a = nullptr;
        std::span<const double> b;
        std::span<const double> x;
        const SampleBatch* batch = nullptr;
        const SamplingScheme* scheme = nullptr;
        std::span<double> coef;
    };

    void run_share(unsigned t)
    {
        const std::size_t n = job_.batch->indices.size();
        const std::size_t begin = n * t / count_;
        const std::size_t end = n * (t + 1) / count_;
        row_coefficients(*job_.a, job_.b, job_.x, *job_.batch, *job_.scheme, begin, end, job_.coef);
    }

    void worker_loop(unsigned t)
    {
        while (true) {
            start_.arrive_and_wait();
            if (stop_.load(std::memory_order_relaxed)) {
                return;
            }
            run_share(t);
            done_.arrive_and_wait();
        }
    }

    unsigned count_;
    std::barrier<> start_;
    std::barrier<> done_;
    std::atomic<bool> stop_{false};
    Job job_;
    std::vector<std::thread> threads_;
};

void record(SolveTrace& trace, const LinearSystem& system, const SolverConfig& config, std::span<const double> x,
            double res_sq)
{
    if (!config.record_trace) {
        return;
    }
    if (system.x_star) {
        trace.sq_err.push_back(error_sq(x, *system.x_star));
    }
    if (config.record_residual) {
        trace.sq_res.push_back(res_sq);
    }
}

template <typename Step>
SolveTrace run_iterations(const LinearSystem& system, const SamplingScheme& scheme, const SolverConfig& config,
                          std::size_t batch_size, const StepObserver& observer, Step&& step)
{
    validate_config(config);
    validate_system(system);
    check_scheme_matches(system.a, scheme);
    const auto& a = system.a;
    const auto& b = system.b;

    Vector x = config.x0.value_or(Vector(a.cols(), 0.0));
    if (x.size() != a.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "initial iterate has the wrong length");
    }
    require_finite(x, "initial iterate");

    const bool need_residual = config.residual_tol.has_value() || (config.record_trace && config.record_residual);
    auto residual_sq = [&](std::span<const double> v) { return need_residual ? norm_sq(residual(a, v, b)) : 0.0; };
    const double tol_sq = config.residual_tol ? *config.residual_tol * *config.residual_tol : 0.0;

    SolveTrace trace;
    if (config.record_trace) {
        trace.sq_err.reserve(config.iterations + 1);
        trace.sq_res.reserve(config.iterations + 1);
    }
    double res_sq = residual_sq(x);
    record(trace, system, config, x, res_sq);

    Rng rng(config.seed);
    SampleBatch batch;
    Vector x_before;
    for (std::size_t k = 0; k < config.iterations; ++k) {
        if (config.residual_tol && res_sq <= tol_sq) {
            trace.stopped_at = k;
            break;
        }
        draw_batch_into(scheme, batch_size, rng, batch);
        if (observer) {
            x_before = x;
        }
        step(batch, x);
        ++trace.iterations_run;
        res_sq = residual_sq(x);
        record(trace, system, config, x, res_sq);
        if (observer) {
            observer(k, batch, x_before, x);
        }
    }
    if (!trace.stopped_at && config.residual_tol && res_sq <= tol_sq) {
        trace.stopped_at = trace.iterations_run;
    }
    trace.x_final = std::move(x);
    return trace;
}

} // namespace

void validate_config(const SolverConfig& config)
{
    if (config.threads < 1) {
        throw Error(ErrorCode::InvalidArgument, "thread count q must be at least 1");
    }
    if (!(config.lambda > 0.0) || !std::isfinite(config.lambda)) {
        throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
    }
    if (config.residual_tol && !(*config.residual_tol >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "residual tolerance must be nonnegative");
    }
}

Vector rk_step(const Matrix& a, std::span<const double> b, std::span<const double> x, std::size_t i, double lambda)
{
    check_step_inputs(a, b, x);
    if (i >= a.rows()) {
        throw Error(ErrorCode::InvalidArgument, "row index out of range");
    }
    const auto ai = a.row(i);
    const double nsq = norm_sq(ai);
    if (nsq == 0.0) {
        throw Error(ErrorCode::ZeroRow, "row " + std::to_string(i) + " is zero");
    }
    double ax = 0.0;
    for (std::size_t c = 0; c < ai.size(); ++c) {
        ax += ai[c] * x[c];
    }
    const double coef = lambda * (ax - b[i]) / nsq;
    Vector out(x.begin(), x.end());
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] -= coef * ai[c];
    }
    return out;
}

Vector avg_step(const Matrix& a, std::span<const double> b, std::span<const double> x, const SampleBatch& batch,
                const SamplingScheme& scheme)
{
    check_step_inputs(a, b, x);
    check_scheme_matches(a, scheme);
    check_batch(batch, a.rows());
    Vector coef(batch.indices.size());
    row_coefficients(a, b, x, batch, scheme, 0, coef.size(), coef);
    Vector acc(a.cols());
    Vector out(x.begin(), x.end());
    apply_average(a, batch, coef, acc, out);
    return out;
}

Matrix sampling_matrix(const SampleBatch& batch, const SamplingScheme& scheme)
{
    check_batch(batch, scheme.rows());
    const std::size_t m = scheme.rows();
    Vector diag(m, 0.0);
    const double q = static_cast<double>(batch.indices.size());
    for (auto i : batch.indices) {
        diag[i] += scheme.weights()[i] / scheme.row_norms_sq()[i];
    }
    for (auto& d : diag) {
        d /= q;
    }
    return Matrix::diagonal(diag);
}

SolveTrace solve(const LinearSystem& system, const SamplingScheme& scheme, const SolverConfig& config,
                 const StepObserver& observer)
{
    const std::size_t q = config.threads;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(std::max(1u, config.workers), std::max<std::size_t>(q, 1)));
    CoefficientPool pool(workers);
    Vector coef(q);
    Vector acc(system.a.cols());
    return run_iterations(system, scheme, config, q, observer, [&](const SampleBatch& batch, Vector& x) {
        pool.compute(system.a, system.b, x, batch, scheme, coef);
        apply_average(system.a, batch, coef, acc, x);
    });
}

SolveTrace solve_relaxed(const LinearSystem& system, const SamplingScheme& scheme, const SolverConfig& config,
                         const StepObserver& observer)
{
    return run_iterations(system, scheme, config, 1, observer, [&](const SampleBatch& batch, Vector& x) {
        x = rk_step(system.a, system.b, x, batch.indices.front(), config.lambda);
    });
}

} // namespace rka
