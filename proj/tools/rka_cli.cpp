// Command-line front end. Everything numerical goes through the C API in
// librka; this file only parses flags and formats output.

#include "rka/rka.h"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

// Thrown when a library call fails; carries the status name for stderr.
struct CallFailed {
    rka_status status;
    std::string message;
};

void check(rka_status s)
{
    if (s != RKA_OK) {
        throw CallFailed{s, rka_last_error()};
    }
}

struct MatrixDeleter {
    void operator()(rka_matrix* m) const { rka_matrix_destroy(m); }
};
struct SchemeDeleter {
    void operator()(rka_scheme* s) const { rka_scheme_destroy(s); }
};
struct TraceDeleter {
    void operator()(rka_trace* t) const { rka_trace_destroy(t); }
};
using MatrixPtr = std::unique_ptr<rka_matrix, MatrixDeleter>;
using SchemePtr = std::unique_ptr<rka_scheme, SchemeDeleter>;
using TracePtr = std::unique_ptr<rka_trace, TraceDeleter>;

MatrixPtr load_matrix(const std::string& path)
{
    rka_matrix* m = nullptr;
    check(rka_matrix_load_csv(path.c_str(), &m));
    return MatrixPtr(m);
}

std::vector<double> load_vector(const std::string& path)
{
    auto m = load_matrix(path);
    const auto rows = rka_matrix_rows(m.get());
    const auto cols = rka_matrix_cols(m.get());
    if (rows != 1 && cols != 1) {
        throw CallFailed{RKA_ERR_SHAPE_MISMATCH, path + ": expected a single row or column"};
    }
    std::vector<double> v(rows * cols);
    check(rka_matrix_copy_data(m.get(), v.data(), v.size()));
    return v;
}

SchemePtr make_scheme(const rka_matrix* a, rka_scheme_kind kind, double alpha)
{
    rka_scheme* s = nullptr;
    check(rka_scheme_create(a, kind, alpha, &s));
    return SchemePtr(s);
}

// Shortest text that reads back to the same double.
std::string fmt(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string fixed2(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// ‖r⋆‖² of the least-squares problem.
double least_squares_residual_sq(const rka_matrix* a, const std::vector<double>& b)
{
    const auto m = rka_matrix_rows(a);
    const auto n = rka_matrix_cols(a);
    std::vector<double> x(n);
    check(rka_least_squares(a, b.data(), b.size(), x.data(), x.size()));
    std::vector<double> data(m * n);
    check(rka_matrix_copy_data(a, data.data(), data.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double ax = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            ax += data[i * n + j] * x[j];
        }
        s += (b[i] - ax) * (b[i] - ax);
    }
    return s;
}

struct SchemeOption {
    std::string name = "uniform-w-rownorm-p";
    rka_scheme_kind kind() const
    {
        rka_scheme_kind k{};
        check(rka_scheme_kind_parse(name.c_str(), &k));
        return k;
    }
};

const std::vector<std::string> scheme_names = {"uniform-w-rownorm-p", "rownorm-w-uniform-p", "uniform-w-uniform-p"};

// solve ----------------------------------------------------------------------

struct SolveArgs {
    std::string matrix;
    std::string rhs;
    std::string x_star;
    std::string trace;
    std::string out;
    std::string method = "avg";
    std::size_t threads = 1;
    std::size_t iters = 100;
    double alpha = 1.0;
    double lambda = 1.0;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::optional<double> residual_tol;
    SchemeOption scheme;
};

int run_solve(const SolveArgs& args)
{
    auto a = load_matrix(args.matrix);
    const auto b = load_vector(args.rhs);
    const auto n = rka_matrix_cols(a.get());
    const auto kind = args.scheme.kind();
    auto scheme = make_scheme(a.get(), kind, args.alpha);

    int holds = 0;
    double dev = 0.0;
    std::size_t index = 0;
    check(rka_scheme_check_coupling(scheme.get(), &holds, nullptr, &dev, &index));
    if (!holds && args.method == "avg") {
        std::cerr << "warning: scheme " << args.scheme.name
                  << " violates the probability/weight coupling (row " << index << ", relative deviation "
                  << fmt(dev) << "); iterates approach a weighted least-squares solution\n";
    }

    std::vector<double> x_star;
    if (!args.x_star.empty()) {
        x_star = load_vector(args.x_star);
    } else if (rka_matrix_rows(a.get()) >= n) {
        x_star.resize(n);
        if (rka_least_squares(a.get(), b.data(), b.size(), x_star.data(), n) != RKA_OK) {
            std::cerr << "note: least-squares reference unavailable (" << rka_last_error()
                      << "); error column omitted\n";
            x_star.clear();
        }
    }

    rka_solver_config cfg;
    rka_solver_config_init(&cfg);
    cfg.threads = args.threads;
    cfg.iterations = args.iters;
    cfg.lambda = args.lambda;
    cfg.seed = args.seed;
    cfg.workers = args.workers;
    cfg.relaxed = args.method == "rk" ? 1 : 0;
    cfg.residual_tol = args.residual_tol.value_or(-1.0);

    rka_trace* raw = nullptr;
    check(rka_solve(a.get(), b.data(), b.size(), x_star.empty() ? nullptr : x_star.data(), x_star.size(),
                    scheme.get(), &cfg, &raw));
    TracePtr trace(raw);

    if (!args.trace.empty()) {
        const std::string provenance = "seed=" + std::to_string(args.seed) +
                                       " m=" + std::to_string(rka_matrix_rows(a.get())) + " n=" + std::to_string(n) +
                                       " q=" + std::to_string(args.threads) + " K=" + std::to_string(args.iters) +
                                       " alpha=" + fmt(args.alpha) + " scheme=" + args.scheme.name +
                                       " method=" + args.method;
        check(rka_trace_save_csv(trace.get(), args.trace.c_str(), provenance.c_str()));
    }

    std::vector<double> x(rka_trace_dimension(trace.get()));
    check(rka_trace_final_iterate(trace.get(), x.data(), x.size()));
    if (!args.out.empty()) {
        check(rka_vector_save_csv(x.data(), x.size(), args.out.c_str()));
    }

    const auto len = rka_trace_length(trace.get());
    std::vector<double> res(len);
    check(rka_trace_sq_res(trace.get(), res.data(), res.size()));
    std::cout << "iterations=" << (len ? len - 1 : 0) << '\n';
    std::cout << "residual_norm=" << fmt(std::sqrt(res.back())) << '\n';
    if (rka_trace_has_error(trace.get())) {
        std::vector<double> err(len);
        check(rka_trace_sq_err(trace.get(), err.data(), err.size()));
        std::cout << "sq_err=" << fmt(err.back()) << '\n';
    }
    std::size_t stop = 0;
    if (rka_trace_stopped_early(trace.get(), &stop)) {
        std::cout << "stopped_at=" << stop << '\n';
    }
    if (args.out.empty()) {
        std::cout << "x=";
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::cout << (i ? "," : "") << fmt(x[i]);
        }
        std::cout << '\n';
    }
    return exit_ok;
}

// bounds ---------------------------------------------------------------------

struct BoundsArgs {
    std::string matrix;
    std::string rhs;
    double alpha = 1.0;
    std::size_t threads = 1;
    SchemeOption scheme;
};

int run_bounds(const BoundsArgs& args)
{
    auto a = load_matrix(args.matrix);
    const auto kind = args.scheme.kind();
    auto scheme = make_scheme(a.get(), kind, args.alpha);

    int holds = 0;
    double coupling_alpha = 0.0;
    double dev = 0.0;
    std::size_t index = 0;
    check(rka_scheme_check_coupling(scheme.get(), &holds, &coupling_alpha, &dev, &index));
    if (!holds) {
        throw CallFailed{RKA_ERR_COUPLING_VIOLATED, "scheme " + args.scheme.name +
                                                        " violates the probability/weight coupling at row " +
                                                        std::to_string(index) + "; no bound applies"};
    }

    rka_spectral_info spectrum{};
    check(rka_spectral_extremes(a.get(), 0.0, &spectrum));

    double r_sq = 0.0;
    if (!args.rhs.empty()) {
        r_sq = least_squares_residual_sq(a.get(), load_vector(args.rhs));
    }
    const double q = static_cast<double>(args.threads);

    // Uniform probabilities with equal row norms coincide with row-norm
    // probabilities, so scheme (c) lands here whenever it is coupled.
    const bool uniform_weights = kind != RKA_SCHEME_ROWNORM_W_UNIFORM_P;
    double rate_general = 0.0;
    check(rka_rate_general(a.get(), args.alpha, q, &rate_general));

    if (uniform_weights) {
        rka_bound_report report{};
        check(rka_horizon_uniform(&spectrum, args.alpha, q, r_sq, &report));
        std::cout << "rate=" << fmt(report.rate) << '\n';
        std::cout << "horizon_step=" << fmt(report.horizon_step) << '\n';
        std::cout << "horizon_limit=" << (report.has_limit ? fmt(report.horizon_limit) : std::string("none")) << '\n';
    } else {
        double rate = 0.0;
        check(rka_rate_consistent_general(a.get(), scheme.get(), args.alpha, q, &rate));
        std::cout << "rate=" << fmt(rate) << '\n';
        if (r_sq <= 1e-24 * spectrum.frob_sq) {
            std::cout << "horizon_step=0\n";
            std::cout << "horizon_limit=" << (rate < 1.0 ? std::string("0") : std::string("none")) << '\n';
        } else {
            std::cerr << "note: non-uniform weights on an inconsistent system have no a-priori horizon\n";
            std::cout << "horizon_step=none\n";
            std::cout << "horizon_limit=none\n";
        }
    }
    std::cout << "rate_general=" << fmt(rate_general) << '\n';
    std::cout << "s_min=" << fmt(spectrum.s_min) << '\n';
    std::cout << "s_max=" << fmt(spectrum.s_max) << '\n';
    return exit_ok;
}

// alpha ----------------------------------------------------------------------

struct AlphaArgs {
    std::optional<double> smin;
    std::optional<double> smax;
    std::string matrix;
    std::size_t threads = 1;
};

int run_alpha(const AlphaArgs& args)
{
    double s_min = 0.0;
    double s_max = 0.0;
    if (!args.matrix.empty()) {
        auto a = load_matrix(args.matrix);
        rka_spectral_info spectrum{};
        check(rka_spectral_extremes(a.get(), 0.0, &spectrum));
        s_min = spectrum.s_min;
        s_max = spectrum.s_max;
    } else if (args.smin && args.smax) {
        s_min = *args.smin;
        s_max = *args.smax;
    } else {
        throw CLI::ValidationError("--smin/--smax", "give both --smin and --smax, or --matrix");
    }
    const double q = static_cast<double>(args.threads);
    double a_star = 0.0;
    double a_rt = 0.0;
    check(rka_optimal_alpha(s_min, s_max, q, &a_star));
    check(rka_rt_alpha(s_max, q, &a_rt));
    std::cout << "alpha_star=" << fixed2(a_star) << " alpha_rt=" << fixed2(a_rt) << '\n';
    return exit_ok;
}

// experiment -----------------------------------------------------------------

struct ExperimentArgs {
    std::string figure;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> iters;
    std::optional<std::size_t> rows;
    std::optional<std::size_t> cols;
    std::optional<double> alpha;
    std::vector<std::size_t> threads;
    std::vector<double> alphas;
    std::optional<std::string> scheme;
    unsigned workers = 1;
    unsigned solver_workers = 1;
};

int run_experiment(const ExperimentArgs& args)
{
    rka_figure figure{};
    check(rka_figure_parse(args.figure.c_str(), &figure));
    rka_figure_params p{};
    check(rka_figure_default_params(figure, &p));
    if (args.seed) p.seed = *args.seed;
    if (args.trials) p.trials = *args.trials;
    if (args.iters) p.iterations = *args.iters;
    if (args.rows) p.rows = *args.rows;
    if (args.cols) p.cols = *args.cols;
    if (args.alpha) p.alpha = *args.alpha;
    if (args.scheme) {
        check(rka_scheme_kind_parse(args.scheme->c_str(), &p.scheme));
    }
    if (!args.threads.empty()) {
        p.threads = args.threads.data();
        p.threads_len = args.threads.size();
    }
    if (!args.alphas.empty()) {
        p.alphas = args.alphas.data();
        p.alphas_len = args.alphas.size();
    }
    p.trial_workers = args.workers;
    p.solver_workers = args.solver_workers;
    check(rka_run_figure(figure, &p, args.out.c_str()));
    std::cout << "wrote " << rka_figure_name(figure) << " results to " << args.out << '\n';
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Randomized Kaczmarz with averaging: solver, bounds and experiments"};
    app.require_subcommand(1);

    SolveArgs solve;
    auto* solve_cmd = app.add_subcommand("solve", "Run the averaged (or plain relaxed) Kaczmarz solver");
    solve_cmd->add_option("--matrix", solve.matrix, "CSV file with A")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--rhs", solve.rhs, "CSV file with b")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--x-star", solve.x_star, "CSV reference solution (default: least squares)")
        ->check(CLI::ExistingFile);
    solve_cmd->add_option("--threads,-q", solve.threads, "rows averaged per iteration")
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
    solve_cmd->add_option("--iters,-K", solve.iters, "iteration count")->check(CLI::NonNegativeNumber);
    solve_cmd->add_option("--alpha", solve.alpha, "relaxation alpha")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--lambda", solve.lambda, "relaxation for --method rk")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--method", solve.method, "avg (averaged) or rk (plain relaxed)")
        ->check(CLI::IsMember({"avg", "rk"}));
    solve_cmd->add_option("--scheme", solve.scheme.name, "sampling scheme")->check(CLI::IsMember(scheme_names));
    solve_cmd->add_option("--seed", solve.seed, "random seed");
    solve_cmd->add_option("--workers", solve.workers, "worker threads per iteration")
        ->check(CLI::Range(1u, 1024u));
    solve_cmd->add_option("--residual-tol", solve.residual_tol, "stop once ||b - Ax|| drops to this value")
        ->check(CLI::NonNegativeNumber);
    solve_cmd->add_option("--trace", solve.trace, "write per-iteration CSV here");
    solve_cmd->add_option("--out", solve.out, "write the final iterate here");

    BoundsArgs bounds;
    auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate convergence-rate and horizon bounds");
    bounds_cmd->add_option("--matrix", bounds.matrix, "CSV file with A")->required()->check(CLI::ExistingFile);
    bounds_cmd->add_option("--rhs", bounds.rhs, "CSV file with b (omit for a consistent system)")
        ->check(CLI::ExistingFile);
    bounds_cmd->add_option("--alpha", bounds.alpha, "relaxation alpha")->check(CLI::PositiveNumber);
    bounds_cmd->add_option("--threads,-q", bounds.threads, "rows averaged per iteration")
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
    bounds_cmd->add_option("--scheme", bounds.scheme.name, "sampling scheme")->check(CLI::IsMember(scheme_names));

    AlphaArgs alpha;
    auto* alpha_cmd = app.add_subcommand("alpha", "Suggested relaxation parameters");
    alpha_cmd->add_option("--smin", alpha.smin, "sigma_min^2(A)/||A||_F^2")->check(CLI::PositiveNumber);
    alpha_cmd->add_option("--smax", alpha.smax, "sigma_max^2(A)/||A||_F^2")->check(CLI::PositiveNumber);
    alpha_cmd->add_option("--matrix", alpha.matrix, "compute s_min/s_max from this CSV matrix")
        ->check(CLI::ExistingFile);
    alpha_cmd->add_option("--threads,-q", alpha.threads, "rows averaged per iteration")
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));

    ExperimentArgs experiment;
    auto* exp_cmd = app.add_subcommand("experiment", "Regenerate Gaussian experiments as CSV");
    exp_cmd->add_option("figure", experiment.figure, "fig-threads | fig-alpha | fig-alpha-sweep | fig-bounds")
        ->required()
        ->check(CLI::IsMember({"fig-threads", "fig-alpha", "fig-alpha-sweep", "fig-bounds"}));
    exp_cmd->add_option("--out", experiment.out, "output directory")->required();
    exp_cmd->add_option("--seed", experiment.seed, "base seed");
    exp_cmd->add_option("--trials", experiment.trials, "independent trials")
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
    exp_cmd->add_option("--iters,-K", experiment.iters, "iterations per trial")->check(CLI::NonNegativeNumber);
    exp_cmd->add_option("--rows", experiment.rows, "rows m")->check(CLI::PositiveNumber);
    exp_cmd->add_option("--cols", experiment.cols, "columns n")->check(CLI::PositiveNumber);
    exp_cmd->add_option("--alpha", experiment.alpha, "relaxation (fig-threads)")->check(CLI::PositiveNumber);
    exp_cmd->add_option("--threads,-q", experiment.threads, "thread counts q")
        ->delimiter(',')
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
    exp_cmd->add_option("--alphas", experiment.alphas, "alpha list or grid")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    exp_cmd->add_option("--scheme", experiment.scheme, "sampling scheme")->check(CLI::IsMember(scheme_names));
    exp_cmd->add_option("--workers", experiment.workers, "threads running trials")->check(CLI::Range(1u, 1024u));
    exp_cmd->add_option("--solver-workers", experiment.solver_workers, "threads inside each solve")
        ->check(CLI::Range(1u, 1024u));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        if (*solve_cmd) return run_solve(solve);
        if (*bounds_cmd) return run_bounds(bounds);
        if (*alpha_cmd) return run_alpha(alpha);
        if (*exp_cmd) return run_experiment(experiment);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const CallFailed& e) {
        std::cerr << rka_status_name(e.status) << ": " << e.message << '\n';
        return exit_failure;
    }
    return exit_usage;
}
