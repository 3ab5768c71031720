#include "rka/experiments.hpp"
#include "rka/error.hpp"
#include "rka/linalg.hpp"
#include "rka/solver.hpp"
#include "rka/theory.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace rka::experiments {

namespace {

Vector gaussian(std::size_t len, Rng& rng)
{
    Vector v(len);
    for (auto& x : v) {
        x = rng.normal();
    }
    return v;
}

void normalize(Vector& v)
{
    const double nv = norm(v);
    for (auto& x : v) {
        x /= nv;
    }
}

// Runs fn(t) for t in [0, count) on up to `workers` threads. Each index is
// handled exactly once; callers write into preassigned slots.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn)
{
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), count));
    if (threads <= 1) {
        for (std::size_t t = 0; t < count; ++t) {
            fn(t);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto body = [&] {
        try {
            for (std::size_t t = next++; t < count && !failed; t = next++) {
                fn(t);
            }
        } catch (...) {
            if (!failed.exchange(true)) {
                failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) {
        pool.emplace_back(body);
    }
    body();
    for (auto& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

// Final ‖e^K‖² of each trial.
std::vector<double> final_errors(const LinearSystem& system, const SamplingScheme& scheme, std::size_t q,
                                 std::size_t k, std::size_t trials, std::uint64_t base_seed, Parallelism par)
{
    std::vector<double> out(trials);
    parallel_for(trials, par.trial_workers, [&](std::size_t t) {
        SolverConfig cfg;
        cfg.threads = q;
        cfg.iterations = k;
        cfg.seed = base_seed + t;
        cfg.record_trace = false;
        cfg.workers = par.solver_workers;
        const auto trace = solve(system, scheme, cfg);
        out[t] = error_sq(trace.x_final, *system.x_star);
    });
    return out;
}

void require_x_star(const LinearSystem& system)
{
    if (!system.x_star) {
        throw Error(ErrorCode::InvalidArgument, "experiment needs a system with a known solution");
    }
}

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

} // namespace

LinearSystem gen_system(std::size_t m, std::size_t n, bool consistent, Rng& rng)
{
    if (n < 1 || m <= n) {
        throw Error(ErrorCode::InvalidArgument, "need m > n >= 1");
    }
    constexpr int attempts = 4;
    for (int attempt = 0;; ++attempt) {
        try {
            Matrix a(m, n, gaussian(m * n, rng));
            spectral_extremes(a);

            Vector x_star = gaussian(n, rng);
            normalize(x_star);

            Vector r_star(m, 0.0);
            if (!consistent) {
                const Vector g = gaussian(m, rng);
                r_star = residual(a, least_squares(a, g), g);
                normalize(r_star);
            }
            Vector b = multiply(a, x_star);
            for (std::size_t i = 0; i < m; ++i) {
                b[i] += r_star[i];
            }
            LinearSystem system{std::move(a), std::move(b), std::move(x_star), std::move(r_star)};
            validate_system(system);
            return system;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RankDeficient || attempt + 1 >= attempts) {
                throw;
            }
        }
    }
}

double percentile_nearest_rank(std::vector<double> samples, double p)
{
    if (samples.empty() || !(p > 0.0 && p <= 100.0)) {
        throw Error(ErrorCode::InvalidArgument, "percentile needs samples and p in (0, 100]");
    }
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, samples.size());
    return samples[rank - 1];
}

TrialStats run_trials(const LinearSystem& system, SchemeKind kind, double alpha, std::size_t q, std::size_t k,
                      std::size_t trials, std::uint64_t base_seed, Parallelism par)
{
    if (trials < 1) {
        throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
    }
    require_x_star(system);
    const auto scheme = make_scheme(kind, alpha, system.a);

    std::vector<Vector> traces(trials);
    parallel_for(trials, par.trial_workers, [&](std::size_t t) {
        SolverConfig cfg;
        cfg.threads = q;
        cfg.iterations = k;
        cfg.seed = base_seed + t;
        cfg.record_residual = false;
        cfg.workers = par.solver_workers;
        traces[t] = solve(system, scheme, cfg).sq_err;
    });

    TrialStats stats;
    stats.iterations = k;
    stats.trials = trials;
    stats.seed = base_seed;
    stats.mean_sq_err.resize(k + 1);
    stats.p05.resize(k + 1);
    stats.p95.resize(k + 1);
    std::vector<double> column(trials);
    for (std::size_t it = 0; it <= k; ++it) {
        for (std::size_t t = 0; t < trials; ++t) {
            column[t] = traces[t][it];
        }
        stats.mean_sq_err[it] = mean_of(column);
        stats.p05[it] = percentile_nearest_rank(column, 5.0);
        stats.p95[it] = percentile_nearest_rank(column, 95.0);
    }
    return stats;
}

double plateau(const TrialStats& stats, double fraction)
{
    const std::size_t len = stats.mean_sq_err.size();
    const auto tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(len))));
    double s = 0.0;
    for (std::size_t i = len - tail; i < len; ++i) {
        s += stats.mean_sq_err[i];
    }
    return s / static_cast<double>(tail);
}

std::vector<SweepRow> alpha_sweep(const LinearSystem& system, SchemeKind kind, const std::vector<std::size_t>& q_list,
                                  const std::vector<double>& alpha_grid, std::size_t k, std::size_t trials,
                                  std::uint64_t base_seed, Parallelism par)
{
    if (k < 1 || trials < 1) {
        throw Error(ErrorCode::InvalidArgument, "alpha sweep needs K >= 1 and trials >= 1");
    }
    for (std::size_t i = 1; i < alpha_grid.size(); ++i) {
        if (!(alpha_grid[i] > alpha_grid[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "alpha grid must be strictly increasing");
        }
    }
    require_x_star(system);
    const auto spectrum = spectral_extremes(system.a);

    std::vector<SweepRow> rows;
    for (auto q : q_list) {
        const double qd = static_cast<double>(q);
        const double a_star = theory::optimal_alpha(spectrum.s_min, spectrum.s_max, qd);
        const double a_rt = theory::rt_alpha(spectrum.s_max, qd);
        for (double alpha : alpha_grid) {
            const auto scheme = make_scheme(kind, alpha, system.a);
            const auto errs = final_errors(system, scheme, q, k, trials, base_seed, par);
            rows.push_back({q, alpha, mean_of(errs), percentile_nearest_rank(errs, 5.0),
                            percentile_nearest_rank(errs, 95.0), a_star, a_rt});
        }
    }
    return rows;
}

double empirical_argmin(const std::vector<SweepRow>& rows, std::size_t q)
{
    double best = std::numeric_limits<double>::infinity();
    double arg = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows) {
        if (r.q == q && r.mean_sq_err < best) {
            best = r.mean_sq_err;
            arg = r.alpha;
        }
    }
    if (std::isnan(arg)) {
        throw Error(ErrorCode::InvalidArgument, "no sweep rows for q=" + std::to_string(q));
    }
    return arg;
}

std::vector<BoundRow> bound_sweep(const LinearSystem& system, std::size_t q, const std::vector<double>& alpha_grid,
                                  std::size_t k, std::size_t trials, std::uint64_t base_seed, Parallelism par)
{
    require_x_star(system);
    const auto spectrum = spectral_extremes(system.a);
    const double r_sq = system.r_star ? norm_sq(*system.r_star) : 0.0;
    const double e0_sq = norm_sq(*system.x_star);

    std::vector<BoundRow> rows;
    for (double alpha : alpha_grid) {
        const auto report = theory::horizon_uniform(spectrum, alpha, static_cast<double>(q), r_sq);
        const auto scheme = make_scheme(SchemeKind::UniformWeightsRowNormProbs, alpha, system.a);
        const auto errs = final_errors(system, scheme, q, k, trials, base_seed, par);
        rows.push_back({alpha, theory::iterate_bound(report, k, e0_sq), mean_of(errs)});
    }
    return rows;
}

std::vector<double> default_alpha_grid(double step, double stop)
{
    std::vector<double> grid;
    for (std::size_t i = 1; step * static_cast<double>(i) <= stop + 1e-12; ++i) {
        grid.push_back(step * static_cast<double>(i));
    }
    return grid;
}

csv::Table trace_table(const TrialStats& stats, const std::string& provenance)
{
    csv::Table t;
    t.comments.push_back(" " + provenance);
    t.columns = {"iteration", "mean_sq_err", "p05", "p95"};
    for (std::size_t i = 0; i < stats.mean_sq_err.size(); ++i) {
        t.rows.push_back({static_cast<double>(i), stats.mean_sq_err[i], stats.p05[i], stats.p95[i]});
    }
    return t;
}

csv::Table sweep_table(const std::vector<SweepRow>& rows, const std::string& provenance)
{
    csv::Table t;
    t.comments.push_back(" " + provenance);
    t.columns = {"q", "alpha", "mean_sq_err", "p05", "p95", "alpha_star", "alpha_rt"};
    for (const auto& r : rows) {
        t.rows.push_back({static_cast<double>(r.q), r.alpha, r.mean_sq_err, r.p05, r.p95, r.alpha_star, r.alpha_rt});
    }
    return t;
}

csv::Table bound_table(const std::vector<BoundRow>& rows, const std::string& provenance)
{
    csv::Table t;
    t.comments.push_back(" " + provenance);
    t.columns = {"alpha", "bound", "empirical_mean"};
    for (const auto& r : rows) {
        t.rows.push_back({r.alpha, r.bound, r.empirical_mean});
    }
    return t;
}

std::string_view figure_name(Figure f) noexcept
{
    switch (f) {
    case Figure::Threads: return "fig-threads";
    case Figure::Alpha: return "fig-alpha";
    case Figure::AlphaSweep: return "fig-alpha-sweep";
    case Figure::Bounds: return "fig-bounds";
    }
    return "unknown";
}

std::optional<Figure> parse_figure(std::string_view name) noexcept
{
    for (auto f : {Figure::Threads, Figure::Alpha, Figure::AlphaSweep, Figure::Bounds}) {
        if (figure_name(f) == name) {
            return f;
        }
    }
    return std::nullopt;
}

FigureParams default_params(Figure f)
{
    FigureParams p;
    switch (f) {
    case Figure::Threads:
        p.iterations = 500;
        p.threads = {1, 10, 100};
        p.alphas = {1.0};
        break;
    case Figure::Alpha:
        p.iterations = 500;
        p.threads = {10};
        p.alphas = {0.25, 0.5, 1.0, 2.0, 4.0};
        break;
    case Figure::AlphaSweep:
        p.iterations = 50;
        p.threads = {5, 10, 25, 100};
        p.alphas = default_alpha_grid();
        break;
    case Figure::Bounds:
        p.iterations = 50;
        p.threads = {10, 100};
        p.alphas = default_alpha_grid();
        break;
    }
    p.alpha = p.alphas.front();
    return p;
}

std::vector<std::filesystem::path> run_figure(Figure f, const FigureParams& params,
                                              const std::filesystem::path& out_dir)
{
    if (params.trials < 1 || params.threads.empty() || params.alphas.empty()) {
        throw Error(ErrorCode::InvalidArgument, "figure needs trials >= 1 and nonempty thread and alpha lists");
    }
    for (auto q : params.threads) {
        if (q < 1) {
            throw Error(ErrorCode::InvalidArgument, "thread counts must be at least 1");
        }
    }
    for (double a : params.alphas) {
        if (!(a > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "alpha values must be positive");
        }
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
    }

    const bool consistent = f == Figure::AlphaSweep || f == Figure::Bounds;
    Rng system_rng(mix_seed(params.seed, 0));
    const auto system = gen_system(params.rows, params.cols, consistent, system_rng);
    const SchemeKind kind = f == Figure::Bounds ? SchemeKind::UniformWeightsRowNormProbs : params.scheme;

    auto provenance = [&](const std::string& extra) {
        std::ostringstream s;
        s << "seed=" << params.seed << " m=" << params.rows << " n=" << params.cols << " trials=" << params.trials
          << " K=" << params.iterations << " scheme=" << scheme_name(kind) << " consistent=" << (consistent ? 1 : 0)
          << " figure=" << figure_name(f) << extra;
        return s.str();
    };

    std::vector<std::filesystem::path> written;
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    auto emit = [&](const std::string& name, const csv::Table& table) {
        const auto path = out_dir / name;
        csv::write_table(path, table);
        written.push_back(path);
        files.push_back(name);
    };

    switch (f) {
    case Figure::Threads:
        for (auto q : params.threads) {
            const auto stats = run_trials(system, kind, params.alpha, q, params.iterations, params.trials, params.seed,
                                          params.par);
            emit("trace_q" + std::to_string(q) + ".csv",
                 trace_table(stats, provenance(" q=" + std::to_string(q) + " alpha=" + csv::format_double(params.alpha))));
        }
        break;
    case Figure::Alpha:
        for (auto q : params.threads) {
            for (double alpha : params.alphas) {
                const auto stats =
                    run_trials(system, kind, alpha, q, params.iterations, params.trials, params.seed, params.par);
                const auto a = csv::format_double(alpha);
                emit("trace_q" + std::to_string(q) + "_alpha" + a + ".csv",
                     trace_table(stats, provenance(" q=" + std::to_string(q) + " alpha=" + a)));
            }
        }
        break;
    case Figure::AlphaSweep: {
        const auto rows = alpha_sweep(system, kind, params.threads, params.alphas, params.iterations, params.trials,
                                      params.seed, params.par);
        emit("sweep.csv", sweep_table(rows, provenance("")));
        break;
    }
    case Figure::Bounds:
        for (auto q : params.threads) {
            const auto rows =
                bound_sweep(system, q, params.alphas, params.iterations, params.trials, params.seed, params.par);
            emit("bounds_q" + std::to_string(q) + ".csv", bound_table(rows, provenance(" q=" + std::to_string(q))));
        }
        break;
    }

    const auto spectrum = spectral_extremes(system.a);
    nlohmann::ordered_json manifest;
    manifest["figure"] = figure_name(f);
    manifest["seed"] = params.seed;
    manifest["m"] = params.rows;
    manifest["n"] = params.cols;
    manifest["trials"] = params.trials;
    manifest["iterations"] = params.iterations;
    manifest["scheme"] = scheme_name(kind);
    manifest["consistent"] = consistent;
    manifest["threads"] = params.threads;
    manifest["alphas"] = params.alphas;
    manifest["s_min"] = spectrum.s_min;
    manifest["s_max"] = spectrum.s_max;
    manifest["frob_sq"] = spectrum.frob_sq;
    manifest["files"] = files;

    const auto manifest_path = out_dir / "manifest.json";
    std::ofstream out(manifest_path, std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + manifest_path.string());
    }
    written.push_back(manifest_path);
    return written;
}

} // namespace rka::experiments
