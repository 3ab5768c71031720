#include "rka/error.hpp"
#include "rka/experiments.hpp"
#include "rka/solver.hpp"
#include "rka/theory.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rka;
using namespace rka::experiments;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

bool bitwise_equal(std::span<const double> a, std::span<const double> b)
{
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::filesystem::path scratch(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("rka_test_experiments_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("generated systems satisfy their identities")
{
    Rng rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const bool consistent = rep % 2 == 0;
        const LinearSystem sys = gen_system(30 + rep % 20, 1 + rep % 9, consistent, rng);
        REQUIRE(sys.x_star.has_value());
        REQUIRE(sys.r_star.has_value());
        CHECK(std::abs(norm(*sys.x_star) - 1.0) <= 1e-12);
        const double rn = norm(*sys.r_star);
        if (consistent) {
            CHECK(rn == 0.0);
            CHECK(sys.b == multiply(sys.a, *sys.x_star));
        } else {
            CHECK(std::abs(rn - 1.0) <= 1e-12);
            CHECK(norm(multiply_transposed(sys.a, *sys.r_star)) <= 1e-10 * std::sqrt(frobenius_sq(sys.a)));
            CHECK(std::abs(norm(residual(sys.a, *sys.x_star, sys.b)) - 1.0) <= 1e-10);
            CHECK(std::sqrt(error_sq(least_squares(sys.a, sys.b), *sys.x_star)) <= 1e-8);
        }
        const Vector fit = multiply(sys.a, *sys.x_star);
        double mismatch = 0.0;
        for (std::size_t i = 0; i < fit.size(); ++i) {
            mismatch += std::pow(sys.b[i] - fit[i] - (*sys.r_star)[i], 2);
        }
        CHECK(std::sqrt(mismatch) <= 1e-12 * std::max(1.0, norm(sys.b)));
    }
}

TEST_CASE("gen_system rejects bad shapes")
{
    Rng rng(1);
    CHECK_THROWS_AS(gen_system(3, 3, true, rng), Error);
    CHECK_THROWS_AS(gen_system(3, 0, true, rng), Error);
}

TEST_CASE("nearest-rank percentiles")
{
    std::vector<double> v;
    for (int i = 100; i >= 1; --i) {
        v.push_back(i);
    }
    CHECK(percentile_nearest_rank(v, 5.0) == 5.0);
    CHECK(percentile_nearest_rank(v, 95.0) == 95.0);
    CHECK(percentile_nearest_rank(v, 100.0) == 100.0);
    CHECK(percentile_nearest_rank({3.0, 1.0, 2.0}, 5.0) == 1.0);
    CHECK(percentile_nearest_rank({3.0, 1.0, 2.0}, 95.0) == 3.0);
    CHECK(percentile_nearest_rank({7.0}, 50.0) == 7.0);
    CHECK_THROWS_AS(percentile_nearest_rank({}, 5.0), Error);
    CHECK_THROWS_AS(percentile_nearest_rank({1.0}, 0.0), Error);
}

TEST_CASE("a single trial reports its own trace")
{
    Rng rng(2);
    const LinearSystem sys = gen_system(40, 5, false, rng);
    const TrialStats stats = run_trials(sys, SchemeKind::UniformWeightsRowNormProbs, 1.0, 4, 30, 1, 17);
    const SamplingScheme s = make_scheme(SchemeKind::UniformWeightsRowNormProbs, 1.0, sys.a);
    SolverConfig cfg;
    cfg.threads = 4;
    cfg.iterations = 30;
    cfg.seed = 17;
    const SolveTrace t = solve(sys, s, cfg);
    CHECK(bitwise_equal(stats.mean_sq_err, t.sq_err));
    CHECK(bitwise_equal(stats.p05, t.sq_err));
    CHECK(bitwise_equal(stats.p95, t.sq_err));
    CHECK(stats.trials == 1);
    CHECK(stats.seed == 17);
    CHECK(stats.iterations == 30);
}

TEST_CASE("run_trials is reproducible and independent of worker counts")
{
    Rng rng(3);
    const LinearSystem sys = gen_system(50, 6, false, rng);
    const TrialStats a = run_trials(sys, SchemeKind::RowNormWeightsUniformProbs, 1.2, 7, 40, 20, 5);
    const TrialStats b = run_trials(sys, SchemeKind::RowNormWeightsUniformProbs, 1.2, 7, 40, 20, 5, {3, 2});
    CHECK(bitwise_equal(a.mean_sq_err, b.mean_sq_err));
    CHECK(bitwise_equal(a.p05, b.p05));
    CHECK(bitwise_equal(a.p95, b.p95));
    for (std::size_t k = 0; k < a.p05.size(); ++k) {
        CHECK(a.p05[k] <= a.p95[k]);
    }
    const TrialStats c = run_trials(sys, SchemeKind::RowNormWeightsUniformProbs, 1.2, 7, 40, 20, 6);
    CHECK_FALSE(bitwise_equal(a.mean_sq_err, c.mean_sq_err));
}

TEST_CASE("plateau averages the trailing fraction")
{
    TrialStats s;
    s.mean_sq_err = {10, 8, 1, 3};
    CHECK(plateau(s) == 2.0);
    CHECK(plateau(s, 0.25) == 3.0);
    CHECK(plateau(s, 1.0) == 5.5);
}

TEST_CASE("convergence horizon shrinks with q and stays under its limit")
{
    Rng rng(mix_seed(1, 0));
    const LinearSystem sys = gen_system(100, 10, false, rng);
    const SpectralInfo spec = spectral_extremes(sys.a);
    std::vector<double> plateaus;
    for (std::size_t q : {1u, 10u, 100u}) {
        const TrialStats st = run_trials(sys, SchemeKind::UniformWeightsRowNormProbs, 1.0, q, 500, 100, 1);
        const double p = plateau(st);
        const auto report = theory::horizon_uniform(spec, 1.0, static_cast<double>(q), 1.0);
        REQUIRE(report.horizon_limit.has_value());
        CHECK(p <= *report.horizon_limit);
        plateaus.push_back(p);
    }
    CHECK(plateaus[0] / plateaus[1] >= 5.0);
    CHECK(plateaus[0] / plateaus[1] <= 20.0);
    CHECK(plateaus[1] / plateaus[2] >= 5.0);
    CHECK(plateaus[1] / plateaus[2] <= 20.0);
}

TEST_CASE("coupling-violating scheme keeps a horizon that q does not remove")
{
    Rng rng(mix_seed(1, 0));
    const LinearSystem sys = gen_system(100, 10, false, rng);
    const double a100 = plateau(run_trials(sys, SchemeKind::UniformWeightsRowNormProbs, 1.0, 100, 500, 20, 1));
    const double c10 = plateau(run_trials(sys, SchemeKind::UniformWeightsUniformProbs, 1.0, 10, 500, 20, 1));
    const double c100 = plateau(run_trials(sys, SchemeKind::UniformWeightsUniformProbs, 1.0, 100, 500, 20, 1));
    MESSAGE("scheme (a) q=100: " << a100 << ", scheme (c) q=10: " << c10 << ", q=100: " << c100);
    CHECK(c100 > 3.0 * a100);
    CHECK(c10 / c100 < 5.0);

    // Fixed point of scheme (c): least squares with rows scaled to unit norm.
    Matrix scaled = sys.a;
    Vector rhs = sys.b;
    for (std::size_t i = 0; i < scaled.rows(); ++i) {
        const double inv = 1.0 / norm(sys.a.row(i));
        for (auto& v : scaled.row(i)) {
            v *= inv;
        }
        rhs[i] *= inv;
    }
    const double offset = error_sq(least_squares(scaled, rhs), *sys.x_star);
    MESSAGE("limit-point offset: " << offset);
    CHECK(offset > 3.0 * a100);
    CHECK(c100 >= offset);
}

TEST_CASE("alpha sweep at q=1 is minimized near one")
{
    Rng rng(mix_seed(3, 0));
    const LinearSystem sys = gen_system(100, 10, true, rng);
    const auto grid = default_alpha_grid();
    const auto rows = alpha_sweep(sys, SchemeKind::UniformWeightsRowNormProbs, {1}, grid, 50, 100, 3);
    CHECK(rows.size() == grid.size());
    CHECK(std::abs(empirical_argmin(rows, 1) - 1.0) <= 0.25);
    for (const auto& r : rows) {
        CHECK(r.alpha_star == 1.0);
        CHECK(r.alpha_rt == 1.0);
        CHECK(r.p05 <= r.p95);
    }
}

TEST_CASE("alpha sweep error grows past the stability limit")
{
    Rng rng(mix_seed(4, 0));
    const LinearSystem sys = gen_system(100, 10, true, rng);
    const SpectralInfo spec = spectral_extremes(sys.a);
    const std::size_t q = 10;
    const double limit = 2.0 * q / (1.0 + (q - 1.0) * (spec.s_min + spec.s_max));
    const auto rows = alpha_sweep(sys, SchemeKind::UniformWeightsRowNormProbs, {q}, default_alpha_grid(), 50, 100, 4);
    int tail_cells = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i - 1].alpha > limit) {
            CHECK(rows[i].mean_sq_err > rows[i - 1].mean_sq_err);
            ++tail_cells;
        }
    }
    CHECK(tail_cells > 5);
    CHECK(std::abs(rows[0].alpha_star - theory::optimal_alpha(spec.s_min, spec.s_max, 10.0)) == 0.0);
    CHECK(std::abs(rows[0].alpha_rt - theory::rt_alpha(spec.s_max, 10.0)) == 0.0);
}

TEST_CASE("alpha sweep argument checks")
{
    Rng rng(5);
    const LinearSystem sys = gen_system(20, 3, true, rng);
    CHECK_THROWS_AS(alpha_sweep(sys, SchemeKind::UniformWeightsRowNormProbs, {1}, {1.0, 1.0}, 5, 2, 0), Error);
    CHECK_THROWS_AS(alpha_sweep(sys, SchemeKind::UniformWeightsRowNormProbs, {1}, {1.0}, 0, 2, 0), Error);
    CHECK_THROWS_AS(empirical_argmin({}, 3), Error);
    LinearSystem no_star{sys.a, sys.b, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(run_trials(no_star, SchemeKind::UniformWeightsRowNormProbs, 1.0, 1, 5, 2, 0), Error);
}

TEST_CASE("bound sweep dominates the empirical error")
{
    Rng rng(mix_seed(6, 0));
    const LinearSystem sys = gen_system(100, 10, true, rng);
    const auto grid = default_alpha_grid(0.5, 12.0);
    const auto b10 = bound_sweep(sys, 10, grid, 50, 100, 6);
    const auto b100 = bound_sweep(sys, 100, grid, 50, 100, 6);
    REQUIRE(b10.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(b10[i].empirical_mean <= 1.05 * b10[i].bound);
        CHECK(b100[i].empirical_mean <= 1.05 * b100[i].bound);
        if (grid[i] <= 1.0) {
            CHECK(b100[i].bound <= b10[i].bound);
        }
    }

    const auto tiny = bound_sweep(sys, 10, {1e-6}, 50, 20, 6);
    CHECK(std::abs(tiny[0].bound - 1.0) < 1e-4);
    CHECK(std::abs(tiny[0].empirical_mean - 1.0) < 1e-4);
}

TEST_CASE("default grid and figure parameters")
{
    const auto grid = default_alpha_grid();
    REQUIRE(grid.size() == 48);
    CHECK(grid.front() == 0.25);
    CHECK(grid.back() == 12.0);
    for (auto f : {Figure::Threads, Figure::Alpha, Figure::AlphaSweep, Figure::Bounds}) {
        CHECK(parse_figure(figure_name(f)) == f);
    }
    CHECK_FALSE(parse_figure("fig-nope").has_value());
    CHECK(default_params(Figure::Threads).threads == std::vector<std::size_t>{1, 10, 100});
    CHECK(default_params(Figure::Threads).iterations == 500);
    CHECK(default_params(Figure::AlphaSweep).iterations == 50);
    CHECK(default_params(Figure::Bounds).alphas == grid);
}

TEST_CASE("tables round-trip through the reader")
{
    Rng rng(7);
    const LinearSystem sys = gen_system(20, 3, false, rng);
    const TrialStats st = run_trials(sys, SchemeKind::UniformWeightsRowNormProbs, 1.0, 2, 10, 5, 0);
    const csv::Table t = trace_table(st, "seed=0 m=20");
    CHECK(t.columns == std::vector<std::string>{"iteration", "mean_sq_err", "p05", "p95"});
    CHECK(t.rows.size() == 11);
    std::ostringstream out;
    csv::write_table(out, t);
    CHECK(csv::parse_table(out.str()) == t);
    CHECK(out.str().rfind("# seed=0 m=20", 0) == 0);

    const auto sw = sweep_table(alpha_sweep(sys, SchemeKind::UniformWeightsRowNormProbs, {2}, {0.5, 1.0}, 5, 3, 0), "x");
    CHECK(sw.columns ==
          std::vector<std::string>{"q", "alpha", "mean_sq_err", "p05", "p95", "alpha_star", "alpha_rt"});
    const auto bt = bound_table(bound_sweep(sys, 2, {0.5}, 5, 3, 0), "x");
    CHECK(bt.columns == std::vector<std::string>{"alpha", "bound", "empirical_mean"});
}

TEST_CASE("figure runs write reproducible files")
{
    FigureParams p = default_params(Figure::Threads);
    p.trials = 4;
    p.iterations = 20;
    p.rows = 30;
    p.cols = 4;
    p.par.solver_workers = 2;
    const auto d1 = scratch("a");
    const auto d2 = scratch("b");
    const auto w1 = run_figure(Figure::Threads, p, d1);
    const auto w2 = run_figure(Figure::Threads, p, d2);
    REQUIRE(w1.size() == 4);
    CHECK(w1[0].filename() == "trace_q1.csv");
    CHECK(w1[2].filename() == "trace_q100.csv");
    CHECK(w1[3].filename() == "manifest.json");
    for (std::size_t i = 0; i < w1.size(); ++i) {
        CHECK(slurp(w1[i]) == slurp(w2[i]));
    }
    const csv::Table t = csv::read_table(w1[0]);
    CHECK(t.rows.size() == 21);
    REQUIRE(t.comments.size() == 1);
    CHECK(t.comments[0].find("seed=1 m=30 n=4 trials=4 K=20") != std::string::npos);

    FigureParams s = default_params(Figure::AlphaSweep);
    s.trials = 3;
    s.iterations = 5;
    s.rows = 30;
    s.cols = 4;
    s.threads = {2};
    s.alphas = {0.5, 1.0};
    const auto ws = run_figure(Figure::AlphaSweep, s, d1);
    CHECK(csv::read_table(ws[0]).rows.size() == 2);

    FigureParams b = default_params(Figure::Bounds);
    b.trials = 3;
    b.iterations = 5;
    b.rows = 30;
    b.cols = 4;
    b.threads = {2, 3};
    b.alphas = {1.0};
    const auto wb = run_figure(Figure::Bounds, b, d1);
    CHECK(wb.size() == 3);
    CHECK(wb[1].filename() == "bounds_q3.csv");

    FigureParams a = default_params(Figure::Alpha);
    a.trials = 2;
    a.iterations = 3;
    a.rows = 30;
    a.cols = 4;
    a.alphas = {0.5};
    const auto wa = run_figure(Figure::Alpha, a, d1);
    CHECK(wa[0].filename() == "trace_q10_alpha0.5.csv");

    FigureParams bad = p;
    bad.threads = {0};
    CHECK_THROWS_AS(run_figure(Figure::Threads, bad, d1), Error);
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
}
