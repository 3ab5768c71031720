#include "rka/rka.h"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch()
{
    const std::filesystem::path dir = RKA_TEST_TMPDIR;
    std::filesystem::create_directories(dir);
    return dir;
}

rka_matrix* make(size_t rows, size_t cols, std::vector<double> data)
{
    rka_matrix* m = nullptr;
    REQUIRE(rka_matrix_create(rows, cols, data.data(), &m) == RKA_OK);
    return m;
}

} // namespace

TEST_CASE("status and name helpers")
{
    CHECK(std::string(rka_status_name(RKA_OK)) == "Ok");
    CHECK(std::string(rka_status_name(RKA_ERR_RANK_DEFICIENT)) == "RankDeficient");
    CHECK(std::string(rka_status_name(RKA_ERR_COUPLING_VIOLATED)) == "CouplingViolated");
    CHECK(std::string(rka_scheme_kind_name(RKA_SCHEME_ROWNORM_W_UNIFORM_P)) == "rownorm-w-uniform-p");
    rka_scheme_kind k{};
    CHECK(rka_scheme_kind_parse("uniform-w-uniform-p", &k) == RKA_OK);
    CHECK(k == RKA_SCHEME_UNIFORM_W_UNIFORM_P);
    CHECK(rka_scheme_kind_parse("nope", &k) == RKA_ERR_INVALID_ARGUMENT);
    CHECK(std::string(rka_last_error()).find("nope") != std::string::npos);
    rka_figure f{};
    CHECK(rka_figure_parse("fig-bounds", &f) == RKA_OK);
    CHECK(f == RKA_FIG_BOUNDS);
    CHECK(std::string(rka_figure_name(RKA_FIG_ALPHA_SWEEP)) == "fig-alpha-sweep");
    CHECK(std::string(rka_last_error()).empty());
}

TEST_CASE("matrix handles")
{
    rka_matrix* m = make(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(rka_matrix_rows(m) == 2);
    CHECK(rka_matrix_cols(m) == 3);
    std::vector<double> out(6);
    CHECK(rka_matrix_copy_data(m, out.data(), out.size()) == RKA_OK);
    CHECK(out == std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(rka_matrix_copy_data(m, out.data(), 5) == RKA_ERR_SHAPE_MISMATCH);

    const auto path = (scratch() / "m.csv").string();
    CHECK(rka_matrix_save_csv(m, path.c_str()) == RKA_OK);
    rka_matrix* back = nullptr;
    CHECK(rka_matrix_load_csv(path.c_str(), &back) == RKA_OK);
    std::vector<double> out2(6);
    rka_matrix_copy_data(back, out2.data(), 6);
    CHECK(out2 == out);
    rka_matrix_destroy(back);
    rka_matrix_destroy(m);
    rka_matrix_destroy(nullptr);

    rka_matrix* bad = nullptr;
    const double nan = std::nan("");
    CHECK(rka_matrix_create(1, 1, &nan, &bad) == RKA_ERR_INVALID_ARGUMENT);
    CHECK(bad == nullptr);
    CHECK(rka_matrix_create(0, 1, &nan, &bad) == RKA_ERR_SHAPE_MISMATCH);
    CHECK(rka_matrix_load_csv((scratch() / "absent.csv").string().c_str(), &bad) == RKA_ERR_IO);
    {
        std::ofstream(scratch() / "broken.csv") << "1,2\n3,oops\n";
    }
    CHECK(rka_matrix_load_csv((scratch() / "broken.csv").string().c_str(), &bad) == RKA_ERR_PARSE);
    CHECK(std::string(rka_last_error()).find("line 2") != std::string::npos);
}

TEST_CASE("linear algebra entry points")
{
    rka_matrix* d = make(2, 2, {1, 0, 0, 2});
    double norms[2];
    CHECK(rka_row_norms_sq(d, norms, 2) == RKA_OK);
    CHECK(norms[0] == 1.0);
    CHECK(norms[1] == 4.0);

    rka_spectral_info info{};
    CHECK(rka_spectral_extremes(d, 0.0, &info) == RKA_OK);
    CHECK(info.frob_sq == 5.0);
    CHECK(std::abs(info.s_min - 0.2) < 1e-15);
    CHECK(std::abs(info.s_max - 0.8) < 1e-15);

    const double b[2] = {3, 8};
    double x[2];
    CHECK(rka_least_squares(d, b, 2, x, 2) == RKA_OK);
    CHECK(std::abs(x[0] - 3.0) < 1e-15);
    CHECK(std::abs(x[1] - 4.0) < 1e-15);
    CHECK(rka_least_squares(d, b, 1, x, 2) == RKA_ERR_SHAPE_MISMATCH);

    rka_matrix* singular = make(2, 2, {1, 2, 2, 4});
    CHECK(rka_spectral_extremes(singular, -1.0, &info) == RKA_ERR_RANK_DEFICIENT);
    CHECK(std::string(rka_last_error()).rfind("RankDeficient", 0) == 0);
    rka_matrix_destroy(singular);
    rka_matrix_destroy(d);
}

TEST_CASE("schemes and coupling")
{
    rka_matrix* d = make(2, 2, {1, 0, 0, 2});
    rka_scheme* a = nullptr;
    CHECK(rka_scheme_create(d, RKA_SCHEME_UNIFORM_W_ROWNORM_P, 1.5, &a) == RKA_OK);
    int holds = 0;
    double alpha = 0;
    double dev = -1;
    size_t idx = 99;
    CHECK(rka_scheme_check_coupling(a, &holds, &alpha, &dev, &idx) == RKA_OK);
    CHECK(holds == 1);
    CHECK(std::abs(alpha - 1.5) < 1e-15);

    rka_scheme* c = nullptr;
    CHECK(rka_scheme_create(d, RKA_SCHEME_UNIFORM_W_UNIFORM_P, 1.0, &c) == RKA_OK);
    CHECK(rka_scheme_check_coupling(c, &holds, &alpha, &dev, &idx) == RKA_OK);
    CHECK(holds == 0);
    CHECK(std::abs(dev - 0.6) < 1e-12);

    double rate = 0;
    CHECK(rka_rate_consistent_general(d, c, 1.0, 1.0, &rate) == RKA_ERR_COUPLING_VIOLATED);
    CHECK(rka_rate_consistent_general(d, a, 1.5, 2.0, &rate) == RKA_OK);
    double uniform = 0;
    CHECK(rka_rate_uniform(0.2, 0.8, 1.5, 2.0, &uniform) == RKA_OK);
    CHECK(std::abs(rate - uniform) < 1e-12);

    rka_matrix* zero = make(2, 2, {3, 4, 0, 0});
    rka_scheme* z = nullptr;
    CHECK(rka_scheme_create(zero, RKA_SCHEME_UNIFORM_W_ROWNORM_P, 1.0, &z) == RKA_ERR_ZERO_ROW);
    CHECK(rka_scheme_create(d, RKA_SCHEME_UNIFORM_W_ROWNORM_P, -1.0, &z) == RKA_ERR_INVALID_ARGUMENT);
    rka_matrix_destroy(zero);
    rka_scheme_destroy(a);
    rka_scheme_destroy(c);
    rka_matrix_destroy(d);
}

TEST_CASE("solve through the C interface")
{
    rka_matrix* id = make(2, 2, {1, 0, 0, 1});
    rka_scheme* s = nullptr;
    REQUIRE(rka_scheme_create(id, RKA_SCHEME_UNIFORM_W_ROWNORM_P, 1.0, &s) == RKA_OK);
    const double b[2] = {1, 1};
    rka_solver_config cfg;
    rka_solver_config_init(&cfg);
    CHECK(cfg.threads == 1);
    CHECK(cfg.lambda == 1.0);
    CHECK(cfg.residual_tol < 0.0);
    cfg.iterations = 5;
    cfg.threads = 2;
    rka_trace* t = nullptr;
    CHECK(rka_solve(id, b, 2, b, 2, s, &cfg, &t) == RKA_OK);
    CHECK(rka_trace_length(t) == 6);
    CHECK(rka_trace_has_error(t) == 1);
    CHECK(rka_trace_dimension(t) == 2);
    std::vector<double> err(6);
    CHECK(rka_trace_sq_err(t, err.data(), 6) == RKA_OK);
    CHECK(err[0] == 2.0);
    double x[2];
    CHECK(rka_trace_final_iterate(t, x, 2) == RKA_OK);
    CHECK(rka_trace_stopped_early(t, nullptr) == 0);

    const auto path = scratch() / "trace.csv";
    CHECK(rka_trace_save_csv(t, path.string().c_str(), "seed=0") == RKA_OK);
    const std::string text = slurp(path);
    CHECK(text.rfind("# seed=0\niteration,sq_err,sq_res\n0,2,2\n", 0) == 0);
    rka_trace_destroy(t);

    t = nullptr;
    CHECK(rka_solve(id, b, 2, nullptr, 0, s, &cfg, &t) == RKA_OK);
    CHECK(rka_trace_has_error(t) == 0);
    CHECK(rka_trace_sq_err(t, err.data(), 6) == RKA_ERR_SHAPE_MISMATCH);
    CHECK(rka_trace_save_csv(t, path.string().c_str(), nullptr) == RKA_OK);
    CHECK(slurp(path).rfind("iteration,sq_res\n", 0) == 0);
    rka_trace_destroy(t);

    cfg.residual_tol = 1e-12;
    cfg.iterations = 1000;
    cfg.relaxed = 1;
    t = nullptr;
    CHECK(rka_solve(id, b, 2, b, 2, s, &cfg, &t) == RKA_OK);
    size_t stop = 0;
    CHECK(rka_trace_stopped_early(t, &stop) == 1);
    CHECK(stop < 1000);
    CHECK(rka_trace_length(t) == stop + 1);
    rka_trace_destroy(t);

    cfg.threads = 0;
    CHECK(rka_solve(id, b, 2, b, 2, s, &cfg, &t) == RKA_ERR_INVALID_ARGUMENT);
    cfg.threads = 1;
    CHECK(rka_solve(id, b, 1, b, 2, s, &cfg, &t) == RKA_ERR_SHAPE_MISMATCH);
    rka_scheme_destroy(s);
    rka_matrix_destroy(id);
}

TEST_CASE("theory entry points")
{
    double v = 0;
    CHECK(rka_p_poly(0.3, 1.0, 1.0, &v) == RKA_OK);
    CHECK(v == 0.7);
    CHECK(rka_p_poly(0.0, 1.0, 1.0, &v) == RKA_ERR_DOMAIN);
    CHECK(rka_optimal_alpha(0.0579, 0.1667, 100.0, &v) == RKA_OK);
    CHECK(std::abs(v - 8.61) <= 0.01);
    CHECK(rka_rt_alpha(0.1667, 10.0, &v) == RKA_OK);
    CHECK(std::abs(v - 4.00) <= 0.01);

    rka_matrix* d = make(2, 2, {1, 0, 0, 2});
    CHECK(rka_rate_general(d, 1.0, 1.0, &v) == RKA_OK);
    CHECK(std::abs(v - 0.6) < 1e-15);
    rka_spectral_info info{};
    rka_spectral_extremes(d, 0.0, &info);
    rka_bound_report rep{};
    CHECK(rka_horizon_uniform(&info, 1.0, 1.0, 2.0, &rep) == RKA_OK);
    CHECK(rep.rate == 0.8);
    CHECK(rep.horizon_step == 2.0 / 5.0);
    CHECK(rep.has_limit == 1);
    CHECK(std::abs(rep.horizon_limit - 2.0) < 1e-14);
    rka_matrix_destroy(d);
}

TEST_CASE("figure runs through the C interface are byte-identical")
{
    rka_figure_params p{};
    REQUIRE(rka_figure_default_params(RKA_FIG_THREADS, &p) == RKA_OK);
    CHECK(p.threads_len == 3);
    CHECK(p.iterations == 500);
    p.trials = 3;
    p.iterations = 10;
    p.rows = 25;
    p.cols = 3;
    p.solver_workers = 2;
    const auto d1 = scratch() / "fig1";
    const auto d2 = scratch() / "fig2";
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
    CHECK(rka_run_figure(RKA_FIG_THREADS, &p, d1.string().c_str()) == RKA_OK);
    p.trial_workers = 2;
    CHECK(rka_run_figure(RKA_FIG_THREADS, &p, d2.string().c_str()) == RKA_OK);
    for (const char* name : {"trace_q1.csv", "trace_q10.csv", "trace_q100.csv", "manifest.json"}) {
        CHECK(slurp(d1 / name) == slurp(d2 / name));
        CHECK_FALSE(slurp(d1 / name).empty());
    }
    p.trials = 0;
    CHECK(rka_run_figure(RKA_FIG_THREADS, &p, d1.string().c_str()) == RKA_ERR_INVALID_ARGUMENT);
}
