#include "rka/rka.h"

#include "rka/csv.hpp"
#include "rka/error.hpp"
#include "rka/experiments.hpp"
#include "rka/linalg.hpp"
#include "rka/sampling.hpp"
#include "rka/solver.hpp"
#include "rka/theory.hpp"

#include <array>
#include <cstring>
#include <new>
#include <string>
#include <variant>

struct rka_matrix {
    rka::Matrix value;
};

struct rka_scheme {
    rka::SamplingScheme value;
};

struct rka_trace {
    rka::SolveTrace value;
};

namespace {

thread_local std::string last_error;

rka_status to_status(rka::ErrorCode code)
{
    using rka::ErrorCode;
    switch (code) {
    case ErrorCode::InvalidArgument: return RKA_ERR_INVALID_ARGUMENT;
    case ErrorCode::ShapeMismatch: return RKA_ERR_SHAPE_MISMATCH;
    case ErrorCode::RankDeficient: return RKA_ERR_RANK_DEFICIENT;
    case ErrorCode::ZeroRow: return RKA_ERR_ZERO_ROW;
    case ErrorCode::CouplingViolated: return RKA_ERR_COUPLING_VIOLATED;
    case ErrorCode::DomainError: return RKA_ERR_DOMAIN;
    case ErrorCode::ParseError: return RKA_ERR_PARSE;
    case ErrorCode::IoError: return RKA_ERR_IO;
    }
    return RKA_ERR_INTERNAL;
}

rka_status fail(rka_status status, std::string message)
{
    last_error = std::move(message);
    return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
rka_status guarded(Fn&& fn) noexcept
{
    try {
        fn();
        last_error.clear();
        return RKA_OK;
    } catch (const rka::Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(RKA_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(RKA_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(RKA_ERR_INTERNAL, "unknown failure");
    }
}

void require(bool cond, const char* what)
{
    if (!cond) {
        throw rka::Error(rka::ErrorCode::InvalidArgument, what);
    }
}

void copy_out(std::span<const double> src, double* out, std::size_t len)
{
    require(out != nullptr, "output buffer is null");
    if (len != src.size()) {
        throw rka::Error(rka::ErrorCode::ShapeMismatch,
                         "output buffer holds " + std::to_string(len) + " values, need " + std::to_string(src.size()));
    }
    std::copy(src.begin(), src.end(), out);
}

std::span<const double> input(const double* p, std::size_t len, const char* what)
{
    require(p != nullptr || len == 0, what);
    return {p, len};
}

rka::SchemeKind to_kind(rka_scheme_kind k)
{
    switch (k) {
    case RKA_SCHEME_UNIFORM_W_ROWNORM_P: return rka::SchemeKind::UniformWeightsRowNormProbs;
    case RKA_SCHEME_ROWNORM_W_UNIFORM_P: return rka::SchemeKind::RowNormWeightsUniformProbs;
    case RKA_SCHEME_UNIFORM_W_UNIFORM_P: return rka::SchemeKind::UniformWeightsUniformProbs;
    }
    throw rka::Error(rka::ErrorCode::InvalidArgument, "unknown scheme kind");
}

rka_scheme_kind from_kind(rka::SchemeKind k)
{
    switch (k) {
    case rka::SchemeKind::UniformWeightsRowNormProbs: return RKA_SCHEME_UNIFORM_W_ROWNORM_P;
    case rka::SchemeKind::RowNormWeightsUniformProbs: return RKA_SCHEME_ROWNORM_W_UNIFORM_P;
    case rka::SchemeKind::UniformWeightsUniformProbs: return RKA_SCHEME_UNIFORM_W_UNIFORM_P;
    }
    return RKA_SCHEME_UNIFORM_W_ROWNORM_P;
}

rka::experiments::Figure to_figure(rka_figure f)
{
    using rka::experiments::Figure;
    switch (f) {
    case RKA_FIG_THREADS: return Figure::Threads;
    case RKA_FIG_ALPHA: return Figure::Alpha;
    case RKA_FIG_ALPHA_SWEEP: return Figure::AlphaSweep;
    case RKA_FIG_BOUNDS: return Figure::Bounds;
    }
    throw rka::Error(rka::ErrorCode::InvalidArgument, "unknown figure");
}

rka::SpectralInfo to_spectral(const rka_spectral_info& s)
{
    rka::SpectralInfo info;
    info.frob_sq = s.frob_sq;
    info.sigma_min_sq = s.sigma_min_sq;
    info.sigma_max_sq = s.sigma_max_sq;
    info.s_min = s.s_min;
    info.s_max = s.s_max;
    return info;
}

struct DefaultStorage {
    std::vector<std::size_t> threads;
    std::vector<double> alphas;
};

const DefaultStorage& defaults_for(rka::experiments::Figure f)
{
    static const auto table = [] {
        std::array<DefaultStorage, 4> t;
        for (int i = 0; i < 4; ++i) {
            const auto p = rka::experiments::default_params(static_cast<rka::experiments::Figure>(i));
            t[i] = {p.threads, p.alphas};
        }
        return t;
    }();
    return table[static_cast<std::size_t>(f)];
}

} // namespace

extern "C" {

const char* rka_status_name(rka_status status)
{
    switch (status) {
    case RKA_OK: return "Ok";
    case RKA_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case RKA_ERR_SHAPE_MISMATCH: return "ShapeMismatch";
    case RKA_ERR_RANK_DEFICIENT: return "RankDeficient";
    case RKA_ERR_ZERO_ROW: return "ZeroRow";
    case RKA_ERR_COUPLING_VIOLATED: return "CouplingViolated";
    case RKA_ERR_DOMAIN: return "DomainError";
    case RKA_ERR_PARSE: return "ParseError";
    case RKA_ERR_IO: return "IoError";
    case RKA_ERR_INTERNAL: return "InternalError";
    }
    return "Unknown";
}

const char* rka_last_error(void) { return last_error.c_str(); }

const char* rka_scheme_kind_name(rka_scheme_kind kind)
{
    switch (kind) {
    case RKA_SCHEME_UNIFORM_W_ROWNORM_P:
    case RKA_SCHEME_ROWNORM_W_UNIFORM_P:
    case RKA_SCHEME_UNIFORM_W_UNIFORM_P: return rka::scheme_name(to_kind(kind)).data();
    }
    return "unknown";
}

rka_status rka_scheme_kind_parse(const char* name, rka_scheme_kind* out)
{
    return guarded([&] {
        require(name && out, "null argument");
        const auto kind = rka::parse_scheme(name);
        if (!kind) {
            throw rka::Error(rka::ErrorCode::InvalidArgument, std::string("unknown scheme '") + name + "'");
        }
        *out = from_kind(*kind);
    });
}

const char* rka_figure_name(rka_figure figure)
{
    switch (figure) {
    case RKA_FIG_THREADS:
    case RKA_FIG_ALPHA:
    case RKA_FIG_ALPHA_SWEEP:
    case RKA_FIG_BOUNDS: return rka::experiments::figure_name(to_figure(figure)).data();
    }
    return "unknown";
}

rka_status rka_figure_parse(const char* name, rka_figure* out)
{
    return guarded([&] {
        require(name && out, "null argument");
        const auto f = rka::experiments::parse_figure(name);
        if (!f) {
            throw rka::Error(rka::ErrorCode::InvalidArgument, std::string("unknown experiment '") + name + "'");
        }
        *out = static_cast<rka_figure>(*f);
    });
}

rka_status rka_matrix_create(size_t rows, size_t cols, const double* row_major, rka_matrix** out)
{
    return guarded([&] {
        require(out != nullptr, "null output handle");
        const auto data = input(row_major, rows * cols, "matrix data is null");
        *out = new rka_matrix{rka::Matrix(rows, cols, std::vector<double>(data.begin(), data.end()))};
    });
}

rka_status rka_matrix_load_csv(const char* path, rka_matrix** out)
{
    return guarded([&] {
        require(path && out, "null argument");
        *out = new rka_matrix{rka::csv::read_matrix(path)};
    });
}

rka_status rka_matrix_save_csv(const rka_matrix* m, const char* path)
{
    return guarded([&] {
        require(m && path, "null argument");
        rka::csv::write_matrix(path, m->value);
    });
}

size_t rka_matrix_rows(const rka_matrix* m) { return m ? m->value.rows() : 0; }

size_t rka_matrix_cols(const rka_matrix* m) { return m ? m->value.cols() : 0; }

rka_status rka_matrix_copy_data(const rka_matrix* m, double* out, size_t len)
{
    return guarded([&] {
        require(m != nullptr, "null matrix");
        copy_out(m->value.data(), out, len);
    });
}

void rka_matrix_destroy(rka_matrix* m) { delete m; }

rka_status rka_vector_save_csv(const double* v, size_t len, const char* path)
{
    return guarded([&] {
        require(path != nullptr, "null path");
        rka::csv::write_vector(path, input(v, len, "vector is null"));
    });
}

rka_status rka_row_norms_sq(const rka_matrix* a, double* out, size_t len)
{
    return guarded([&] {
        require(a != nullptr, "null matrix");
        copy_out(rka::row_norms_sq(a->value), out, len);
    });
}

rka_status rka_spectral_extremes(const rka_matrix* a, double rank_tol, rka_spectral_info* out)
{
    return guarded([&] {
        require(a && out, "null argument");
        const auto s = rka::spectral_extremes(a->value, rank_tol > 0.0 ? rank_tol : rka::default_rank_tol);
        *out = {s.frob_sq, s.sigma_min_sq, s.sigma_max_sq, s.s_min, s.s_max};
    });
}

rka_status rka_least_squares(const rka_matrix* a, const double* b, size_t b_len, double* x_out, size_t x_len)
{
    return guarded([&] {
        require(a != nullptr, "null matrix");
        copy_out(rka::least_squares(a->value, input(b, b_len, "rhs is null")), x_out, x_len);
    });
}

rka_status rka_scheme_create(const rka_matrix* a, rka_scheme_kind kind, double alpha, rka_scheme** out)
{
    return guarded([&] {
        require(a && out, "null argument");
        *out = new rka_scheme{rka::make_scheme(to_kind(kind), alpha, a->value)};
    });
}

rka_status rka_scheme_check_coupling(const rka_scheme* s, int* holds, double* alpha, double* max_rel_deviation,
                                     size_t* index)
{
    return guarded([&] {
        require(s != nullptr, "null scheme");
        const auto result = rka::check_coupling(s->value);
        if (const auto* ok = std::get_if<rka::CouplingHolds>(&result)) {
            if (holds) *holds = 1;
            if (alpha) *alpha = ok->alpha;
        } else {
            const auto& bad = std::get<rka::CouplingViolation>(result);
            if (holds) *holds = 0;
            if (max_rel_deviation) *max_rel_deviation = bad.max_rel_deviation;
            if (index) *index = bad.index;
        }
    });
}

void rka_scheme_destroy(rka_scheme* s) { delete s; }

void rka_solver_config_init(rka_solver_config* config)
{
    if (!config) {
        return;
    }
    *config = rka_solver_config{};
    config->threads = 1;
    config->iterations = 100;
    config->lambda = 1.0;
    config->seed = 0;
    config->workers = 1;
    config->relaxed = 0;
    config->residual_tol = -1.0;
}

rka_status rka_solve(const rka_matrix* a, const double* b, size_t b_len, const double* x_star, size_t x_len,
                     const rka_scheme* scheme, const rka_solver_config* config, rka_trace** out)
{
    return guarded([&] {
        require(a && scheme && config && out, "null argument");
        const auto bs = input(b, b_len, "rhs is null");
        rka::LinearSystem system{a->value, rka::Vector(bs.begin(), bs.end()), std::nullopt, std::nullopt};
        if (x_star) {
            system.x_star = rka::Vector(x_star, x_star + x_len);
        }
        rka::SolverConfig cfg;
        cfg.threads = config->threads;
        cfg.iterations = config->iterations;
        cfg.lambda = config->lambda;
        cfg.seed = config->seed;
        cfg.workers = config->workers;
        if (config->residual_tol >= 0.0) {
            cfg.residual_tol = config->residual_tol;
        }
        auto trace = config->relaxed ? rka::solve_relaxed(system, scheme->value, cfg)
                                     : rka::solve(system, scheme->value, cfg);
        *out = new rka_trace{std::move(trace)};
    });
}

size_t rka_trace_length(const rka_trace* t) { return t ? t->value.sq_res.size() : 0; }

int rka_trace_has_error(const rka_trace* t) { return t && !t->value.sq_err.empty() ? 1 : 0; }

rka_status rka_trace_sq_err(const rka_trace* t, double* out, size_t len)
{
    return guarded([&] {
        require(t != nullptr, "null trace");
        copy_out(t->value.sq_err, out, len);
    });
}

rka_status rka_trace_sq_res(const rka_trace* t, double* out, size_t len)
{
    return guarded([&] {
        require(t != nullptr, "null trace");
        copy_out(t->value.sq_res, out, len);
    });
}

size_t rka_trace_dimension(const rka_trace* t) { return t ? t->value.x_final.size() : 0; }

rka_status rka_trace_final_iterate(const rka_trace* t, double* out, size_t len)
{
    return guarded([&] {
        require(t != nullptr, "null trace");
        copy_out(t->value.x_final, out, len);
    });
}

int rka_trace_stopped_early(const rka_trace* t, size_t* iteration)
{
    if (!t || !t->value.stopped_at) {
        return 0;
    }
    if (iteration) {
        *iteration = *t->value.stopped_at;
    }
    return 1;
}

rka_status rka_trace_save_csv(const rka_trace* t, const char* path, const char* provenance)
{
    return guarded([&] {
        require(t && path, "null argument");
        const auto& tr = t->value;
        rka::csv::Table table;
        if (provenance) {
            table.comments.push_back(std::string(" ") + provenance);
        }
        const bool with_err = !tr.sq_err.empty();
        table.columns = with_err ? std::vector<std::string>{"iteration", "sq_err", "sq_res"}
                                 : std::vector<std::string>{"iteration", "sq_res"};
        for (std::size_t k = 0; k < tr.sq_res.size(); ++k) {
            if (with_err) {
                table.rows.push_back({static_cast<double>(k), tr.sq_err[k], tr.sq_res[k]});
            } else {
                table.rows.push_back({static_cast<double>(k), tr.sq_res[k]});
            }
        }
        rka::csv::write_table(path, table);
    });
}

void rka_trace_destroy(rka_trace* t) { delete t; }

rka_status rka_p_poly(double sigma, double alpha, double q, double* out)
{
    return guarded([&] {
        require(out != nullptr, "null output");
        *out = rka::theory::p_poly(sigma, alpha, q);
    });
}

rka_status rka_rate_uniform(double s_min, double s_max, double alpha, double q, double* out)
{
    return guarded([&] {
        require(out != nullptr, "null output");
        *out = rka::theory::rate_uniform(s_min, s_max, alpha, q);
    });
}

rka_status rka_horizon_uniform(const rka_spectral_info* spectrum, double alpha, double q, double r_star_norm_sq,
                               rka_bound_report* out)
{
    return guarded([&] {
        require(spectrum && out, "null argument");
        const auto r = rka::theory::horizon_uniform(to_spectral(*spectrum), alpha, q, r_star_norm_sq);
        *out = {r.rate, r.horizon_step, r.horizon_limit.value_or(0.0), r.horizon_limit ? 1 : 0};
    });
}

rka_status rka_rate_general(const rka_matrix* a, double alpha, double q, double* out)
{
    return guarded([&] {
        require(a && out, "null argument");
        *out = rka::theory::rate_general(a->value, alpha, q);
    });
}

rka_status rka_rate_consistent_general(const rka_matrix* a, const rka_scheme* scheme, double alpha, double q,
                                       double* out)
{
    return guarded([&] {
        require(a && scheme && out, "null argument");
        *out = rka::theory::rate_consistent_general(a->value, scheme->value, alpha, q);
    });
}

rka_status rka_optimal_alpha(double s_min, double s_max, double q, double* out)
{
    return guarded([&] {
        require(out != nullptr, "null output");
        *out = rka::theory::optimal_alpha(s_min, s_max, q);
    });
}

rka_status rka_rt_alpha(double s_max, double q, double* out)
{
    return guarded([&] {
        require(out != nullptr, "null output");
        *out = rka::theory::rt_alpha(s_max, q);
    });
}

rka_status rka_figure_default_params(rka_figure figure, rka_figure_params* out)
{
    return guarded([&] {
        require(out != nullptr, "null output");
        const auto f = to_figure(figure);
        const auto p = rka::experiments::default_params(f);
        const auto& storage = defaults_for(f);
        *out = rka_figure_params{};
        out->rows = p.rows;
        out->cols = p.cols;
        out->trials = p.trials;
        out->seed = p.seed;
        out->scheme = from_kind(p.scheme);
        out->iterations = p.iterations;
        out->alpha = p.alpha;
        out->threads = storage.threads.data();
        out->threads_len = storage.threads.size();
        out->alphas = storage.alphas.data();
        out->alphas_len = storage.alphas.size();
        out->trial_workers = p.par.trial_workers;
        out->solver_workers = p.par.solver_workers;
    });
}

rka_status rka_run_figure(rka_figure figure, const rka_figure_params* params, const char* out_dir)
{
    return guarded([&] {
        require(params && out_dir, "null argument");
        rka::experiments::FigureParams p;
        p.rows = params->rows;
        p.cols = params->cols;
        p.trials = params->trials;
        p.seed = params->seed;
        p.scheme = to_kind(params->scheme);
        p.iterations = params->iterations;
        p.alpha = params->alpha;
        require(params->threads || params->threads_len == 0, "threads is null");
        require(params->alphas || params->alphas_len == 0, "alphas is null");
        p.threads.assign(params->threads, params->threads + params->threads_len);
        p.alphas.assign(params->alphas, params->alphas + params->alphas_len);
        p.par.trial_workers = params->trial_workers;
        p.par.solver_workers = params->solver_workers;
        rka::experiments::run_figure(to_figure(figure), p, out_dir);
    });
}

} // extern "C"
