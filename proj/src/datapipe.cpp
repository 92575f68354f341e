#include "mfg/datapipe.hpp"

#include <cmath>
#include <exception>
#include <filesystem>

#include "mfg/csv.hpp"
#include "mfg/linalg.hpp"
#include "mfg/parallel.hpp"
#include "mfg/vectorize.hpp"

namespace mfg {

const char* to_string(QuadratureRule r) {
    switch (r) {
        case QuadratureRule::rectangle: return "rectangle";
        case QuadratureRule::trapezoid: return "trapezoid";
        case QuadratureRule::simpson: return "simpson";
    }
    return "?";
}

QuadratureRule quadrature_from_string(const std::string& s) {
    if (s == "rectangle") return QuadratureRule::rectangle;
    if (s == "trapezoid") return QuadratureRule::trapezoid;
    if (s == "simpson") return QuadratureRule::simpson;
    throw ValidationError("plan.quadrature: unknown rule '" + s + "'", "plan.quadrature");
}

void SamplingPlan::validate() const {
    auto fail = [](const char* field, const char* what) {
        throw ValidationError(std::string(field) + ": " + what, field);
    };
    if (!(T > 0.0)) fail("plan.T", "must be positive");
    if (!(Ts > 0.0)) fail("plan.Ts", "must be positive");
    if (l < 1) fail("plan.l", "must be at least 1");
    if (!(quad_substep > 0.0)) fail("plan.quad_substep", "must be positive");
}

namespace {

// window endpoints / stride on the path grid
struct WindowIndices {
    std::size_t i0, i1, stride;
};

WindowIndices window_indices(const TimeGrid& grid, double t, double T, double quad_substep,
                             QuadratureRule rule) {
    if (t < grid.t0 - 1e-9 || t + T > grid.t_end() + 1e-9 * (1.0 + std::abs(grid.t_end())))
        throw WindowOutOfRangeError("window [" + std::to_string(t) + ", " + std::to_string(t + T) +
                                    "] leaves the simulated horizon");
    WindowIndices w;
    w.i0 = grid.index_of(t, "window start");
    w.i1 = grid.index_of(t + T, "window end");
    const double raw = quad_substep / grid.dt;
    const double rounded = std::round(raw);
    if (rounded < 1.0 || std::abs(raw - rounded) > 1e-6)
        throw GridMismatchError("quad_substep is not a multiple of the path step");
    w.stride = static_cast<std::size_t>(rounded);
    if ((w.i1 - w.i0) % w.stride != 0)
        throw GridMismatchError("integration window is not a whole number of quadrature steps");
    if (rule == QuadratureRule::simpson && ((w.i1 - w.i0) / w.stride) % 2 != 0)
        throw GridMismatchError("simpson quadrature needs an even number of sub-intervals");
    return w;
}

}  // namespace

Vector discounted_outer_integral(const Path& x, const Path& y, const TimeGrid& grid, double t,
                                 double T, double rho, double quad_substep, QuadratureRule rule) {
    const auto w = window_indices(grid, t, T, quad_substep, rule);
    const double h = static_cast<double>(w.stride) * grid.dt;
    const std::size_t dim = x.dim * y.dim;

    Vector acc(dim, 0.0), term(dim);
    auto add_point = [&](std::size_t k, double weight) {
        const double scale = weight * std::exp(-rho * grid.time(k));
        kron_into(x.frame(k), x.dim, y.frame(k), y.dim, term.data());
        for (std::size_t i = 0; i < dim; ++i) acc[i] += scale * term[i];
    };

    switch (rule) {
        case QuadratureRule::rectangle:
            for (std::size_t k = w.i0; k < w.i1; k += w.stride) add_point(k, h);
            break;
        case QuadratureRule::trapezoid:
            add_point(w.i0, h / 2.0);
            for (std::size_t k = w.i0 + w.stride; k < w.i1; k += w.stride) add_point(k, h);
            add_point(w.i1, h / 2.0);
            break;
        case QuadratureRule::simpson: {
            add_point(w.i0, h / 3.0);
            bool odd = true;
            for (std::size_t k = w.i0 + w.stride; k < w.i1; k += w.stride, odd = !odd)
                add_point(k, odd ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
            add_point(w.i1, h / 3.0);
            break;
        }
    }
    return acc;
}

Vector discounted_outer_difference(const Path& x, const Path& y, const TimeGrid& grid, double t,
                                   double T, double rho, bool symmetrized) {
    if (symmetrized && x.dim != y.dim)
        throw DimensionError("symmetrized difference needs equal path dimensions");
    const double scale_hi = std::exp(-rho * (t + T));
    const double scale_lo = std::exp(-rho * t);
    const std::size_t k_hi = grid.index_of(t + T, "window end");
    const std::size_t k_lo = grid.index_of(t, "window start");

    const std::size_t dim = x.dim * y.dim;
    Vector out(dim), term(dim);
    kron_into(x.frame(k_hi), x.dim, y.frame(k_hi), y.dim, out.data());
    for (std::size_t i = 0; i < dim; ++i) out[i] *= scale_hi;
    kron_into(x.frame(k_lo), x.dim, y.frame(k_lo), y.dim, term.data());
    for (std::size_t i = 0; i < dim; ++i) out[i] -= scale_lo * term[i];

    if (symmetrized) {
        kron_into(y.frame(k_hi), y.dim, x.frame(k_hi), x.dim, term.data());
        for (std::size_t i = 0; i < dim; ++i) out[i] = 0.5 * (out[i] + scale_hi * term[i]);
        kron_into(y.frame(k_lo), y.dim, x.frame(k_lo), x.dim, term.data());
        for (std::size_t i = 0; i < dim; ++i) out[i] -= 0.5 * scale_lo * term[i];
    }
    return out;
}

namespace {

void set_row(Matrix& m, std::size_t k, const Vector& v) {
    for (std::size_t j = 0; j < v.size(); ++j) m(k, j) = v[j];
}

}  // namespace

RegressionData build_regression_data(const ExpectationPaths& paths, const SamplingPlan& plan,
                                     double rho, bool include_cross, bool parallel) {
    plan.validate();
    const bool have_error = !paths.xt.data.empty();
    const bool have_average = !paths.xb.data.empty();
    if (have_error && paths.ut.data.empty())
        throw DimensionError("error paths need both states and inputs");
    if (have_average && paths.ub.data.empty())
        throw DimensionError("average paths need both states and inputs");
    if (include_cross && !(have_error && have_average))
        throw DimensionError("cross block needs both the error and average paths");
    if (!have_error && !have_average) throw DimensionError("no expectation paths supplied");

    RegressionData data;
    data.plan = plan;
    data.rho = rho;
    data.n = have_error ? paths.xt.dim : paths.xb.dim;
    data.m = have_error ? paths.ut.dim : paths.ub.dim;
    const std::size_t n = data.n, m = data.m, l = plan.l;
    const std::size_t nsq = n * n, nc = packed_size(n), nm = n * m;

    if (have_error) {
        data.error_block.delta_xx = Matrix(l, nsq);
        data.error_block.delta_colv = Matrix(l, nc);
        data.error_block.int_xx = Matrix(l, nsq);
        data.error_block.int_xu = Matrix(l, nm);
    }
    if (have_average) {
        data.average_block.delta_xx = Matrix(l, nsq);
        data.average_block.delta_colv = Matrix(l, nc);
        data.average_block.int_xx = Matrix(l, nsq);
        data.average_block.int_xu = Matrix(l, nm);
    }
    if (include_cross) {
        data.cross_block.delta_hat = Matrix(l, nc);
        data.cross_block.int_xt_xb = Matrix(l, nsq);
        data.cross_block.int_xb_xt = Matrix(l, nsq);
        data.cross_block.int_xt_ub = Matrix(l, nm);
        data.cross_block.int_xb_ut = Matrix(l, nm);
    }

    const TimeGrid& grid = paths.grid;
    auto fill_row = [&](std::size_t k) {
        const double t = plan.t_k(k);
        if (have_error) {
            Vector dxx = discounted_outer_difference(paths.xt, paths.xt, grid, t, plan.T, rho);
            set_row(data.error_block.delta_xx, k, dxx);
            set_row(data.error_block.delta_colv, k, compress_pairs(dxx, n));
            set_row(data.error_block.int_xx, k,
                    discounted_outer_integral(paths.xt, paths.xt, grid, t, plan.T, rho,
                                              plan.quad_substep, plan.rule));
            set_row(data.error_block.int_xu, k,
                    discounted_outer_integral(paths.xt, paths.ut, grid, t, plan.T, rho,
                                              plan.quad_substep, plan.rule));
        }
        if (have_average) {
            Vector dxx = discounted_outer_difference(paths.xb, paths.xb, grid, t, plan.T, rho);
            set_row(data.average_block.delta_xx, k, dxx);
            set_row(data.average_block.delta_colv, k, compress_pairs(dxx, n));
            set_row(data.average_block.int_xx, k,
                    discounted_outer_integral(paths.xb, paths.xb, grid, t, plan.T, rho,
                                              plan.quad_substep, plan.rule));
            set_row(data.average_block.int_xu, k,
                    discounted_outer_integral(paths.xb, paths.ub, grid, t, plan.T, rho,
                                              plan.quad_substep, plan.rule));
        }
        if (include_cross) {
            Vector dh =
                discounted_outer_difference(paths.xt, paths.xb, grid, t, plan.T, rho, true);
            set_row(data.cross_block.delta_hat, k, compress_pairs(dh, n));
            set_row(data.cross_block.int_xt_xb, k,
                    discounted_outer_integral(paths.xt, paths.xb, grid, t, plan.T, rho,
                                              plan.quad_substep, plan.rule));
            set_row(data.cross_block.int_xb_xt, k,
                    discounted_outer_integral(paths.xb, paths.xt, grid, t, plan.T, rho,
                                              plan.quad_substep, plan.rule));
            set_row(data.cross_block.int_xt_ub, k,
                    discounted_outer_integral(paths.xt, paths.ub, grid, t, plan.T, rho,
                                              plan.quad_substep, plan.rule));
            set_row(data.cross_block.int_xb_ut, k,
                    discounted_outer_integral(paths.xb, paths.ut, grid, t, plan.T, rho,
                                              plan.quad_substep, plan.rule));
        }
    };

    // windows are independent; each fills its own rows
    std::exception_ptr first_error;
    std::size_t first_error_at = l;
    if (parallel) {
#pragma omp parallel for schedule(static) num_threads(thread_limit())
        for (long long k = 0; k < static_cast<long long>(l); ++k) {
            try {
                fill_row(static_cast<std::size_t>(k));
            } catch (...) {
#pragma omp critical
                if (static_cast<std::size_t>(k) < first_error_at) {
                    first_error = std::current_exception();
                    first_error_at = static_cast<std::size_t>(k);
                }
            }
        }
    } else {
        for (std::size_t k = 0; k < l && !first_error; ++k) {
            try {
                fill_row(k);
            } catch (...) {
                first_error = std::current_exception();
                first_error_at = k;
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return data;
}

namespace {

RankReport rank_report(const std::string& label, const Matrix& m, std::size_t required,
                       double rel_tol) {
    RankReport rep;
    rep.label = label;
    rep.required = required;
    Vector sv = singular_values(m);
    rep.achieved = numerical_rank(sv, rel_tol);
    rep.smallest_kept_sv = rep.achieved > 0 ? sv[rep.achieved - 1] : 0.0;
    rep.largest_discarded_sv = rep.achieved < sv.size() ? sv[rep.achieved] : 0.0;
    rep.satisfied = rep.achieved >= required;
    return rep;
}

}  // namespace

std::vector<RankReport> check_assumptions(const RegressionData& data, double rel_tol) {
    const std::size_t n = data.n, m = data.m;
    const std::size_t nc = packed_size(n);
    std::vector<RankReport> reports;

    if (data.error_block.present()) {
        Matrix stacked = hcat(compress_columns(data.error_block.int_xx, n),
                              data.error_block.int_xu);
        reports.push_back(rank_report("feedback_excitation", stacked, nc + n * m, rel_tol));
    }
    if (data.average_block.present()) {
        reports.push_back(rank_report(
            "average_excitation", compress_columns(data.average_block.int_xx, n), nc, rel_tol));
    }
    if (data.cross_block.present()) {
        Matrix sum_xx = data.cross_block.int_xt_xb + data.cross_block.int_xb_xt;
        Matrix sum_xu = data.cross_block.int_xt_ub + data.cross_block.int_xb_ut;
        Matrix stacked = hcat(compress_columns(sum_xx, n), sum_xu);
        reports.push_back(rank_report("cross_excitation", stacked, nc + n * m, rel_tol));
    }
    return reports;
}

namespace {

void save_block_csv(const std::string& path, const SamplingPlan& plan,
                    const std::vector<std::pair<std::string, const Matrix*>>& parts) {
    CsvWriter csv(path);
    std::vector<std::string> names{"t"};
    for (const auto& [prefix, m] : parts)
        for (std::size_t j = 0; j < m->cols(); ++j) names.push_back(prefix + "_" + std::to_string(j));
    csv.header(names);
    for (std::size_t k = 0; k < plan.l; ++k) {
        std::vector<double> row{plan.t_k(k)};
        for (const auto& [prefix, m] : parts)
            for (std::size_t j = 0; j < m->cols(); ++j) row.push_back((*m)(k, j));
        csv.row(row);
    }
}

}  // namespace

std::vector<std::string> save_regression_csv(const RegressionData& data, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name,
                    const std::vector<std::pair<std::string, const Matrix*>>& parts) {
        const std::string path = dir + "/" + name;
        save_block_csv(path, data.plan, parts);
        written.push_back(path);
    };

    if (data.error_block.present())
        emit("error_block.csv", {{"delta_xx", &data.error_block.delta_xx},
                                 {"delta_colv", &data.error_block.delta_colv},
                                 {"int_xx", &data.error_block.int_xx},
                                 {"int_xu", &data.error_block.int_xu}});
    if (data.average_block.present())
        emit("average_block.csv", {{"delta_xx", &data.average_block.delta_xx},
                                   {"delta_colv", &data.average_block.delta_colv},
                                   {"int_xx", &data.average_block.int_xx},
                                   {"int_xu", &data.average_block.int_xu}});
    if (data.cross_block.present())
        emit("cross_block.csv", {{"delta_hat", &data.cross_block.delta_hat},
                                 {"int_xt_xb", &data.cross_block.int_xt_xb},
                                 {"int_xb_xt", &data.cross_block.int_xb_xt},
                                 {"int_xt_ub", &data.cross_block.int_xt_ub},
                                 {"int_xb_ut", &data.cross_block.int_xb_ut}});
    return written;
}

}  // namespace mfg
