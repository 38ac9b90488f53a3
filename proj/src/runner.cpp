#include "blowup/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "blowup/continuation.hpp"
#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "blowup/pde_field.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

namespace fs = std::filesystem;

bool RunOutcome::pass() const {
    if (partial) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

int exit_status(const RunOutcome& r) { return r.pass() ? 0 : 1; }

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Ctx {
    const RunConfig& cfg;
    std::string dir;
    RunOutcome& out;
    std::vector<std::string> notes;

    std::string path(const std::string& f) const { return (fs::path(dir) / f).string(); }
    void table(const Table& t) { t.write(path(t.name() + ".tsv")); }
    void check(Check c) { out.checks.push_back(std::move(c)); }
};

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double order(double e0, double e1, double h0, double h1) {
    if (!(e0 > 0.0) || !(e1 > 0.0)) return kNaN;
    return std::log(e0 / e1) / std::log(h0 / h1);
}

// ---------------------------------------------------------------- closed forms

// int_0^inf rho^alpha (1 + rho^2)^{-m} d rho via rho = tan(theta)
double beta_integral_by_quadrature(double m, double alpha, double rel_tol) {
    auto f = [=](double th) {
        return std::pow(std::sin(th), alpha) * std::pow(std::cos(th), 2.0 * m - 2.0 - alpha);
    };
    const double h = 0.5 * std::numbers::pi;
    return integrate_adaptive(f, 0.0, 0.5 * h, 20, 1e-300, rel_tol).value +
           integrate_adaptive(f, 0.5 * h, h, 20, 1e-300, rel_tol).value;
}

ResidualScheme scheme_from(const std::string& s) {
    if (s == "variational") return ResidualScheme::Variational;
    if (s == "high_order") return ResidualScheme::HighOrder;
    return ResidualScheme::HighOrder6;
}

void suite_closed_forms(Ctx& ctx) {
    const auto& b = ctx.cfg.closed_forms;
    const auto& tol = ctx.cfg.tolerances;

    // (a) Beta form vs quadrature, (b) the Beta identity
    Table beta("beta", {"n", "m", "alpha", "beta_form", "quadrature", "rel_gap"});
    Table ident("beta_identity", {"n", "lhs", "rhs", "rel_gap"});
    double worst_beta = 0.0, worst_ident = 0.0;
    for (int n : b.dims) {
        const std::pair<double, double> pairs[] = {
            {n - 1.0, double(n)}, {n - 1.0, n - 2.0}, {double(n), double(n)}, {double(n), n - 2.0}};
        for (auto [m, a] : pairs) {
            double bf = integral_I(m, a);
            double q = beta_integral_by_quadrature(m, a, b.quad_rel_tol);
            double g = rel_gap(bf, q);
            worst_beta = std::max(worst_beta, g);
            beta.add_row({(long long)n, m, a, bf, q, g});
        }
        double lhs = (n - 3.0) / (n - 1.0) * integral_I(n - 1, n);
        double rhs = integral_I(n - 1, n - 2);
        double g = rel_gap(lhs, rhs);
        worst_ident = std::max(worst_ident, g);
        ident.add_row({(long long)n, lhs, rhs, g});
    }
    ctx.table(beta);
    ctx.table(ident);
    ctx.check(make_check("beta_vs_quadrature", worst_beta, "<=", tol.beta_vs_quadrature));
    ctx.check(make_check("beta_identity", worst_ident, "<=", tol.beta_identity));

    // (c) bubble energy vs direct quadrature of -(1/n)|K| int U^{2*} + H int U^{2#}
    struct Item {
        int n;
        double D;
        double closed = 0, quad = 0;
    };
    std::vector<Item> items;
    for (int n : b.dims)
        for (double D : b.D) items.push_back({n, D});
    const double K = ctx.cfg.curvature.K;
    parallel_for(items.size(), [&](size_t k) {
        Item& it = items[k];
        CurvaturePointData d = CurvaturePointData::flat(it.n, K, it.D);
        BubbleProfile U(BubbleParams::from(d, 1.0));
        QuadratureSpec qs;
        qs.rel_tol = b.quad_rel_tol;
        qs.abs_tol = 1e-300;
        qs.decay_exponent = it.n;
        const double ps = crit_exponent(it.n), pt = crit_trace_exponent(it.n);
        double vi = halfspace_integral(
                        it.n, [&](double r, double z) { return std::pow(U.value(r, z), ps); }, qs)
                        .value;
        qs.decay_exponent = it.n - 1.0;
        double vb =
            boundary_integral(it.n, [&](double r) { return std::pow(U.value(r, 0.0), pt); }, qs).value;
        it.quad = -std::abs(d.K) / it.n * vi + d.H * vb;
        it.closed = bubble_energy(d);
    });
    Table en("bubble_energy", {"n", "D", "closed_form", "quadrature", "rel_gap"});
    double worst_en = 0.0;
    for (const auto& it : items) {
        double g = rel_gap(it.closed, it.quad);
        worst_en = std::max(worst_en, g);
        en.add_row({(long long)it.n, it.D, it.closed, it.quad, g});
    }
    ctx.table(en);
    ctx.check(make_check("bubble_energy_vs_quadrature", worst_en, "<=", tol.bubble_energy));

    // residuals of the sampled bubble and kernels, constant coefficients, eps = 0
    const CurvaturePointData& cd = ctx.cfg.curvature;
    const int n = cd.n;
    const auto& hs = b.residual_h_bubble;
    const ResidualScheme scheme = scheme_from(b.residual_scheme);
    const int lin_order = scheme == ResidualScheme::HighOrder ? 4 : 6;
    // jobs: (field, h) with field 0 = bubble, 1..n-1 = j_i (mode 1), n = j_n
    struct Res {
        double interior = 0, boundary = 0;
    };
    std::vector<Res> res((n + 1) * hs.size());
    parallel_for(res.size(), [&](size_t job) {
        const int f = static_cast<int>(job / hs.size());
        const double h = hs[job % hs.size()];
        auto g = std::make_shared<const AxiGrid>(AxiGrid::uniform(n, h, b.residual_extent_bubble));
        BubbleParams bp = BubbleParams::from(cd, 1.0);
        AxiField U = sample_bubble(g, bp);
        Residual r;
        if (f == 0) {
            ModelProblem P = ModelProblem::constant(g, 0.0, cd.K, cd.H, 0.0);
            r = residual(P, U, scheme);
        } else {
            BubbleProfile B(bp);
            AxiField j = f < n ? sample(g, Harmonic::coordinate(n, f - 1),
                                        [&](double rr, double z) { return B.kernel_mode1(rr, z); })
                               : sample(g, Harmonic::constant(n),
                                        [&](double rr, double z) { return B.kernel_n(rr, z); });
            r = linear_residual(U, j, std::abs(cd.K), cd.H, 0, lin_order);
        }
        res[job] = {r.interior_max, r.boundary_max};
    });
    auto emit = [&](const std::string& name, int f0, int f1, const std::string& label) {
        Table t(name, {"field", "h", "interior_max", "boundary_max", "order_interior",
                       "order_boundary"});
        double min_order = INFINITY, finest = 0.0;
        for (int f = f0; f <= f1; ++f) {
            for (size_t k = 0; k < hs.size(); ++k) {
                const Res& r = res[f * hs.size() + k];
                double oi = kNaN, ob = kNaN;
                if (k > 0) {
                    const Res& p = res[f * hs.size() + k - 1];
                    oi = order(p.interior, r.interior, hs[k - 1], hs[k]);
                    ob = order(p.boundary, r.boundary, hs[k - 1], hs[k]);
                    // a residual already at rounding level has no order to measure
                    for (double o : {oi, ob})
                        min_order = std::min(min_order, std::isnan(o) ? -INFINITY : o);
                }
                std::string fname = f == 0 ? "U" : "j" + std::to_string(f);
                t.add_row({fname, hs[k], r.interior, r.boundary, oi, ob});
            }
            const Res& last = res[f * hs.size() + hs.size() - 1];
            finest = std::max({finest, last.interior, last.boundary});
        }
        ctx.table(t);
        ctx.check(make_check(label + "_order", min_order, ">=", tol.residual_order));
        ctx.check(make_check(label + "_finest", finest, "<", tol.residual_finest));
    };
    emit("residual_bubble", 0, 0, "bubble_residual");
    emit("residual_kernel", 1, n, "kernel_residual");
}

// ------------------------------------------------------------------------ vp

void suite_vp(Ctx& ctx) {
    const auto& b = ctx.cfg.vp;
    const auto& tol = ctx.cfg.tolerances;
    const CurvaturePointData& d = ctx.cfg.curvature;
    const int n = d.n;
    std::vector<VpReport> reps(b.h0_bubble.size());
    std::vector<AxiField> fields(b.h0_bubble.size());
    std::vector<size_t> sizes(b.h0_bubble.size());
    VpOptions vo;
    vo.tol = b.cg_tol;
    parallel_for(b.h0_bubble.size(), [&](size_t k) {
        double h = b.h0_bubble[k];
        auto g = std::make_shared<const AxiGrid>(
            b.ratio > 1.0 ? AxiGrid::graded(n, h, b.ratio, b.radius_bubble, DomainKind::HalfBall)
                          : AxiGrid::uniform(n, h, b.radius_bubble, DomainKind::HalfBall));
        sizes[k] = g->size();
        fields[k] = solve_vp(d, g, vo);
        reps[k] = vp_report(d, fields[k]);
    });
    Table t("vp", {"h0", "nodes", "orthogonality", "iii_interior", "iii_boundary", "iii_scale",
                   "iii_gap", "quad_form", "quad_form_source", "f_term", "decay_slope"});
    for (size_t k = 0; k < reps.size(); ++k) {
        const auto& r = reps[k];
        t.add_row({b.h0_bubble[k], (long long)sizes[k], r.orthogonality, r.iii_interior,
                   r.iii_boundary, r.iii_scale, r.iii_gap, r.quad_form, r.quad_form_source, r.f_term,
                   r.decay_slope});
    }
    ctx.table(t);
    const VpReport& fin = reps.back();
    Table dec("vp_decay", {"R", "max_abs_v"});
    for (auto [R, m] : fin.decay_samples) dec.add_row({R, m});
    ctx.table(dec);

    // f_term extrapolated in h0^2
    std::vector<double> h2, ft;
    for (size_t k = 0; k < reps.size(); ++k) {
        h2.push_back(b.h0_bubble[k] * b.h0_bubble[k]);
        ft.push_back(reps[k].f_term);
    }
    Extrapolation ex = extrapolate_to_zero(h2, ft, std::min<int>(1, int(reps.size()) - 1));
    Table fx("vp_f_term", {"f_term_finest", "f_term_extrapolated", "last_correction"});
    fx.add_row({ft.back(), ex.limit, ex.last_correction});
    ctx.table(fx);

    fs::create_directories(ctx.path("fields"));
    write_snapshot(ctx.path("fields/vp_finest.txt"), fields.back(),
                   {{"h0", format_number(b.h0_bubble.back())}, {"field", "V_p"}});

    double worst_orth = 0.0, worst_gap = 0.0, min_q = INFINITY;
    long long gap_increase = 0;
    for (size_t k = 0; k < reps.size(); ++k) {
        worst_orth = std::max(worst_orth, reps[k].orthogonality);
        min_q = std::min(min_q, reps[k].quad_form);
        if (k && reps[k].iii_gap > reps[k - 1].iii_gap) ++gap_increase;
    }
    worst_gap = fin.iii_gap;
    ctx.check(make_check("vp_orthogonality", worst_orth, "<", tol.vp_orthogonality));
    ctx.check(make_check("vp_identity_gap_finest", worst_gap, "<", tol.vp_identity));
    ctx.check(make_check("vp_identity_gap_increases", double(gap_increase), "==", 0.0));
    ctx.check(make_check("vp_quadratic_form_min", min_q, ">=", 0.0));
    ctx.check(make_check("vp_decay_slope_offset", std::abs(fin.decay_slope + (n - 3.0)), "<=",
                         tol.vp_slope));
    if (fin.iii_scale > 0.0 && fin.iii_interior == 0.0 && fin.iii_boundary == 0.0)
        ctx.notes.push_back("the orthogonality and identity integrals vanish by the angular "
                            "factor of h_ij; their checks hold exactly");
}

// -------------------------------------------------------------------- reduce

void suite_reduce(Ctx& ctx) {
    const auto& b = ctx.cfg.reduce;
    const auto& tol = ctx.cfg.tolerances;
    const FlatModelSpec spec = ctx.cfg.flat_model();
    const int n = spec.data.n;
    const CurvaturePointData c = spec.center_data();
    const double E = bubble_energy(c);

    ExpansionOptions eo;
    eo.aux.tol = b.aux_tol;
    eo.aux.max_iter = b.aux_max_iter;
    eo.extrapolation_order = b.extrapolation_order;
    const size_t nd = b.d_grid.size(), ne = b.eps_path.size();
    std::vector<ExpansionCell> cells(nd * ne);
    std::vector<std::string> errs(nd * ne);
    parallel_for(cells.size(), [&](size_t k) {
        try {
            cells[k] = expansion_cell(spec, b.d_grid[k / ne], b.eps_path[k % ne], eo);
        } catch (const std::exception& e) {
            cells[k].d = b.d_grid[k / ne];
            cells[k].eps = b.eps_path[k % ne];
            cells[k].value = cells[k].phi_norm = kNaN;
            errs[k] = e.what();
        }
    });
    Table t("reduce_cells", {"d", "eps", "zeta", "j_quad", "dj", "j_reduced", "value", "phi_norm",
                             "multiplier", "aux_iterations"});
    size_t failed = 0;
    for (size_t k = 0; k < cells.size(); ++k) {
        const auto& x = cells[k];
        t.add_row({x.d, x.eps, x.zeta, x.j_quad, x.dj, x.j_reduced, x.value, x.phi_norm,
                   x.multiplier, (long long)x.aux_iterations});
        if (!errs[k].empty()) {
            ++failed;
            ctx.notes.push_back("cell d=" + num_str(x.d) + " eps=" + num_str(x.eps) +
                                ": " + errs[k]);
        }
    }
    ctx.table(t);
    ctx.check(make_check("reduce_failed_cells", double(failed), "==", 0.0));

    // expansion fit
    double A_ref = kNaN, C_ref = coeff_C(c), d0_ref = kNaN;
    try {
        A_ref = coeff_A(c, 0.0);
        d0_ref = optimal_d(A_ref, C_ref);
    } catch (const DomainError& e) {
        ctx.notes.push_back(e.what());
    }
    std::vector<std::vector<double>> values(nd, std::vector<double>(ne));
    for (size_t i = 0; i < nd; ++i)
        for (size_t k = 0; k < ne; ++k) values[i][k] = cells[i * ne + k].value;
    Table lim("reduce_limit", {"d", "limit", "last_correction", "fitted", "reference"});
    Table co("reduce_coefficients", {"quantity", "fitted", "reference", "rel_gap"});
    bool fit_ok = false;
    ExpansionFit fit;
    if (!failed) {
        try {
            fit = fit_expansion(n, b.d_grid, b.eps_path, values, b.extrapolation_order);
            fit_ok = true;
        } catch (const NumericalError& e) {
            ctx.notes.push_back(e.what());
        }
    }
    if (fit_ok) {
        for (size_t i = 0; i < nd; ++i) {
            double d = b.d_grid[i];
            lim.add_row({d, fit.limit[i], fit.correction[i], d * fit.C - d * d * fit.A,
                         d * C_ref - d * d * A_ref});
        }
        co.add_row({std::string("A"), fit.A, A_ref, rel_gap(fit.A, A_ref)});
        co.add_row({std::string("C"), fit.C, C_ref, rel_gap(fit.C, C_ref)});
        co.add_row({std::string("d0"), fit.d_fit, d0_ref, rel_gap(fit.d_fit, d0_ref)});
    }
    co.add_row({std::string("E"), kNaN, E, kNaN});
    ctx.table(lim);
    ctx.table(co);
    if (n >= 5) {
        double gA = fit_ok ? rel_gap(fit.A, A_ref) : kNaN;
        double gC = fit_ok ? rel_gap(fit.C, C_ref) : kNaN;
        double gd = fit_ok ? rel_gap(fit.d_fit, d0_ref) : kNaN;
        ctx.check(make_check("expansion_A_gap", gA, "<=", tol.expansion_rel));
        ctx.check(make_check("expansion_C_gap", gC, "<=", tol.expansion_rel));
        ctx.check(make_check("expansion_argmax_gap", gd, "<=", tol.expansion_rel));
        // concavity of the limit profile in d
        if (fit_ok && nd >= 3) {
            double worst = -INFINITY;
            for (size_t i = 1; i + 1 < nd; ++i) {
                double h0 = b.d_grid[i] - b.d_grid[i - 1], h1 = b.d_grid[i + 1] - b.d_grid[i];
                double dd = 2.0 * (fit.limit[i + 1] / h1 - fit.limit[i] * (1 / h0 + 1 / h1) +
                                   fit.limit[i - 1] / h0) / (h0 + h1);
                worst = std::max(worst, dd);
            }
            Table cv("reduce_concavity", {"max_second_difference"});
            cv.add_row({worst});
            ctx.table(cv);
        }
    }

    // remainder rate
    Table pr("phi_rate", {"d", "exponent", "ratio_first", "ratio_max", "ratio_growth"});
    double worst_exp = INFINITY, worst_growth = 0.0;
    for (size_t i = 0; i < nd; ++i) {
        std::vector<double> phi, ratio;
        for (size_t k = 0; k < ne; ++k) {
            phi.push_back(cells[i * ne + k].phi_norm);
            ratio.push_back(phi.back() / concentration_scale(n, b.eps_path[k]));
        }
        double q = kNaN;
        bool finite = true;
        for (double p : phi) finite = finite && std::isfinite(p) && p > 0.0;
        if (finite) q = richardson_fit(b.eps_path, phi, RateModel::Power).q;
        double rmax = *std::max_element(ratio.begin(), ratio.end());
        double growth = rmax / ratio.front();
        pr.add_row({b.d_grid[i], q, ratio.front(), rmax, growth});
        worst_exp = std::min(worst_exp, std::isnan(q) ? -INFINITY : q);
        worst_growth = std::max(worst_growth, std::isnan(growth) ? INFINITY : growth);
    }
    ctx.table(pr);
    if (n == 4)
        ctx.check(make_check("phi_over_rho_growth", worst_growth, "<=", tol.phi_ratio_growth));
    else
        ctx.check(make_check("phi_exponent_min", worst_exp, ">=",
                             n == 5 ? tol.phi_exponent : std::max(tol.phi_exponent, 1.8)));

    // maximization over (s, d)
    const auto& m = b.maximize;
    if (m.enabled) {
        SearchBox box{m.s_lo_phys, m.s_hi_phys, m.d_lo, m.d_hi};
        MaximizeOptions mo;
        mo.ns = m.ns;
        mo.nd = m.nd;
        mo.refinements = m.refinements;
        Table mt("maximize", {"eps", "s", "d", "value", "margin_s", "margin_d", "distance"});
        long long boundary_hits = 0, not_decreasing = 0;
        double prev = INFINITY;
        for (double eps : m.eps) {
            try {
                MaximizeResult r = maximize_reduced(flat_reduced_energy(spec, eps), box, mo);
                const auto& last = r.history.back();
                double dist = std::hypot(r.s, r.d - d0_ref);
                mt.add_row({eps, r.s, r.d, r.value, last.margin_s, last.margin_d, dist});
                if (dist > prev) ++not_decreasing;
                prev = dist;
            } catch (const NumericalError& e) {
                ++boundary_hits;
                ctx.notes.push_back("maximize eps=" + num_str(eps) + ": " + e.what());
                mt.add_row({eps, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN});
            }
        }
        ctx.table(mt);
        ctx.check(make_check("maximizer_on_boundary", double(boundary_hits), "==", 0.0));
        ctx.check(make_check("maximizer_distance_increases", double(not_decreasing), "==", 0.0));
    }
}

// --------------------------------------------------------- solve and rates

Table steps_table(const ContinuationRun& run) {
    Table t("steps", {"k", "eps", "ell", "requested", "method", "iterations", "residual", "energy",
                      "min_value", "delta_fit", "delta_width", "p_fit", "peak", "amplitude"});
    for (size_t k = 0; k < run.steps.size(); ++k) {
        const auto& s = run.steps[k];
        t.add_row({(long long)k, s.eps, s.ell, (long long)s.requested, s.method,
                   (long long)s.iterations, s.residual, s.energy, s.min_value, s.fit.delta_fit,
                   s.fit.delta_width, s.fit.p_fit, s.fit.peak, s.fit.amplitude});
    }
    return t;
}

std::string snapshot_name(size_t k) { return "fields/u_" + std::to_string(k) + ".txt"; }

void write_run_archive(Ctx& ctx, const ContinuationRun& run) {
    ctx.table(steps_table(run));
    fs::create_directories(ctx.path("fields"));
    for (size_t k = 0; k < run.steps.size(); ++k) {
        const auto& s = run.steps[k];
        write_snapshot(ctx.path(snapshot_name(k)), s.u,
                       {{"eps", format_number(s.eps)},
                        {"ell", format_number(s.ell)},
                        {"residual", format_number(s.residual)},
                        {"energy", format_number(s.energy)},
                        {"method", s.method}});
    }
}

void solve_checks(Ctx& ctx, const ContinuationRun& run) {
    const auto& tol = ctx.cfg.tolerances;
    double worst_res = 0.0, min_u = INFINITY;
    long long peak_drops = 0;
    double prev_peak = -INFINITY;
    for (const auto& s : run.steps) {
        worst_res = std::max(worst_res, s.residual);
        min_u = std::min(min_u, s.min_value);
        if (!(s.fit.peak > prev_peak)) ++peak_drops;
        prev_peak = s.fit.peak;
    }
    ctx.check(make_check("run_complete", run.complete ? 1.0 : 0.0, "==", 1.0));
    ctx.check(make_check("max_certified_residual", run.steps.empty() ? kNaN : worst_res, "<",
                         tol.solve_residual));
    ctx.check(make_check("min_solution_value", run.steps.empty() ? kNaN : min_u, ">", 0.0));
    ctx.check(make_check("peak_not_increasing", double(peak_drops), "==", 0.0));
    if (!run.complete) {
        ctx.out.partial = true;
        ctx.notes.push_back("PARTIAL RUN: " + run.failure);
    }
}

void rate_tables(Ctx& ctx, const RateReport& r, const std::vector<double>& energy, double E) {
    Table t("rates", {"eps", "scale", "delta_fit", "ratio", "p_fit", "amplitude", "energy",
                      "energy_gap"});
    for (size_t k = 0; k < r.eps.size(); ++k)
        t.add_row({r.eps[k], concentration_scale(r.n, r.eps[k]), r.delta[k], r.ratio[k],
                   r.p_drift[k], r.amplitude[k], energy[k], energy[k] - E});
    ctx.table(t);
    Table s("rates_summary", {"quantity", "value"});
    auto row = [&](const char* q, double v) { s.add_row({std::string(q), v}); };
    row("n", r.n);
    row("d0", r.d0);
    row("bubble_energy", E);
    row("c_ls", r.c_ls);
    row("c_extrap", r.c_extrap);
    row("gap", r.gap);
    row("gap_ls", r.gap_ls);
    row("power_q", r.power_q);
    row("ratio_converging", r.ratio_converging ? 1.0 : 0.0);
    row("residual_rho", r.residual_rho);
    row("residual_eps", r.residual_eps);
    row("p_monotone", r.p_monotone ? 1.0 : 0.0);
    row("amplitude_spread", r.amplitude_spread);
    ctx.table(s);
}

void rate_checks(Ctx& ctx, const RateReport& r) {
    const auto& tol = ctx.cfg.tolerances;
    if (r.n >= 5) {
        ctx.check(make_check("rate_constant_gap", r.gap, "<=", tol.rate_gap));
        ctx.check(make_check("rate_ratio_converging", r.ratio_converging ? 1.0 : 0.0, "==", 1.0));
        ctx.check(make_check("p_fit_monotone", r.p_monotone ? 1.0 : 0.0, "==", 1.0));
        ctx.check(make_check("amplitude_spread", r.amplitude_spread, "<=", tol.amplitude_spread));
    } else {
        ctx.check(make_check("rho_fit_minus_eps_fit_residual", r.residual_rho - r.residual_eps, "<",
                             0.0));
    }
}

void suite_solve(Ctx& ctx) {
    ContinuationRun run = continuation(ctx.cfg.continuation_spec());
    write_run_archive(ctx, run);
    solve_checks(ctx, run);
    if (run.steps.size() >= 3) {
        CurvaturePointData c = ctx.cfg.flat_model().center_data();
        RateReport r = verify_rate(run, c, ctx.cfg.has_rates ? ctx.cfg.rates.f_term : 0.0);
        std::vector<double> en;
        for (const auto& s : run.steps) en.push_back(s.energy);
        rate_tables(ctx, r, en, bubble_energy(c));
    }
}

void suite_rates(Ctx& ctx) {
    const double f_term = ctx.cfg.rates.f_term;
    if (ctx.cfg.rates.run_dir.empty()) {
        ContinuationRun run = continuation(ctx.cfg.continuation_spec());
        write_run_archive(ctx, run);
        solve_checks(ctx, run);
        if (run.steps.size() < 3) {
            ctx.check(make_check("converged_steps", double(run.steps.size()), ">=", 3.0));
            return;
        }
        CurvaturePointData c = ctx.cfg.flat_model().center_data();
        RateReport r = verify_rate(run, c, f_term);
        std::vector<double> en;
        for (const auto& s : run.steps) en.push_back(s.energy);
        rate_tables(ctx, r, en, bubble_energy(c));
        rate_checks(ctx, r);
        return;
    }
    // reload an archive: recompute residual certificates and fits from the snapshots
    const std::string rd = ctx.cfg.rates.run_dir;
    RunConfig src = load_config((fs::path(rd) / "manifest.json").string());
    if (!src.has_grid) throw ConfigError("rates.run_dir", "the archived run has no grid block");
    const FlatModelSpec model = src.flat_model();
    Table steps = Table::read((fs::path(rd) / "steps.tsv").string());
    Table cert("certificates", {"k", "eps", "stored", "recomputed", "rel_diff"});
    std::vector<double> eps, delta, p, amp, en;
    double worst = 0.0;
    for (size_t k = 0; k < steps.rows(); ++k) {
        double e = steps.num(k, "eps");
        AxiField u = read_snapshot((fs::path(rd) / snapshot_name(k)).string());
        FlatFrame fr = make_frame(model, e);
        if (fr.grid->r != u.grid->r || fr.grid->z != u.grid->z)
            throw NumericalError("rates: snapshot " + snapshot_name(k) +
                                 " does not match the grid rebuilt from the manifest");
        AxiField uu(fr.grid, u.harmonic, u.values);
        double stored = steps.num(k, "residual");
        double rec = certified_residual(fr.problem, uu);
        double diff = std::abs(rec - stored) / std::max(stored, 1e-300);
        worst = std::max(worst, diff);
        cert.add_row({(long long)k, e, stored, rec, diff});
        BlowupFit f = fit_blowup(uu, fr.center, fr.ell);
        eps.push_back(e);
        delta.push_back(f.delta_fit);
        p.push_back(f.p_fit);
        amp.push_back(f.amplitude);
        en.push_back(energy_J(fr.problem, uu));
    }
    ctx.table(cert);
    ctx.check(make_check("certificate_mismatch", worst, "<=", ctx.cfg.tolerances.certificate_rel));
    if (eps.size() < 3) {
        ctx.check(make_check("converged_steps", double(eps.size()), ">=", 3.0));
        return;
    }
    CurvaturePointData c = model.center_data();
    RateReport r = verify_rate(c.n, eps, delta, p, amp, optimal_d(c, f_term));
    rate_tables(ctx, r, en, bubble_energy(c));
    rate_checks(ctx, r);
}

std::string summary_text(const RunConfig& cfg, const RunOutcome& out,
                         const std::vector<std::string>& notes) {
    std::ostringstream os;
    os << "command: " << to_string(cfg.command) << "\n";
    os << "n: " << cfg.curvature.n << "  K: " << num_str(cfg.curvature.K)
       << "  D: " << num_str(cfg.curvature.D()) << "\n";
    os << "verdict: " << (out.partial ? "PARTIAL" : out.pass() ? "PASS" : "FAIL") << "\n";
    os << "checks:\n";
    for (const auto& c : out.checks)
        os << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name << " = " << num_str(c.value)
           << " " << c.relation << " " << num_str(c.threshold) << "\n";
    if (!notes.empty()) {
        os << "notes:\n";
        for (const auto& n : notes) os << "  - " << n << "\n";
    }
    return os.str();
}

}  // namespace

RunOutcome run(RunConfig cfg, const RunOptions& opt) {
    if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
    cfg.validate();
    if (opt.threads > 0) set_threads(opt.threads);
    RunOutcome out;
    out.out_dir = cfg.output_dir;
    fs::create_directories(cfg.output_dir);
    Ctx ctx{cfg, cfg.output_dir, out, {}};
    write_atomic(ctx.path("manifest.json"), to_json(cfg));
    auto t0 = std::chrono::steady_clock::now();
    switch (cfg.command) {
        case Command::VerifyClosedForms: suite_closed_forms(ctx); break;
        case Command::Vp: suite_vp(ctx); break;
        case Command::Reduce: suite_reduce(ctx); break;
        case Command::Solve: suite_solve(ctx); break;
        case Command::Rates: suite_rates(ctx); break;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ctx.table(checks_table(out.checks));
    write_atomic(ctx.path("summary.txt"), summary_text(cfg, out, ctx.notes));
    std::ostringstream info;
    info << "threads " << threads() << "\nwall_seconds " << secs << "\n";
    write_atomic(ctx.path("run_info.txt"), info.str());
    out.note = ctx.notes.empty() ? "" : ctx.notes.front();
    emit_plotdata(cfg.output_dir);
    return out;
}

// -------------------------------------------------------------- plot data

void emit_plotdata(const std::string& run_dir, const std::string& out_dir) {
    const fs::path rd(run_dir);
    if (!fs::exists(rd / "manifest.json"))
        throw std::runtime_error("emit_plotdata: no manifest.json in " + run_dir);
    RunConfig cfg = load_config((rd / "manifest.json").string());
    const fs::path od = out_dir.empty() ? rd / "plot" : fs::path(out_dir);
    fs::create_directories(od);
    auto need = [&](const char* f) {
        fs::path p = rd / f;
        if (!fs::exists(p)) throw std::runtime_error("emit_plotdata: missing artifact " + p.string());
        return Table::read(p.string());
    };
    auto put = [&](const Table& t) { t.write((od / (t.name() + ".tsv")).string()); };
    const int n = cfg.curvature.n;
    switch (cfg.command) {
        case Command::VerifyClosedForms: {
            Table r = need("residual_bubble.tsv");
            Table p("plot_residuals", {"h", "interior_max", "boundary_max"});
            for (size_t k = 0; k < r.rows(); ++k)
                p.add_row({r.num(k, "h"), r.num(k, "interior_max"), r.num(k, "boundary_max")});
            put(p);
            break;
        }
        case Command::Vp: {
            Table r = need("vp_decay.tsv");
            Table p("plot_vp_decay", {"R", "max_abs_v", "reference"});
            for (size_t k = 0; k < r.rows(); ++k) {
                double R = r.num(k, "R");
                double ref = r.num(0, "max_abs_v") * std::pow(R / r.num(0, "R"), -(n - 3.0));
                p.add_row({R, r.num(k, "max_abs_v"), ref});
            }
            put(p);
            break;
        }
        case Command::Reduce: {
            Table cells = need("reduce_cells.tsv");
            Table p("plot_reduced", {"d", "eps", "value"});
            for (size_t k = 0; k < cells.rows(); ++k)
                p.add_row({cells.num(k, "d"), cells.num(k, "eps"), cells.num(k, "value")});
            put(p);
            Table lim = need("reduce_limit.tsv");
            Table q("plot_reduced_limit", {"d", "limit", "fitted", "analytic"});
            for (size_t k = 0; k < lim.rows(); ++k)
                q.add_row({lim.num(k, "d"), lim.num(k, "limit"), lim.num(k, "fitted"),
                           lim.num(k, "reference")});
            put(q);
            break;
        }
        case Command::Solve:
        case Command::Rates: {
            Table p("plot_delta", {"eps", "delta_fit", "reference", "fitted"});
            if (fs::exists(rd / "rates.tsv")) {
                Table r = need("rates.tsv");
                Table s = need("rates_summary.tsv");
                double d0 = 0, cls = 0;
                for (size_t k = 0; k < s.rows(); ++k) {
                    if (s.str(k, "quantity") == "d0") d0 = s.num(k, "value");
                    if (s.str(k, "quantity") == "c_ls") cls = s.num(k, "value");
                }
                for (size_t k = 0; k < r.rows(); ++k) {
                    double sc = r.num(k, "scale");
                    p.add_row({r.num(k, "eps"), r.num(k, "delta_fit"), d0 * sc, cls * sc});
                }
            }
            put(p);
            break;
        }
    }
}

}  // namespace blowup
