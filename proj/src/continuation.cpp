#include "blowup/continuation.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

#include "blowup/errors.hpp"
#include "blowup/pde_field.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

namespace {

using Vec = Eigen::VectorXd;

Eigen::Map<const Vec> as_vec(const AxiField& f) {
    return Eigen::Map<const Vec>(f.values.data(), f.values.size());
}

double rel_residual(const DiscreteEnergy& E, const Vec& u, Vec& g) {
    const auto& fr = E.quad().free();
    g = E.gradient(u);
    Vec sc = E.gradient_scale(u);
    double rel = 0.0;
    for (Eigen::Index a = 0; a < u.size(); ++a) {
        if (!fr[a]) {
            g(a) = 0.0;
            continue;
        }
        if (sc(a) > 0.0) rel = std::max(rel, std::abs(g(a)) / sc(a));
    }
    return rel;
}

void check_field(const ModelProblem& p, const AxiField& u) {
    u.validate();
    if (u.grid->size() != p.grid->size() || u.grid->n != p.grid->n)
        throw DomainError("grid/field mismatch");
    if (!same_harmonic(u.harmonic, Harmonic::constant(p.grid->n)))
        throw DomainError("the nonlinear problem needs an axisymmetric field");
}

}  // namespace

double certified_residual(const ModelProblem& problem, const AxiField& u) {
    check_field(problem, u);
    AxiQuadrature q(problem.grid, u.harmonic);
    DiscreteEnergy E(problem, q);
    Vec g;
    return rel_residual(E, as_vec(u), g);
}

NewtonResult newton_solve(const ModelProblem& problem, const AxiField& initial,
                          const NewtonOptions& opt) {
    problem.validate();
    check_field(problem, initial);
    AxiQuadrature q(problem.grid, initial.harmonic);
    DiscreteEnergy E(problem, q);
    const auto& fr = q.free();
    Vec u = as_vec(initial);
    for (Eigen::Index a = 0; a < u.size(); ++a)
        if (!fr[a]) u(a) = 0.0;
    NewtonResult res;
    Vec g;
    double rel = rel_residual(E, u, g);
    res.history.push_back(rel);
    int it = 0, damped = 0;
    for (; it < opt.max_iter && !(rel < opt.tol); ++it) {
        SpMat H = E.hessian(u);
        pin_nodes(H, fr);
        Eigen::SparseLU<SpMat> lu;
        lu.analyzePattern(H);
        lu.factorize(H);
        if (lu.info() != Eigen::Success)
            throw NumericalError("newton_solve: singular Jacobian", res.history);
        Vec du = -lu.solve(g);
        const double g0 = g.norm();
        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, alpha *= 0.5) {
            Vec u2 = u + alpha * du, g2;
            double rel2 = rel_residual(E, u2, g2);
            if (g2.allFinite() && g2.norm() <= (1.0 - 1e-4 * alpha) * g0) {
                u = u2;
                g = g2;
                rel = rel2;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (rel < 10.0 * opt.tol) break;
            throw NumericalError("newton_solve: divergence, no descent along the Newton direction",
                                 res.history);
        }
        res.history.push_back(rel);
        // heavily damped steps in a row: outside the basin
        damped = alpha < 0.25 ? damped + 1 : 0;
        if (damped >= 6)
            throw NumericalError("newton_solve: stagnation, six consecutive damped steps",
                                 res.history);
    }
    if (!(rel < 10.0 * opt.tol))
        throw NumericalError("newton_solve: no convergence after " + std::to_string(it) +
                                 " iterations, residual " + num_str(rel),
                             res.history);
    double umax = 0.0, umin = 0.0;
    for (Eigen::Index a = 0; a < u.size(); ++a)
        if (q.volume()(a) > 0.0) {
            umax = std::max(umax, u(a));
            umin = std::min(umin, u(a));
        }
    if (umin < -opt.negative_tol * umax)
        throw NumericalError("newton_solve: negative part exceeds tolerance (min " +
                                 num_str(umin) + ")",
                             res.history);
    res.iterations = it;
    res.residual = rel;
    res.energy = E.value(u);
    res.u = AxiField(problem.grid, initial.harmonic, std::vector<double>(u.data(), u.data() + u.size()));
    return res;
}

namespace {

double bubble_peak_constant(const CurvaturePointData& data) {
    const int n = data.n;
    const double D = data.D();
    return alpha_const(n) * std::pow(std::abs(data.K), -(n - 2) / 4.0) *
           std::pow(D * D - 1.0, -(n - 2) / 2.0);
}

// half-maximum distance from the peak along samples (x_k, v_k), x_k >= 0 increasing;
// interpolates (v / peak)^{-2/(n-2)}, which is linear in x^2 for a bubble
double half_width(const std::vector<double>& x, const std::vector<double>& v, double peak, int n) {
    const double e = -2.0 / (n - 2.0);
    for (size_t k = 1; k < x.size(); ++k)
        if (v[k] <= 0.5 * peak) {
            double w0 = std::pow(std::max(v[k - 1], 1e-300) / peak, e);
            double w1 = std::pow(std::max(v[k], 1e-300) / peak, e);
            double target = std::pow(0.5, e);
            double x0 = x[k - 1] * x[k - 1], x1 = x[k] * x[k];
            double t = w1 != w0 ? (target - w0) / (w1 - w0) : 0.0;
            return std::sqrt(x0 + t * (x1 - x0));
        }
    throw DomainError("fit_blowup: the boundary trace never drops to half its maximum");
}

BlowupFit finish_fit(const CurvaturePointData& data, double peak, double hw, double p) {
    const int n = data.n;
    const double D = data.D();
    BlowupFit f;
    f.peak = peak;
    f.p_fit = p;
    const double b0 = bubble_peak_constant(data);
    f.delta_fit = std::pow(b0 / peak, 2.0 / (n - 2.0));
    f.delta_width = hw / (std::sqrt(D * D - 1.0) * std::sqrt(std::pow(2.0, 2.0 / (n - 2.0)) - 1.0));
    f.amplitude = peak * std::pow(f.delta_width, (n - 2) / 2.0) / b0;
    return f;
}

}  // namespace

BlowupFit fit_blowup(const AxiField& u, const CurvaturePointData& data, double scale) {
    u.validate();
    data.validate();
    const AxiGrid& g = *u.grid;
    if (g.n != data.n) throw DomainError("fit_blowup: dimension mismatch");
    size_t bi = 0, bj = 0;
    double best = -1.0;
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i)
            if (g.active(i, j) && u.at(i, j) > best) {
                best = u.at(i, j);
                bi = i;
                bj = j;
            }
    if (!(best > 0.0)) throw DomainError("fit_blowup: field is not positive");
    if (bj != 0)
        throw DomainError("fit_blowup: interior maximum at z = " + num_str(g.z[bj]) +
                          "; not a boundary blow-up");
    std::vector<double> x, v;
    for (size_t i = bi; i < g.nr() && g.active(i, 0); ++i) {
        x.push_back(g.r[i] - g.r[bi]);
        v.push_back(u.at(i, 0));
    }
    double hw = half_width(x, v, best, g.n);
    if (bi > 0) {
        // average with the inward side when the peak is off the axis
        std::vector<double> xi, vi;
        for (size_t i = bi + 1; i-- > 0;) {
            xi.push_back(g.r[bi] - g.r[i]);
            vi.push_back(u.at(i, 0));
        }
        try {
            hw = 0.5 * (hw + half_width(xi, vi, best, g.n));
        } catch (const DomainError&) {
        }
    }
    BlowupFit f = finish_fit(data, best, hw, g.r[bi]);
    f.delta_fit *= scale;
    f.delta_width *= scale;
    f.p_fit *= scale;
    return f;
}

BlowupFit fit_blowup_line(const std::vector<double>& x, const std::vector<double>& trace,
                          const CurvaturePointData& data) {
    data.validate();
    if (x.size() != trace.size() || x.size() < 3) throw DomainError("fit_blowup_line: bad samples");
    size_t k = std::max_element(trace.begin(), trace.end()) - trace.begin();
    double peak = trace[k];
    if (!(peak > 0.0)) throw DomainError("fit_blowup_line: trace is not positive");
    std::vector<double> xr, vr, xl, vl;
    for (size_t i = k; i < x.size(); ++i) {
        xr.push_back(x[i] - x[k]);
        vr.push_back(trace[i]);
    }
    for (size_t i = k + 1; i-- > 0;) {
        xl.push_back(x[k] - x[i]);
        vl.push_back(trace[i]);
    }
    double hw = 0.5 * (half_width(xr, vr, peak, data.n) + half_width(xl, vl, peak, data.n));
    return finish_fit(data, peak, hw, x[k]);
}

void ContinuationSpec::validate() const {
    model.validate();
    if (eps_path.empty()) throw ConfigError("eps_path", "must not be empty");
    for (size_t k = 0; k < eps_path.size(); ++k) {
        if (!(eps_path[k] > 0.0)) throw ConfigError("eps_path", "values must be positive");
        if (k > 0 && !(eps_path[k] < eps_path[k - 1]))
            throw ConfigError("eps_path", "must be strictly decreasing");
    }
    if (!(d_init >= 0.0)) throw ConfigError("d_init", "must be nonnegative");
    if (!(min_step_ratio > 0.0 && min_step_ratio < 1.0))
        throw ConfigError("min_step_ratio", "must lie in (0, 1)");
    if (!(newton.tol > 0.0)) throw ConfigError("newton.tol", "must be positive");
    if (!(aux.tol > 0.0)) throw ConfigError("aux.tol", "must be positive");
}

AxiField transplant(const AxiField& u, GridPtr to) {
    u.validate();
    const AxiGrid& gs = *u.grid;
    const AxiGrid& gt = *to;
    if (gs.n != gt.n) throw DomainError("transplant: dimension mismatch");
    // cells straddling the half-ball sphere carry inactive (zero) corners
    double R = gs.extent();
    if (gs.kind == DomainKind::HalfBall) {
        double h = std::max(gs.r.back() - gs.r[gs.nr() - 2], gs.z.back() - gs.z[gs.nz() - 2]);
        R -= std::sqrt(2.0) * h;
        if (!(R > 0.0)) throw DomainError("transplant: source grid too coarse");
    }
    const int n = gt.n;
    return sample(to, u.harmonic, [&](double r, double z) {
        double rho = std::hypot(r, z);
        if (rho <= R) return interpolate(u, r, z);
        double f = R / rho;
        return interpolate(u, r * f, z * f) * std::pow(f, n - 2.0);
    });
}

namespace {

AnsatzParams ansatz_for(const FlatModelSpec& model, const FlatFrame& frame, double d) {
    AnsatzParams ap;
    ap.data = frame.center;
    ap.d = d;
    ap.eps = frame.eps;
    ap.ell = frame.ell;
    ap.cutoff_radius = model.cutoff_radius;
    ap.d_interval = {std::min(d, ap.d_interval[0]), std::max(d, ap.d_interval[1])};
    return ap;
}

AxiField ansatz_plus_phi(const FlatModelSpec& model, const FlatFrame& frame, double d,
                         const AuxOptions& aopt, double* multiplier) {
    AnsatzParams ap = ansatz_for(model, frame, d);
    AxiField W = ansatz_field(ap, frame.grid);
    std::vector<AxiField> Z = z_fields(ap, frame.grid);
    AuxResult aux = solve_auxiliary(frame.problem, W, Z, aopt);
    if (multiplier) *multiplier = aux.multipliers(aux.multipliers.size() - 1);
    for (size_t k = 0; k < W.values.size(); ++k) W.values[k] += aux.phi.values[k];
    return W;
}

}  // namespace

NewtonResult solve_by_shooting(const FlatModelSpec& model, const FlatFrame& frame, double d_guess,
                               const NewtonOptions& nopt, const AuxOptions& aopt) {
    auto mult = [&](double d) {
        double c = 0.0;
        ansatz_plus_phi(model, frame, d, aopt, &c);
        return c;
    };
    // bracket a sign change of the multiplier
    double a = d_guess, ca = mult(a);
    double b = a, cb = ca;
    bool found = false;
    for (int k = 0; k < 12 && !found; ++k) {
        double lo = a / std::pow(1.5, k + 1), hi = a * std::pow(1.5, k + 1);
        for (double t : {hi, lo}) {
            double ct;
            try {
                ct = mult(t);
            } catch (const NumericalError&) {
                continue;
            }
            if ((ct > 0.0) != (ca > 0.0)) {
                b = t;
                cb = ct;
                found = true;
                break;
            }
        }
    }
    if (!found) throw NumericalError("solve_by_shooting: no sign change of the multiplier", {ca});
    // Illinois false position
    double d = a;
    int side = 0;
    for (int it = 0; it < 40; ++it) {
        d = (a * cb - b * ca) / (cb - ca);
        double cd = mult(d);
        // Newton polishes the rest; d to 1e-5 is well inside its basin
        if (std::abs(cd) < 1e-8 * (std::abs(ca) + std::abs(cb)) || std::abs(b - a) < 1e-5 * d) break;
        if ((cd > 0.0) == (cb > 0.0)) {
            b = d;
            cb = cd;
            if (side == -1) ca *= 0.5;
            side = -1;
        } else {
            a = d;
            ca = cd;
            if (side == 1) cb *= 0.5;
            side = 1;
        }
    }
    AxiField start = ansatz_plus_phi(model, frame, d, aopt, nullptr);
    return newton_solve(frame.problem, start, nopt);
}

namespace {

ContinuationStep make_step(const FlatFrame& fr, NewtonResult&& nr, const char* method, bool requested) {
    ContinuationStep st;
    st.eps = fr.eps;
    st.ell = fr.ell;
    st.iterations = nr.iterations;
    st.residual = nr.residual;
    st.energy = nr.energy;
    st.method = method;
    st.requested = requested;
    st.u = std::move(nr.u);
    double mn = std::numeric_limits<double>::infinity();
    const AxiGrid& g = *st.u.grid;
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i)
            if (g.active(i, j)) mn = std::min(mn, st.u.at(i, j));
    st.min_value = mn;
    st.fit = fit_blowup(st.u, fr.center, fr.ell);
    return st;
}

}  // namespace

ContinuationRun continuation(const ContinuationSpec& spec) {
    spec.validate();
    ContinuationRun run;
    run.spec = spec;
    const CurvaturePointData c0 = spec.model.center_data();
    const double d0 = spec.d_init > 0.0 ? spec.d_init : optimal_d(c0, 0.0);

    auto attempt = [&](double eps, const AxiField* warm, double d_guess, bool requested,
                       std::string& why) -> bool {
        FlatFrame fr = make_frame(spec.model, eps);
        try {
            AxiField start = warm ? transplant(*warm, fr.grid)
                                  : ansatz_plus_phi(spec.model, fr, d_guess, spec.aux, nullptr);
            run.steps.push_back(make_step(fr, newton_solve(fr.problem, start, spec.newton), "newton",
                                          requested));
            return true;
        } catch (const std::exception& e) {
            why = e.what();
        }
        if (!spec.shooting_fallback) return false;
        try {
            run.steps.push_back(make_step(
                fr, solve_by_shooting(spec.model, fr, d_guess, spec.newton, spec.aux), "shooting",
                requested));
            return true;
        } catch (const std::exception& e) {
            why += "; shooting: " + std::string(e.what());
        }
        return false;
    };

    std::string why;
    if (!attempt(spec.eps_path[0], nullptr, d0, true, why)) {
        run.complete = false;
        run.failure = "eps = " + num_str(spec.eps_path[0]) + ": " + why;
        return run;
    }
    for (size_t k = 1; k < spec.eps_path.size(); ++k) {
        const double target = spec.eps_path[k];
        const double floor = spec.min_step_ratio * (spec.eps_path[k - 1] - target);
        while (run.steps.back().eps > target) {
            const ContinuationStep& prev = run.steps.back();
            double next = target;
            bool ok = false;
            while (true) {
                double dprev = prev.fit.delta_fit / prev.ell;
                if (attempt(next, &prev.u, dprev, next == target, why)) {
                    ok = true;
                    break;
                }
                double mid = 0.5 * (prev.eps + next);
                if (prev.eps - mid < floor) break;
                next = mid;
            }
            if (!ok) {
                run.complete = false;
                run.failure = "eps = " + num_str(next) + ": bisection floor reached; " + why;
                return run;
            }
        }
    }
    return run;
}

RateReport verify_rate(int n, const std::vector<double>& eps, const std::vector<double>& delta,
                       const std::vector<double>& p_dist, const std::vector<double>& amplitude,
                       double d0) {
    const size_t m = eps.size();
    if (m < 3) throw DomainError("verify_rate: need at least 3 converged eps values");
    if (delta.size() != m || p_dist.size() != m || amplitude.size() != m)
        throw DomainError("verify_rate: column length mismatch");
    RateReport r;
    r.n = n;
    r.d0 = d0;
    r.eps = eps;
    r.delta = delta;
    std::vector<double> t, sc;
    double num = 0.0, den = 0.0;
    for (size_t k = 0; k < m; ++k) {
        double s = concentration_scale(n, eps[k]);
        sc.push_back(s);
        r.ratio.push_back(delta[k] / s);
        t.push_back(n >= 5 ? eps[k] : 1.0 / std::abs(std::log(s)));
        num += delta[k] * s;
        den += s * s;
    }
    r.c_ls = num / den;
    r.c_extrap = extrapolate_to_zero(t, r.ratio, 1).limit;
    r.gap = std::abs(r.c_extrap - d0) / d0;
    r.gap_ls = std::abs(r.c_ls - d0) / d0;
    r.power_q = richardson_fit(eps, delta, RateModel::Power).q;
    r.ratio_converging = true;
    for (size_t k = 2; k < m; ++k)
        if (std::abs(r.ratio[k] - r.ratio[k - 1]) > std::abs(r.ratio[k - 1] - r.ratio[k - 2]))
            r.ratio_converging = false;
    auto log_residual = [&](const std::vector<double>& base) {
        double mean = 0.0;
        for (size_t k = 0; k < m; ++k) mean += std::log(delta[k] / base[k]);
        mean /= m;
        double s = 0.0;
        for (size_t k = 0; k < m; ++k) {
            double e = std::log(delta[k] / base[k]) - mean;
            s += e * e;
        }
        return std::sqrt(s);
    };
    std::vector<double> rho;
    for (double e : eps) rho.push_back(rho_of_eps(std::min(e, std::exp(-1.0))));
    r.residual_rho = log_residual(rho);
    r.residual_eps = log_residual(eps);
    r.p_drift = p_dist;
    r.p_monotone = true;
    for (size_t k = 1; k < m; ++k)
        if (p_dist[k] > p_dist[k - 1]) r.p_monotone = false;
    r.amplitude = amplitude;
    double mn = *std::min_element(amplitude.begin(), amplitude.end());
    double mx = *std::max_element(amplitude.begin(), amplitude.end());
    double mean = 0.0;
    for (double a : amplitude) mean += a;
    mean /= m;
    r.amplitude_spread = (mx - mn) / mean;
    return r;
}

RateReport verify_rate(const ContinuationRun& run, const CurvaturePointData& data, double f_term) {
    std::vector<double> eps, delta, p, amp;
    for (const auto& st : run.steps) {
        eps.push_back(st.eps);
        delta.push_back(st.fit.delta_fit);
        p.push_back(st.fit.p_fit);
        amp.push_back(st.fit.amplitude);
    }
    return verify_rate(data.n, eps, delta, p, amp, optimal_d(data, f_term));
}

}  // namespace blowup
