#include "blowup/reduction.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "blowup/pde_field.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

double AnsatzParams::scale() const { return ell > 0.0 ? ell : concentration_scale(data.n, eps); }

double AnsatzParams::delta() const { return scale() * d; }

void AnsatzParams::validate() const {
    data.validate();
    if (!(eps >= 0.0)) throw ConfigError("eps", "must be nonnegative");
    if (!(d_interval[0] > 0.0 && d_interval[1] > d_interval[0]))
        throw ConfigError("d_interval", "need 0 < a < b");
    if (!(d >= d_interval[0] && d <= d_interval[1]))
        throw ConfigError("d", "outside the declared interval [a, b]");
    if (!(cutoff_radius > 0.0)) throw ConfigError("cutoff_radius", "must be positive");
    if (!(scale() > 0.0)) throw ConfigError("ell", "must be positive");
}

double cutoff(double t, double R) {
    double s = (t - 0.5 * R) / (0.5 * R);
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double cutoff_derivative(double t, double R) {
    double s = (t - 0.5 * R) / (0.5 * R);
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return -30.0 * s * s * (1.0 - s) * (1.0 - s) / (0.5 * R);
}

namespace {

void check_core(const AnsatzParams& p, const AxiGrid& g) {
    if (g.n != p.data.n) throw DomainError("ansatz: grid dimension mismatch");
    size_t core = std::count_if(g.r.begin(), g.r.end(), [&](double r) { return r <= p.d; });
    if (core < 8)
        throw DomainError("ansatz: delta too small for the grid (" + std::to_string(core) +
                          " nodes across the bubble core, need 8)");
}

BubbleParams scaled_bubble(const AnsatzParams& p, double delta) {
    BubbleParams b = BubbleParams::from(p.data, delta);
    return b;
}

}  // namespace

AxiField ansatz_field(const AnsatzParams& params, GridPtr grid, const AxiField* vp) {
    params.validate();
    check_core(params, *grid);
    const int n = params.data.n;
    const double l = params.scale(), d = params.d;
    const double Rc = params.cutoff_radius / l;
    BubbleProfile U(scaled_bubble(params, d));
    const bool use_vp = vp && !vp->harmonic.is_zero() &&
                        std::any_of(vp->values.begin(), vp->values.end(),
                                    [](double v) { return v != 0.0; });
    if (use_vp && !same_harmonic(vp->harmonic, Harmonic::constant(n)))
        throw DomainError("ansatz_field: only a mode-0 correction fits the axisymmetric frame");
    const double cv = l * d * std::pow(d, -(n - 2) / 2.0);
    return sample(grid, Harmonic::constant(n), [&](double r, double z) {
        double w = U.value(r, z);
        if (use_vp) w += cv * interpolate(*vp, r / d, z / d);
        return cutoff(std::hypot(r, z), Rc) * w;
    });
}

std::vector<AxiField> z_fields(const AnsatzParams& params, GridPtr grid) {
    params.validate();
    check_core(params, *grid);
    const int n = params.data.n;
    const double l = params.scale(), d = params.d;
    const double Rc = params.cutoff_radius / l;
    BubbleProfile U1(scaled_bubble(params, 1.0));
    const double s = std::pow(d, -(n - 2) / 2.0);
    std::vector<AxiField> z;
    for (int i = 0; i < n - 1; ++i)
        z.push_back(sample(grid, Harmonic::coordinate(n, i), [&](double r, double zz) {
            return cutoff(std::hypot(r, zz), Rc) * s * U1.kernel_mode1(r / d, zz / d);
        }));
    z.push_back(sample(grid, Harmonic::constant(n), [&](double r, double zz) {
        return cutoff(std::hypot(r, zz), Rc) * s * U1.kernel_n(r / d, zz / d);
    }));
    return z;
}

namespace {

using Vec = Eigen::VectorXd;

Eigen::Map<const Vec> as_vec(const AxiField& f) {
    return Eigen::Map<const Vec>(f.values.data(), f.values.size());
}

void check_on(const ModelProblem& p, const AxiField& f, const char* who) {
    f.validate();
    if (f.grid->size() != p.grid->size() || f.grid->n != p.grid->n)
        throw DomainError(std::string(who) + ": grid/field mismatch");
}

// <a, b> using the quadrature of a's harmonic
double h1_with(const ModelProblem& problem, const AxiQuadrature& qa, const AxiField& a,
               const AxiField& b) {
    double ab = angular_average(a.harmonic, b.harmonic);
    if (ab == 0.0) return 0.0;
    double aa = angular_average(a.harmonic, a.harmonic);
    Eigen::Map<const Vec> x = as_vec(a), y = as_vec(b);
    double s = conformal_constant(problem.grid->n) * qa.dirichlet(x, y);
    const Vec& V = qa.volume();
    for (Eigen::Index k = 0; k < x.size(); ++k) s += problem.s_g[k] * V(k) * x(k) * y(k);
    return s * ab / aa;
}

}  // namespace

double h1_inner(const ModelProblem& problem, const AxiField& a, const AxiField& b) {
    check_on(problem, a, "h1_inner");
    check_on(problem, b, "h1_inner");
    if (a.mode() != b.mode()) return 0.0;
    AxiQuadrature qa(problem.grid, a.harmonic);
    return h1_with(problem, qa, a, b);
}

Eigen::MatrixXd gram_matrix(const ModelProblem& problem, const std::vector<AxiField>& z) {
    const size_t m = z.size();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    for (size_t i = 0; i < m; ++i) {
        check_on(problem, z[i], "gram_matrix");
        AxiQuadrature qi(problem.grid, z[i].harmonic);
        for (size_t j = i; j < m; ++j)
            if (z[i].mode() == z[j].mode()) G(i, j) = G(j, i) = h1_with(problem, qi, z[i], z[j]);
    }
    return G;
}

Projection project(const ModelProblem& problem, const AxiField& phi, const std::vector<AxiField>& z) {
    check_on(problem, phi, "project");
    Eigen::MatrixXd G = gram_matrix(problem, z);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double emax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (!(emax > 0.0) || es.eigenvalues().minCoeff() <= 1e-12 * emax)
        throw NumericalError("project: singular Gram matrix (grid too coarse)");
    Vec b(z.size());
    AxiQuadrature qp(problem.grid, phi.harmonic);
    for (size_t i = 0; i < z.size(); ++i)
        b(i) = phi.mode() == z[i].mode() ? h1_with(problem, qp, phi, z[i]) : 0.0;
    Projection out;
    out.coeffs = G.ldlt().solve(b);
    out.orth = phi;
    for (size_t i = 0; i < z.size(); ++i) {
        if (out.coeffs(i) == 0.0) continue;
        if (!same_harmonic(z[i].harmonic, phi.harmonic))
            throw DomainError("project: the field mixes angular factors; project each factor");
        for (size_t k = 0; k < phi.values.size(); ++k)
            out.orth.values[k] -= out.coeffs(i) * z[i].values[k];
    }
    return out;
}

AuxResult solve_auxiliary(const ModelProblem& problem, const AxiField& w,
                          const std::vector<AxiField>& z, const AuxOptions& opt,
                          const AxiField* initial, const std::vector<double>* defect) {
    problem.validate();
    check_on(problem, w, "solve_auxiliary");
    const int n = problem.grid->n;
    if (!same_harmonic(w.harmonic, Harmonic::constant(n)))
        throw DomainError("solve_auxiliary: the ansatz must be axisymmetric");
    AxiQuadrature q(problem.grid, w.harmonic);
    DiscreteEnergy E(problem, q);
    const SpMat M = E.h1_matrix();
    const auto& fr = q.free();
    const Eigen::Index N = static_cast<Eigen::Index>(w.values.size());

    // constraints of the same angular factor; the others hold by symmetry
    std::vector<size_t> idx;
    for (size_t i = 0; i < z.size(); ++i) {
        check_on(problem, z[i], "solve_auxiliary");
        if (same_harmonic(z[i].harmonic, w.harmonic)) idx.push_back(i);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd B(N, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        Vec col = M * as_vec(z[idx[k]]);
        for (Eigen::Index a = 0; a < N; ++a)
            if (!fr[a]) col(a) = 0.0;
        B.col(k) = col;
    }

    Eigen::Map<const Vec> W = as_vec(w);
    Vec tau = Vec::Zero(N);
    if (defect) {
        if (defect->size() != w.values.size()) throw DomainError("solve_auxiliary: defect size mismatch");
        tau = Eigen::Map<const Vec>(defect->data(), N);
    }
    Vec phi = Vec::Zero(N);
    if (initial) {
        check_on(problem, *initial, "solve_auxiliary");
        phi = as_vec(*initial);
        // start inside the constraint set
        if (m > 0) {
            Eigen::MatrixXd Zm(N, m);
            for (Eigen::Index k = 0; k < m; ++k) Zm.col(k) = as_vec(z[idx[k]]);
            Vec c = (B.transpose() * Zm).ldlt().solve(B.transpose() * phi);
            phi -= Zm * c;
        }
    }
    for (Eigen::Index a = 0; a < N; ++a)
        if (!fr[a]) phi(a) = 0.0;
    Vec c = Vec::Zero(m);

    auto eval = [&](const Vec& ph, const Vec& cc, Vec& g, double& rel) {
        Vec u = W + ph;
        g = E.gradient(u) + B * cc - tau;
        Vec sc = E.gradient_scale(u) + (B * cc).cwiseAbs() + tau.cwiseAbs();
        rel = 0.0;
        for (Eigen::Index a = 0; a < N; ++a) {
            if (!fr[a]) {
                g(a) = 0.0;
                continue;
            }
            if (sc(a) > 0.0) rel = std::max(rel, std::abs(g(a)) / sc(a));
        }
    };
    auto constraint_rel = [&](const Vec& ph) {
        if (m == 0) return 0.0;
        double bn = B.norm(), pn = ph.norm();
        return bn * pn > 0.0 ? (B.transpose() * ph).cwiseAbs().maxCoeff() / (bn * pn) : 0.0;
    };

    AuxResult res;
    Vec g;
    double rel = 0.0;
    eval(phi, c, g, rel);
    res.history.push_back(rel);
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        if (rel < opt.tol && constraint_rel(phi) < 1e-10) break;
        // bordered system [H B; B^T 0], assembled whole: H alone is nearly
        // singular along the constrained directions
        SpMat Hs = E.hessian(W + phi);
        pin_nodes(Hs, fr);
        SpMat Kb(N + m, N + m);
        {
            std::vector<Eigen::Triplet<double>> trip;
            trip.reserve(Hs.nonZeros() + 2 * m * N + m);
            for (int k = 0; k < Hs.outerSize(); ++k)
                for (SpMat::InnerIterator itr(Hs, k); itr; ++itr)
                    trip.emplace_back(itr.row(), itr.col(), itr.value());
            for (Eigen::Index k = 0; k < m; ++k)
                for (Eigen::Index a = 0; a < N; ++a)
                    if (B(a, k) != 0.0) {
                        trip.emplace_back(a, N + k, B(a, k));
                        trip.emplace_back(N + k, a, B(a, k));
                    }
            Kb.setFromTriplets(trip.begin(), trip.end());
        }
        Eigen::SparseLU<SpMat> lu;
        lu.analyzePattern(Kb);
        lu.factorize(Kb);
        if (lu.info() != Eigen::Success)
            throw NumericalError("solve_auxiliary: singular bordered Jacobian", res.history);
        Vec rhs(N + m);
        rhs.head(N) = -g;
        if (m > 0) rhs.tail(m) = -(B.transpose() * phi);
        Vec sol = lu.solve(rhs);
        Vec dphi = sol.head(N), dc = sol.tail(m);
        const double g0 = g.norm();
        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, alpha *= 0.5) {
            Vec ph2 = phi + alpha * dphi, c2 = c + alpha * dc;
            Vec g2;
            double rel2;
            eval(ph2, c2, g2, rel2);
            if (g2.allFinite() && g2.norm() <= (1.0 - 1e-4 * alpha) * g0) {
                phi = ph2;
                c = c2;
                g = g2;
                rel = rel2;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // stagnation: large graded grids bottom out near 1e-7
            if (rel < std::max(10.0 * opt.tol, opt.stall_tol)) break;
            throw NumericalError("solve_auxiliary: no descent along the Newton direction, "
                                 "relative residual " + num_str(rel),
                                 res.history);
        }
        res.history.push_back(rel);
    }
    if (!(rel < 10.0 * opt.tol) && !(it < opt.max_iter && rel < opt.stall_tol))
        throw NumericalError("solve_auxiliary: no contraction after " + std::to_string(it) +
                                 " iterations, relative residual " + num_str(rel),
                             res.history);
    res.iterations = it;
    res.residual = rel;
    res.phi = AxiField(problem.grid, w.harmonic, std::vector<double>(phi.data(), phi.data() + N));
    res.norm = std::sqrt(std::max(0.0, phi.dot(M * phi)));
    res.multipliers = Vec::Zero(z.size());
    for (Eigen::Index k = 0; k < m; ++k) res.multipliers(idx[k]) = c(k);
    return res;
}

double energy_J(const ModelProblem& problem, const AxiField& u) {
    check_on(problem, u, "energy_J");
    AxiQuadrature q(problem.grid, u.harmonic);
    DiscreteEnergy E(problem, q);
    return E.value(as_vec(u));
}

double reduced_energy(const ModelProblem& problem, const AxiField& w, const AxiField& phi) {
    check_on(problem, phi, "reduced_energy");
    AxiField u = w;
    for (size_t k = 0; k < u.values.size(); ++k) u.values[k] += phi.values[k];
    return energy_J(problem, u);
}

double ansatz_energy_quadrature(const FlatModelSpec& spec, const AnsatzParams& params,
                                double rel_tol) {
    params.validate();
    const int n = params.data.n;
    const double l = params.scale(), d = params.d;
    const double Rc = params.cutoff_radius / l;
    const double cn = conformal_constant(n), ps = crit_exponent(n), pt = crit_trace_exponent(n);
    const double s_y = spec.s_model * l * l, eps_y = params.eps * l;
    BubbleProfile U(BubbleParams::from(params.data, d));
    auto interior = [&](double r, double z) {
        double rho = std::hypot(r, z);
        double chi = cutoff(rho, Rc);
        if (chi == 0.0) return 0.0;
        double dchi = cutoff_derivative(rho, Rc);
        double u = U.value(r, z);
        double gr = chi * U.d_r(r, z) + (rho > 0.0 ? u * dchi * r / rho : 0.0);
        double gz = chi * U.d_z(r, z) + (rho > 0.0 ? u * dchi * z / rho : 0.0);
        double w = chi * u;
        return 0.5 * cn * (gr * gr + gz * gz) + 0.5 * s_y * w * w -
               spec.K_phys(l * r, l * z) * std::pow(w, ps) / ps;
    };
    auto boundary = [&](double r) {
        double w = cutoff(r, Rc) * U.value(r, 0.0);
        return -(n - 2.0) * spec.H_phys(l * r) * std::pow(w, pt) + (n - 1.0) * eps_y * w * w;
    };
    QuadratureSpec qs;
    qs.support_radius = Rc;
    qs.breaks = {d, 0.5 * Rc};
    qs.rel_tol = rel_tol;
    qs.abs_tol = 1e-300;
    QuadResult a = halfspace_integral(n, interior, qs);
    QuadResult b = boundary_integral(n, boundary, qs);
    return a.value + b.value;
}

ExpansionFit fit_expansion(int n, const std::vector<double>& d_grid,
                           const std::vector<double>& eps_seq,
                           const std::vector<std::vector<double>>& values, int order) {
    if (eps_seq.size() < 3) throw DomainError("fit_expansion: need at least 3 eps values");
    for (size_t k = 1; k < eps_seq.size(); ++k)
        if (!(eps_seq[k] < eps_seq[k - 1]))
            throw DomainError("fit_expansion: eps sequence must be decreasing");
    if (d_grid.size() < 2) throw DomainError("fit_expansion: need at least 2 d values");
    if (values.size() != d_grid.size()) throw DomainError("fit_expansion: table shape mismatch");
    std::vector<double> t;
    for (double e : eps_seq) t.push_back(n == 4 ? 1.0 / std::abs(std::log(rho_of_eps(e))) : e);
    ExpansionFit fit;
    fit.d = d_grid;
    for (size_t i = 0; i < d_grid.size(); ++i) {
        if (values[i].size() != eps_seq.size())
            throw DomainError("fit_expansion: table shape mismatch");
        Extrapolation ex = extrapolate_to_zero(t, values[i], order);
        fit.limit.push_back(ex.limit);
        fit.correction.push_back(ex.last_correction);
    }
    double scale = 0.0;
    for (double v : fit.limit) scale = std::max(scale, std::abs(v));
    for (size_t i = 0; i < d_grid.size(); ++i)
        if (!std::isfinite(fit.limit[i]) || fit.correction[i] > 0.5 * scale) {
            std::string diag = "fit_expansion: extrapolation does not converge at d = " +
                               num_str(d_grid[i]) + " (limit " +
                               num_str(fit.limit[i]) + ", last correction " +
                               num_str(fit.correction[i]) + ")";
            throw NumericalError(diag, values[i]);
        }
    Eigen::MatrixXd X(d_grid.size(), 2);
    Vec y(d_grid.size());
    for (size_t i = 0; i < d_grid.size(); ++i) {
        X(i, 0) = d_grid[i];
        X(i, 1) = -d_grid[i] * d_grid[i];
        y(i) = fit.limit[i];
    }
    Vec coef = X.colPivHouseholderQr().solve(y);
    fit.C = coef(0);
    fit.A = coef(1);
    fit.fit_residual = (X * coef - y).norm();
    fit.d_fit = fit.A > 0.0 ? fit.C / (2.0 * fit.A) : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

std::vector<double> bubble_defect(const FlatModelSpec& spec, const FlatFrame& frame, double d) {
    const CurvaturePointData& c = frame.center;
    ModelProblem P0 = ModelProblem::constant(frame.grid, spec.s_model * frame.ell * frame.ell, c.K,
                                             c.H, 0.0);
    AxiField U = sample_bubble(frame.grid, BubbleParams::from(c, d));
    AxiQuadrature q(frame.grid, U.harmonic);
    DiscreteEnergy E(P0, q);
    Vec g = E.gradient(as_vec(U));
    for (Eigen::Index a = 0; a < g.size(); ++a)
        if (!q.free()[a]) g(a) = 0.0;
    return std::vector<double>(g.data(), g.data() + g.size());
}

ExpansionCell expansion_cell(const FlatModelSpec& spec, double d, double eps,
                             const ExpansionOptions& opt) {
    if (!(eps > 0.0)) throw ConfigError("eps", "must be positive");
    FlatFrame fr = make_frame(spec, eps);
    AnsatzParams ap;
    ap.data = fr.center;
    ap.d = d;
    ap.eps = eps;
    ap.cutoff_radius = spec.cutoff_radius;
    ap.ell = fr.ell;
    ap.d_interval = {std::min(d, ap.d_interval[0]), std::max(d, ap.d_interval[1])};

    ExpansionCell c;
    c.d = d;
    c.eps = eps;
    c.zeta = zeta(spec.data.n, eps);
    c.j_quad = ansatz_energy_quadrature(spec, ap);
    if (opt.with_correction) {
        AxiField W = ansatz_field(ap, fr.grid);
        std::vector<AxiField> Z = z_fields(ap, fr.grid);
        std::vector<double> tau = bubble_defect(spec, fr, d);
        AuxResult aux = solve_auxiliary(fr.problem, W, Z, opt.aux, nullptr, &tau);
        double dt = 0.0;
        for (size_t k = 0; k < tau.size(); ++k) dt += tau[k] * aux.phi.values[k];
        c.dj = reduced_energy(fr.problem, W, aux.phi) - energy_J(fr.problem, W) - dt;
        c.phi_norm = aux.norm;
        c.multiplier = aux.multipliers(aux.multipliers.size() - 1);
        c.aux_iterations = aux.iterations;
    }
    c.j_reduced = c.j_quad + c.dj;
    c.value = (c.j_reduced - bubble_energy(fr.center)) / c.zeta;
    return c;
}

ExpansionReport expansion_check(const FlatModelSpec& spec, const std::vector<double>& d_grid,
                                const std::vector<double>& eps_seq, const ExpansionOptions& opt) {
    spec.validate();
    if (eps_seq.size() < 3) throw ConfigError("eps_seq", "need at least 3 values");
    for (size_t k = 1; k < eps_seq.size(); ++k)
        if (!(eps_seq[k] < eps_seq[k - 1])) throw ConfigError("eps_seq", "must be decreasing");
    ExpansionReport rep;
    CurvaturePointData c = spec.center_data();
    rep.E = bubble_energy(c);
    rep.A_ref = coeff_A(c, 0.0);
    rep.C_ref = coeff_C(c);
    rep.d0_ref = optimal_d(rep.A_ref, rep.C_ref);
    const size_t nd = d_grid.size(), ne = eps_seq.size();
    rep.cells.resize(nd * ne);
    parallel_for(
        nd * ne,
        [&](size_t k) { rep.cells[k] = expansion_cell(spec, d_grid[k / ne], eps_seq[k % ne], opt); },
        opt.threads);
    std::vector<std::vector<double>> table(nd, std::vector<double>(ne));
    for (size_t k = 0; k < nd * ne; ++k) table[k / ne][k % ne] = rep.cells[k].value;
    rep.fit = fit_expansion(spec.data.n, d_grid, eps_seq, table, opt.extrapolation_order);
    rep.gap_A = std::abs(rep.fit.A - rep.A_ref) / rep.A_ref;
    rep.gap_C = std::abs(rep.fit.C - rep.C_ref) / rep.C_ref;
    rep.gap_d0 = std::abs(rep.fit.d_fit - rep.d0_ref) / rep.d0_ref;
    return rep;
}

MaximizeResult maximize_reduced(const std::function<double(double, double)>& J,
                                const SearchBox& box, const MaximizeOptions& opt) {
    if (!(box.s_hi > box.s_lo) || !(box.d_hi > box.d_lo) || !(box.d_lo > 0.0))
        throw ConfigError("box", "need s_lo < s_hi and 0 < d_lo < d_hi");
    if (opt.ns < 5 || opt.nd < 5) throw ConfigError("grid", "need at least 5 points per axis");
    MaximizeResult res;
    double s_lo = box.s_lo, s_hi = box.s_hi, d_lo = box.d_lo, d_hi = box.d_hi;
    for (int level = 0; level <= opt.refinements; ++level) {
        const double hs = (s_hi - s_lo) / (opt.ns - 1), hd = (d_hi - d_lo) / (opt.nd - 1);
        std::vector<double> vals(static_cast<size_t>(opt.ns) * opt.nd);
        parallel_for(
            vals.size(),
            [&](size_t k) {
                double s = s_lo + hs * static_cast<double>(k / opt.nd);
                double d = d_lo + hd * static_cast<double>(k % opt.nd);
                vals[k] = J(s, d);
            },
            opt.threads);
        size_t best = 0;
        for (size_t k = 1; k < vals.size(); ++k)
            if (vals[k] > vals[best]) best = k;
        MaximizeLevel lv;
        lv.s = s_lo + hs * static_cast<double>(best / opt.nd);
        lv.d = d_lo + hd * static_cast<double>(best % opt.nd);
        lv.value = vals[best];
        lv.cell_s = hs;
        lv.cell_d = hd;
        lv.margin_s = std::min(lv.s - box.s_lo, box.s_hi - lv.s);
        lv.margin_d = std::min(lv.d - box.d_lo, box.d_hi - lv.d);
        res.history.push_back(lv);
        const double tol = 1e-9;
        std::string face;
        if (lv.s - box.s_lo <= hs * (1.0 + tol)) face = "s = s_lo";
        else if (box.s_hi - lv.s <= hs * (1.0 + tol)) face = "s = s_hi";
        else if (lv.d - box.d_lo <= hd * (1.0 + tol)) face = "d = d_lo";
        else if (box.d_hi - lv.d <= hd * (1.0 + tol)) face = "d = d_hi";
        if (!face.empty())
            throw NumericalError("maximize_reduced: maximizer within one cell of the face " + face +
                                     " of the compact set",
                                 {lv.s, lv.d, lv.value});
        s_lo = std::max(box.s_lo, lv.s - 2.0 * hs);
        s_hi = std::min(box.s_hi, lv.s + 2.0 * hs);
        d_lo = std::max(box.d_lo, lv.d - 2.0 * hd);
        d_hi = std::min(box.d_hi, lv.d + 2.0 * hd);
    }
    res.s = res.history.back().s;
    res.d = res.history.back().d;
    res.value = res.history.back().value;
    return res;
}

std::function<double(double, double)> flat_reduced_energy(const FlatModelSpec& spec, double eps) {
    spec.validate();
    return [spec, eps](double s, double d) {
        FlatModelSpec sh = spec;
        sh.shift = s;
        AnsatzParams ap;
        ap.data = sh.center_data();
        ap.d = d;
        ap.eps = eps;
        ap.cutoff_radius = sh.cutoff_radius;
        ap.d_interval = {std::min(d, ap.d_interval[0]), std::max(d, ap.d_interval[1])};
        return ansatz_energy_quadrature(sh, ap);
    };
}

}  // namespace blowup
