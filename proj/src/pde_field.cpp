#include "blowup/pde_field.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blowup/errors.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& x, int m) {
    const int np = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(m + 1, std::vector<double>(np, 0.0));
    double c1 = 1.0, c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < np; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0, c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c;
}

namespace {

struct Derivs {
    double ur, urr, uz, uzz;
};

// Centered stencils of 2w+1 points where possible, 2w+2 one-sided near
// edges (order 2w); the axis is handled by parity mirrors, sign (-1)^mode.
class Stencils {
public:
    Stencils(const AxiGrid& g, int mode, int order)
        : g_(g), sign_(mode % 2 ? -1.0 : 1.0), w_(order / 2) {
        if (order != 4 && order != 6) throw DomainError("residual: stencil order must be 4 or 6");
    }

    Derivs at(const std::vector<double>& u, size_t i, size_t j) const {
        Derivs d{};
        // r direction, extended index k in [-(nr-1), nr-1]
        const long nr = static_cast<long>(g_.nr());
        long lo = static_cast<long>(i) - w_, hi = static_cast<long>(i) + w_;
        if (hi > nr - 1) {
            hi = nr - 1;
            lo = hi - 2 * w_ - 1;
        }
        std::vector<double> xs, vs;
        for (long k = lo; k <= hi; ++k) {
            if (k >= 0) {
                xs.push_back(g_.r[k]);
                vs.push_back(u[g_.index(k, j)]);
            } else {
                xs.push_back(-g_.r[-k]);
                vs.push_back(sign_ * u[g_.index(-k, j)]);
            }
        }
        auto w = fd_weights(g_.r[i], xs, 2);
        for (size_t k = 0; k < xs.size(); ++k) {
            d.ur += w[1][k] * vs[k];
            d.urr += w[2][k] * vs[k];
        }
        const long nz = static_cast<long>(g_.nz());
        long zl = static_cast<long>(j) - w_, zh = static_cast<long>(j) + w_;
        if (zl < 0) {
            zl = 0;
            zh = 2 * w_ + 1;
        }
        if (zh > nz - 1) {
            zh = nz - 1;
            zl = zh - 2 * w_ - 1;
        }
        xs.clear();
        vs.clear();
        for (long k = zl; k <= zh; ++k) {
            xs.push_back(g_.z[k]);
            vs.push_back(u[g_.index(i, k)]);
        }
        auto wz = fd_weights(g_.z[j], xs, 2);
        for (size_t k = 0; k < xs.size(); ++k) d.uzz += wz[2][k] * vs[k];
        // first derivative: 2w+1 one-sided points already give order 2w
        if (j == 0) {
            std::vector<double> x5(xs.begin(), xs.begin() + 2 * w_ + 1);
            auto w5 = fd_weights(g_.z[0], x5, 1);
            for (size_t k = 0; k < x5.size(); ++k) d.uz += w5[1][k] * vs[k];
        } else {
            for (size_t k = 0; k < xs.size(); ++k) d.uz += wz[1][k] * vs[k];
        }
        return d;
    }

    double laplacian(const Derivs& d, double uval, size_t i, int mode) const {
        const int n = g_.n;
        double lam = mode * (mode + n - 3.0);
        if (i == 0) return (n - 1.0) * d.urr + d.uzz;  // mode 0 only
        double r = g_.r[i];
        return d.urr + (n - 2.0) / r * d.ur - lam / (r * r) * uval + d.uzz;
    }

    int half_width() const { return w_; }

private:
    const AxiGrid& g_;
    double sign_;
    int w_;
};

inline double pos(double u) { return u > 0.0 ? u : 0.0; }

bool inside_margin(const AxiGrid& g, size_t i, size_t j, size_t margin) {
    return i + margin < g.nr() && j + margin < g.nz() && g.active(i, j);
}

bool interior_stencil_ok(const AxiGrid& g, size_t i, size_t j, int w) {
    if (g.kind == DomainKind::HalfSpaceTruncated) return true;
    // every stencil node must be active
    for (long di = -w; di <= w; ++di) {
        long ii = static_cast<long>(i) + di;
        if (ii < 0) ii = -ii;
        if (ii >= static_cast<long>(g.nr()) || !g.active(ii, j)) return false;
    }
    long jlo = std::max(0L, static_cast<long>(j) - w);
    long jhi = std::min(static_cast<long>(g.nz()) - 1, static_cast<long>(j) + 2 * w + 1);
    for (long jj = jlo; jj <= jhi; ++jj)
        if (!g.active(i, jj)) return false;
    return true;
}

}  // namespace

Residual residual(const ModelProblem& problem, const AxiField& u, ResidualScheme scheme,
                  size_t margin) {
    problem.validate();
    u.validate();
    if (u.grid->size() != problem.grid->size() || u.grid->n != problem.grid->n)
        throw DomainError("residual: grid/field mismatch");
    if (u.mode() != 0 || !same_harmonic(u.harmonic, Harmonic::constant(u.grid->n)))
        throw DomainError("residual: the nonlinear residual needs an axisymmetric field");
    const AxiGrid& g = *problem.grid;
    const int n = g.n;
    const double cn = conformal_constant(n);
    const double p = (n + 2.0) / (n - 2.0), pf = n / (n - 2.0);
    Residual res{AxiField::zeros(problem.grid), std::vector<double>(g.nr(), 0.0)};

    if (scheme == ResidualScheme::Variational) {
        AxiQuadrature q(problem.grid, u.harmonic);
        DiscreteEnergy E(problem, q);
        Eigen::Map<const Eigen::VectorXd> uv(u.values.data(), u.values.size());
        Eigen::VectorXd gr = E.gradient(uv);
        for (size_t j = 0; j < g.nz(); ++j)
            for (size_t i = 0; i < g.nr(); ++i) {
                size_t a = g.index(i, j);
                if (q.volume()(a) == 0.0) continue;
                bool counted = inside_margin(g, i, j, margin);
                if (j == 0) {
                    double b = gr(a) / (2.0 * (n - 1.0) * q.area()(a));
                    res.boundary[i] = b;
                    if (counted) res.boundary_max = std::max(res.boundary_max, std::abs(b));
                } else {
                    double v = gr(a) / q.volume()(a);
                    res.interior.values[a] = v;
                    if (counted) res.interior_max = std::max(res.interior_max, std::abs(v));
                }
            }
        return res;
    }

    Stencils st(g, 0, scheme == ResidualScheme::HighOrder6 ? 6 : 4);
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            if (!g.active(i, j) || !interior_stencil_ok(g, i, j, st.half_width())) continue;
            size_t a = g.index(i, j);
            double uv = u.values[a];
            Derivs d = st.at(u.values, i, j);
            double lap = st.laplacian(d, uv, i, 0);
            double v = -cn * lap + problem.s_g[a] * uv - problem.K[a] * std::pow(pos(uv), p);
            res.interior.values[a] = v;
            bool counted = inside_margin(g, i, j, margin);
            if (counted) res.interior_max = std::max(res.interior_max, std::abs(v));
            if (j == 0) {
                double b = 2.0 / (n - 2.0) * (-d.uz) + problem.eps * uv -
                           problem.H[i] * std::pow(pos(uv), pf);
                res.boundary[i] = b;
                if (counted) res.boundary_max = std::max(res.boundary_max, std::abs(b));
            }
        }
    return res;
}

Residual linear_residual(const AxiField& U, const AxiField& v, double absK, double H,
                         size_t margin, int order) {
    U.validate();
    v.validate();
    if (U.grid->size() != v.grid->size()) throw DomainError("linear_residual: grid mismatch");
    const AxiGrid& g = *v.grid;
    const int n = g.n, mode = v.mode();
    const double cn = conformal_constant(n);
    const double p = (n + 2.0) / (n - 2.0), pf = n / (n - 2.0);
    Residual res{AxiField(v.grid, v.harmonic), std::vector<double>(g.nr(), 0.0)};
    Stencils st(g, mode, order);
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            if (mode >= 1 && i == 0) continue;
            if (!g.active(i, j) || !interior_stencil_ok(g, i, j, st.half_width())) continue;
            size_t a = g.index(i, j);
            double vv = v.values[a], uu = U.values[a];
            Derivs d = st.at(v.values, i, j);
            double val = -cn * st.laplacian(d, vv, i, mode) + p * absK * std::pow(uu, p - 1.0) * vv;
            res.interior.values[a] = val;
            bool counted = inside_margin(g, i, j, margin);
            if (counted) res.interior_max = std::max(res.interior_max, std::abs(val));
            if (j == 0) {
                double b = 2.0 / (n - 2.0) * (-d.uz) - pf * H * std::pow(uu, pf - 1.0) * vv;
                res.boundary[i] = b;
                if (counted) res.boundary_max = std::max(res.boundary_max, std::abs(b));
            }
        }
    return res;
}

AxiField sample(GridPtr grid, const Harmonic& h, const std::function<double(double, double)>& f) {
    AxiField out(grid, h);
    const AxiGrid& g = *grid;
    const bool axis_zero = h.mode() >= 1;
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            if (!g.active(i, j) || (axis_zero && i == 0)) continue;
            out.values[g.index(i, j)] = f(g.r[i], g.z[j]);
        }
    return out;
}

AxiField sample_bubble(GridPtr grid, const BubbleParams& p) {
    for (double c : p.center)
        if (c != 0.0) throw DomainError("sample_bubble: axisymmetric grids need a centered bubble");
    BubbleProfile U(p);
    int n = grid->n;
    return sample(grid, Harmonic::constant(n), [&](double r, double z) { return U.value(r, z); });
}

AxiField solve_linear(const ModelProblem& problem, const AxiField& interior_source,
                      const std::vector<double>& boundary_flux, LinearSolveReport* report) {
    problem.validate(false);
    interior_source.validate();
    const AxiGrid& g = *problem.grid;
    if (interior_source.grid->size() != g.size() || boundary_flux.size() != g.nr())
        throw DomainError("solve_linear: source/grid mismatch");
    const int n = g.n;
    const double cn = conformal_constant(n);
    AxiQuadrature q(problem.grid, interior_source.harmonic);
    SpMat A = cn * q.stiffness();
    {
        SpMat D(g.size(), g.size());
        D.reserve(Eigen::VectorXi::Constant(g.size(), 1));
        for (size_t a = 0; a < g.size(); ++a) D.insert(a, a) = problem.s_g[a] * q.volume()(a);
        A += D;
    }
    pin_nodes(A, q.free());
    Eigen::VectorXd b(g.size());
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            size_t a = g.index(i, j);
            b(a) = q.free()[a] ? q.volume()(a) * interior_source.values[a] +
                                     (j == 0 ? cn * q.area()(a) * boundary_flux[i] : 0.0)
                               : 0.0;
        }
    Eigen::SimplicialLDLT<SpMat> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("solve_linear: factorization failed (operator not coercive)");
    Eigen::VectorXd w = ldlt.solve(b);
    double bn = b.norm();
    double rel = bn > 0.0 ? (A * w - b).norm() / bn : (A * w - b).norm();
    if (report) report->relative_residual = rel;
    if (!(rel < 1e-8) || !w.allFinite())
        throw NumericalError("solve_linear: linear solve did not converge, relative residual " +
                                 num_str(rel),
                             {rel});
    return AxiField(problem.grid, interior_source.harmonic,
                    std::vector<double>(w.data(), w.data() + w.size()));
}

AxiField ep_source(const CurvaturePointData& data, GridPtr grid) {
    data.validate();
    if (grid->n != data.n) throw DomainError("ep_source: grid dimension mismatch");
    Harmonic h = Harmonic::quadratic(data.n, data.h_ij);
    if (h.is_zero()) {
        Harmonic z = Harmonic::constant(data.n);
        z.c0 = 0.0;
        return AxiField(grid, z);
    }
    const int n = data.n;
    BubbleProfile U(BubbleParams::from(data, 1.0));
    double c = 8.0 * n * (n - 1.0) * U.amp;
    return sample(grid, h, [&](double r, double z) {
        return c * r * r * z * std::pow(U.q(r, z), -(n + 2) / 2.0);
    });
}

namespace {

// Discretized kernels with the same angular factor as h (none for mode 2).
std::vector<Eigen::VectorXd> kernel_vectors(const CurvaturePointData& data, const AxiGrid& g,
                                            const Harmonic& h) {
    std::vector<Eigen::VectorXd> ks;
    const int n = data.n;
    BubbleProfile U(BubbleParams::from(data, 1.0));
    auto fill = [&](auto&& f, bool axis_zero) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(g.size());
        for (size_t j = 0; j < g.nz(); ++j)
            for (size_t i = 0; i < g.nr(); ++i)
                if (g.active(i, j) && !(axis_zero && i == 0)) v(g.index(i, j)) = f(g.r[i], g.z[j]);
        return v;
    };
    for (int i = 0; i < n - 1; ++i)
        if (same_harmonic(h, Harmonic::coordinate(n, i)))
            ks.push_back(fill([&](double r, double z) { return U.kernel_mode1(r, z); }, true));
    if (same_harmonic(h, Harmonic::constant(n)))
        ks.push_back(fill([&](double r, double z) { return U.kernel_n(r, z); }, false));
    return ks;
}

}  // namespace

AxiField solve_vp(const CurvaturePointData& data, GridPtr grid, const VpOptions& opt) {
    AxiField src = ep_source(data, grid);
    if (src.harmonic.is_zero()) return src;
    const AxiGrid& g = *grid;
    AxiQuadrature q(grid, src.harmonic);
    AxiField Uf = sample_bubble(grid, BubbleParams::from(data, 1.0));
    SpMat A = linearized_operator(q, Uf.values, std::abs(data.K), data.H);
    // Dirichlet on the truncation sphere
    std::vector<char> fr = q.free();
    const double R = g.extent();
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            double rho = std::hypot(g.r[i], g.z[j]);
            if (rho >= R * (1.0 - 1e-12)) fr[g.index(i, j)] = 0;
        }
    pin_nodes(A, fr);
    const Eigen::Index N = static_cast<Eigen::Index>(g.size());
    Eigen::VectorXd b(N);
    for (Eigen::Index a = 0; a < N; ++a) b(a) = fr[a] ? q.volume()(a) * src.values[a] : 0.0;

    // deflation: orthogonality to the kernels in the mass pairing
    std::vector<Eigen::VectorXd> ks = kernel_vectors(data, g, src.harmonic);
    Eigen::MatrixXd Kb(N, ks.size());
    for (size_t k = 0; k < ks.size(); ++k) {
        Eigen::VectorXd mk = q.volume().cwiseProduct(ks[k]);
        for (Eigen::Index a = 0; a < N; ++a)
            if (!fr[a]) mk(a) = 0.0;
        Kb.col(k) = mk;
    }
    Eigen::MatrixXd Q;
    if (ks.size()) Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Kb).householderQ() *
                       Eigen::MatrixXd::Identity(N, ks.size());
    auto project = [&](Eigen::VectorXd& x) {
        if (ks.size()) x -= Q * (Q.transpose() * x);
    };

    Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::AMDOrdering<int>> ic;
    ic.compute(A);
    if (ic.info() != Eigen::Success)
        throw NumericalError("solve_vp: preconditioner failed; indefinite discrete operator "
                             "(kernel contamination), refine the grid");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd r = b;
    project(r);
    Eigen::VectorXd z = ic.solve(r);
    project(z);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    const double bn = r.norm();
    int it = 0;
    if (bn > 0.0) {
        for (; it < opt.max_iter; ++it) {
            Eigen::VectorXd Ap = A * p;
            project(Ap);
            double pAp = p.dot(Ap);
            if (!(pAp > 0.0))
                throw NumericalError("solve_vp: indefinite discrete operator (kernel "
                                     "contamination); use a finer grid");
            double alpha = rz / pAp;
            x += alpha * p;
            r -= alpha * Ap;
            if (r.norm() <= opt.tol * bn) break;
            z = ic.solve(r);
            project(z);
            double rz2 = r.dot(z);
            p = z + (rz2 / rz) * p;
            rz = rz2;
        }
        if (it >= opt.max_iter)
            throw NumericalError("solve_vp: projected CG did not converge", {r.norm() / bn});
    }
    project(x);
    AxiField v(grid, src.harmonic, std::vector<double>(x.data(), x.data() + N));
    return v;
}

double interpolate(const AxiField& f, double r, double z) {
    const AxiGrid& g = *f.grid;
    r = std::clamp(r, g.r.front(), g.r.back());
    z = std::clamp(z, g.z.front(), g.z.back());
    auto locate = [](const std::vector<double>& x, double v) {
        size_t k = std::upper_bound(x.begin(), x.end(), v) - x.begin();
        if (k == 0) k = 1;
        if (k >= x.size()) k = x.size() - 1;
        return k - 1;
    };
    size_t i = locate(g.r, r), j = locate(g.z, z);
    double tr = (r - g.r[i]) / (g.r[i + 1] - g.r[i]);
    double tz = (z - g.z[j]) / (g.z[j + 1] - g.z[j]);
    return (1 - tr) * (1 - tz) * f.at(i, j) + tr * (1 - tz) * f.at(i + 1, j) +
           (1 - tr) * tz * f.at(i, j + 1) + tr * tz * f.at(i + 1, j + 1);
}

VpReport vp_report(const CurvaturePointData& data, const AxiField& v) {
    VpReport rep;
    v.validate();
    if (v.harmonic.is_zero()) return rep;
    const AxiGrid& g = *v.grid;
    const int n = data.n;
    const double om = sphere_measure(n);
    BubbleProfile U(BubbleParams::from(data, 1.0));
    AxiQuadrature radial(v.grid, Harmonic::constant(n));  // weights without angular factor
    const Eigen::VectorXd& V = radial.volume();
    const Eigen::VectorXd& A = radial.area();
    const double p = (n + 2.0) / (n - 2.0), pf = n / (n - 2.0);

    // (i): int v j_i dx = (angular average of Y_v Y_i) * radial integral
    for (int i = 0; i <= n - 1; ++i) {
        bool tangential = i < n - 1;
        Harmonic hi = tangential ? Harmonic::coordinate(n, i) : Harmonic::constant(n);
        double ang = angular_average(v.harmonic, hi);
        double s = 0.0;
        for (size_t j = 0; j < g.nz(); ++j)
            for (size_t k = 0; k < g.nr(); ++k) {
                size_t a = g.index(k, j);
                double jv = tangential ? U.kernel_mode1(g.r[k], g.z[j]) : U.kernel_n(g.r[k], g.z[j]);
                s += V(a) * v.values[a] * jv;
            }
        rep.orthogonality = std::max(rep.orthogonality, std::abs(om * ang * s));
    }
    // (iii)
    double mean = angular_mean(v.harmonic);
    double absmean = std::sqrt(v.angular_weight());
    double si = 0.0, sb = 0.0, si_abs = 0.0, sb_abs = 0.0;
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t k = 0; k < g.nr(); ++k) {
            size_t a = g.index(k, j);
            double u = U.value(g.r[k], g.z[j]);
            si += V(a) * std::pow(u, p) * v.values[a];
            si_abs += V(a) * std::pow(u, p) * std::abs(v.values[a]);
            if (j == 0) {
                sb += A(a) * std::pow(u, pf) * v.values[a];
                sb_abs += A(a) * std::pow(u, pf) * std::abs(v.values[a]);
            }
        }
    rep.iii_interior = std::abs(data.K) * om * mean * si;
    rep.iii_boundary = (n - 1.0) * data.H * om * mean * sb;
    rep.iii_scale = om * absmean * (std::abs(data.K) * si_abs + (n - 1.0) * std::abs(data.H) * sb_abs);
    rep.iii_gap = rep.iii_scale > 0.0 ? std::abs(rep.iii_interior - rep.iii_boundary) / rep.iii_scale
                                      : 0.0;
    // (iv)
    AxiQuadrature q(v.grid, v.harmonic);
    AxiField Uf = sample_bubble(v.grid, BubbleParams::from(data, 1.0));
    SpMat L = linearized_operator(q, Uf.values, std::abs(data.K), data.H);
    Eigen::Map<const Eigen::VectorXd> x(v.values.data(), v.values.size());
    rep.quad_form = x.dot(L * x);
    AxiField src = ep_source(data, v.grid);
    rep.quad_form_source = q.l2(Eigen::Map<const Eigen::VectorXd>(src.values.data(), src.values.size()), x);
    rep.f_term = 0.5 * rep.quad_form;
    // (ii) decay
    const double R = g.extent();
    std::vector<double> lr, lm;
    for (int k = 0; k < 9; ++k) {
        double rad = R / 32.0 * std::pow(8.0, k / 8.0);
        double m = 0.0;
        for (int t = 0; t <= 128; ++t) {
            double th = 0.5 * std::numbers::pi * t / 128.0;
            m = std::max(m, std::abs(interpolate(v, rad * std::sin(th), rad * std::cos(th))));
        }
        m *= absmean;
        rep.decay_samples.emplace_back(rad, m);
        if (m > 0.0) {
            lr.push_back(std::log(rad));
            lm.push_back(std::log(m));
        }
    }
    if (lr.size() >= 2) {
        double mx = 0, my = 0;
        for (size_t k = 0; k < lr.size(); ++k) {
            mx += lr[k];
            my += lm[k];
        }
        mx /= lr.size();
        my /= lr.size();
        double sxy = 0, sxx = 0;
        for (size_t k = 0; k < lr.size(); ++k) {
            sxy += (lr[k] - mx) * (lm[k] - my);
            sxx += (lr[k] - mx) * (lr[k] - mx);
        }
        rep.decay_slope = sxy / sxx;
    }
    return rep;
}

}  // namespace blowup
