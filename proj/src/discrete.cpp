#include "blowup/discrete.hpp"

#include <cmath>

#include "blowup/closed_forms.hpp"
#include "blowup/errors.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

namespace {

std::vector<double> dual_bounds(const std::vector<double>& x) {
    std::vector<double> b(x.size() + 1);
    b[0] = x[0];
    for (size_t i = 1; i < x.size(); ++i) b[i] = 0.5 * (x[i - 1] + x[i]);
    b[x.size()] = x.back();
    return b;
}

}  // namespace

AxiQuadrature::AxiQuadrature(GridPtr grid, const Harmonic& harmonic) : grid_(std::move(grid)) {
    if (!grid_) throw DomainError("AxiQuadrature: null grid");
    const AxiGrid& g = *grid_;
    g.validate();
    if (harmonic.dim != g.n - 1) throw DomainError("AxiQuadrature: harmonic dimension mismatch");
    const int n = g.n;
    mode_ = harmonic.mode();
    wang_ = sphere_measure(n) * angular_average(harmonic, harmonic);
    const size_t nr = g.nr(), nz = g.nz(), N = g.size();
    auto mr = [&](double a, double b) {
        return wang_ * (std::pow(b, n - 1) - std::pow(a, n - 1)) / (n - 1.0);
    };
    auto mr_inv2 = [&](double a, double b) {  // wang * int_a^b r^{n-4} dr
        if (n == 3) return wang_ * std::log(b / a);
        return wang_ * (std::pow(b, n - 3) - std::pow(a, n - 3)) / (n - 3.0);
    };
    std::vector<double> rb = dual_bounds(g.r), zb = dual_bounds(g.z);
    vol_ = Eigen::VectorXd::Zero(N);
    area_ = Eigen::VectorXd::Zero(N);
    free_.assign(N, 0);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * N);
    const double lam = mode_ * (mode_ + n - 3.0);
    for (size_t j = 0; j < nz; ++j) {
        double Lz = zb[j + 1] - zb[j];
        for (size_t i = 0; i < nr; ++i) {
            if (!g.active(i, j)) continue;
            size_t a = g.index(i, j);
            free_[a] = !(mode_ >= 1 && i == 0);
            double Ar = mr(rb[i], rb[i + 1]);
            vol_(a) = Ar * Lz;
            if (j == 0) area_(a) = Ar;
            if (lam > 0.0 && i > 0) trip.emplace_back(a, a, lam * mr_inv2(rb[i], rb[i + 1]) * Lz);
            if (i + 1 < nr && g.active(i + 1, j)) {
                size_t b = g.index(i + 1, j);
                double dr = g.r[i + 1] - g.r[i];
                // flux through the dual face at the midpoint
                double w = wang_ * std::pow(rb[i + 1], n - 2) / dr * Lz;
                trip.emplace_back(a, a, w);
                trip.emplace_back(b, b, w);
                trip.emplace_back(a, b, -w);
                trip.emplace_back(b, a, -w);
            }
            if (j + 1 < nz && g.active(i, j + 1)) {
                size_t b = g.index(i, j + 1);
                double w = Ar / (g.z[j + 1] - g.z[j]);
                trip.emplace_back(a, a, w);
                trip.emplace_back(b, b, w);
                trip.emplace_back(a, b, -w);
                trip.emplace_back(b, a, -w);
            }
        }
    }
    stiff_.resize(N, N);
    stiff_.setFromTriplets(trip.begin(), trip.end());
}

double AxiQuadrature::l2(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return (vol_.array() * u.array() * v.array()).sum();
}

double AxiQuadrature::boundary_l2(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return (area_.array() * u.array() * v.array()).sum();
}

double AxiQuadrature::dirichlet(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return u.dot(stiff_ * v);
}

ModelProblem ModelProblem::from_functions(GridPtr grid,
                                          const std::function<double(double, double)>& s_g,
                                          const std::function<double(double, double)>& K,
                                          const std::function<double(double)>& H, double eps) {
    ModelProblem p;
    p.grid = grid;
    const AxiGrid& g = *grid;
    p.s_g.resize(g.size());
    p.K.resize(g.size());
    p.H.resize(g.nr());
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            p.s_g[g.index(i, j)] = s_g(g.r[i], g.z[j]);
            p.K[g.index(i, j)] = K(g.r[i], g.z[j]);
        }
    for (size_t i = 0; i < g.nr(); ++i) p.H[i] = H(g.r[i]);
    p.eps = eps;
    return p;
}

ModelProblem ModelProblem::constant(GridPtr grid, double s_g, double K, double H, double eps) {
    return from_functions(
        std::move(grid), [=](double, double) { return s_g; }, [=](double, double) { return K; },
        [=](double) { return H; }, eps);
}

void ModelProblem::validate(bool allow_zero_s) const {
    if (!grid) throw ConfigError("grid", "missing");
    const AxiGrid& g = *grid;
    if (s_g.size() != g.size() || K.size() != g.size() || H.size() != g.nr())
        throw ConfigError("grid", "coefficient fields do not match the grid");
    for (double s : s_g)
        if (!(allow_zero_s ? s >= 0.0 : s > 0.0))
            throw ConfigError("s_g", "must be positive");
    for (double k : K)
        if (!(k < 0.0)) throw ConfigError("K", "K(x) must be negative");
    for (double h : H)
        if (!std::isfinite(h)) throw ConfigError("H", "must be finite");
    if (!(eps >= 0.0)) throw ConfigError("eps", "must be nonnegative");
    if (h_g != 0.0) throw ConfigError("h_g", "fixed to 0 (Escobar metric)");
}

DiscreteEnergy::DiscreteEnergy(const ModelProblem& problem, const AxiQuadrature& quad)
    : prob_(&problem), quad_(&quad), n_(problem.grid->n), cn_(conformal_constant(problem.grid->n)) {
    if (problem.grid.get() != quad.grid_ptr().get() && problem.grid->size() != quad.grid().size())
        throw DomainError("DiscreteEnergy: grid mismatch");
    if (quad.mode() != 0) throw DomainError("DiscreteEnergy: nonlinear energy needs a mode-0 field");
}

namespace {

inline double pos(double u) { return u > 0.0 ? u : 0.0; }

}  // namespace

double DiscreteEnergy::value(const Eigen::VectorXd& u) const {
    const auto& g = *prob_->grid;
    const Eigen::VectorXd& V = quad_->volume();
    const Eigen::VectorXd& A = quad_->area();
    const double ps = crit_exponent(n_), pt = crit_trace_exponent(n_);
    double e = 0.5 * cn_ * u.dot(quad_->stiffness() * u);
    double vol = 0.0, bdry = 0.0;
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            size_t a = g.index(i, j);
            if (V(a) == 0.0) continue;
            double up = pos(u(a));
            vol += V(a) * (0.5 * prob_->s_g[a] * u(a) * u(a) - prob_->K[a] * std::pow(up, ps) / ps);
            if (j == 0)
                bdry += A(a) * (-(n_ - 2.0) * prob_->H[i] * std::pow(up, pt) +
                                (n_ - 1.0) * prob_->eps * u(a) * u(a));
        }
    return e + vol + bdry;
}

Eigen::VectorXd DiscreteEnergy::gradient(const Eigen::VectorXd& u) const {
    const auto& g = *prob_->grid;
    const Eigen::VectorXd& V = quad_->volume();
    const Eigen::VectorXd& A = quad_->area();
    const double p = (n_ + 2.0) / (n_ - 2.0), pf = n_ / (n_ - 2.0);
    Eigen::VectorXd gr = cn_ * (quad_->stiffness() * u);
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            size_t a = g.index(i, j);
            if (V(a) == 0.0) continue;
            double up = pos(u(a));
            gr(a) += V(a) * (prob_->s_g[a] * u(a) - prob_->K[a] * std::pow(up, p));
            if (j == 0)
                gr(a) += A(a) * 2.0 * (n_ - 1.0) *
                         (-prob_->H[i] * std::pow(up, pf) + prob_->eps * u(a));
        }
    return gr;
}

Eigen::VectorXd DiscreteEnergy::gradient_scale(const Eigen::VectorXd& u) const {
    const auto& g = *prob_->grid;
    const Eigen::VectorXd& V = quad_->volume();
    const Eigen::VectorXd& A = quad_->area();
    const double p = (n_ + 2.0) / (n_ - 2.0), pf = n_ / (n_ - 2.0);
    Eigen::VectorXd au = u.cwiseAbs();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(u.size());
    const SpMat& L = quad_->stiffness();
    for (int k = 0; k < L.outerSize(); ++k)
        for (SpMat::InnerIterator it(L, k); it; ++it)
            s(it.row()) += cn_ * std::abs(it.value()) * au(it.col());
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            size_t a = g.index(i, j);
            if (V(a) == 0.0) continue;
            double up = pos(u(a));
            s(a) += V(a) * (prob_->s_g[a] * au(a) + std::abs(prob_->K[a]) * std::pow(up, p));
            if (j == 0)
                s(a) += A(a) * 2.0 * (n_ - 1.0) *
                        (std::abs(prob_->H[i]) * std::pow(up, pf) + prob_->eps * au(a));
        }
    return s;
}

SpMat DiscreteEnergy::hessian(const Eigen::VectorXd& u) const {
    const auto& g = *prob_->grid;
    const Eigen::VectorXd& V = quad_->volume();
    const Eigen::VectorXd& A = quad_->area();
    const double p = (n_ + 2.0) / (n_ - 2.0), pf = n_ / (n_ - 2.0);
    SpMat Hm = cn_ * quad_->stiffness();
    Eigen::VectorXd d = Eigen::VectorXd::Zero(u.size());
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            size_t a = g.index(i, j);
            if (V(a) == 0.0) continue;
            double up = pos(u(a));
            d(a) += V(a) * (prob_->s_g[a] - prob_->K[a] * p * std::pow(up, p - 1.0));
            if (j == 0)
                d(a) += A(a) * 2.0 * (n_ - 1.0) *
                        (-prob_->H[i] * pf * std::pow(up, pf - 1.0) + prob_->eps);
        }
    SpMat D(u.size(), u.size());
    D.reserve(Eigen::VectorXi::Constant(u.size(), 1));
    for (Eigen::Index a = 0; a < u.size(); ++a) D.insert(a, a) = d(a);
    return Hm + D;
}

SpMat DiscreteEnergy::h1_matrix() const {
    const Eigen::VectorXd& V = quad_->volume();
    SpMat D(V.size(), V.size());
    D.reserve(Eigen::VectorXi::Constant(V.size(), 1));
    for (Eigen::Index a = 0; a < V.size(); ++a) D.insert(a, a) = V(a) * prob_->s_g[a];
    return cn_ * quad_->stiffness() + D;
}

SpMat linearized_operator(const AxiQuadrature& quad, const std::vector<double>& U, double absK,
                          double H) {
    const AxiGrid& g = quad.grid();
    const int n = g.n;
    const double p = (n + 2.0) / (n - 2.0), pf = n / (n - 2.0);
    const double cn = conformal_constant(n);
    if (U.size() != g.size()) throw DomainError("linearized_operator: profile size mismatch");
    SpMat D(g.size(), g.size());
    D.reserve(Eigen::VectorXi::Constant(g.size(), 1));
    for (size_t j = 0; j < g.nz(); ++j)
        for (size_t i = 0; i < g.nr(); ++i) {
            size_t a = g.index(i, j);
            double v = quad.volume()(a) * p * absK * std::pow(U[a], p - 1.0);
            if (j == 0)
                v -= quad.area()(a) * 2.0 * (n - 1.0) * H * pf * std::pow(U[a], pf - 1.0);
            D.insert(a, a) = v;
        }
    return cn * quad.stiffness() + D;
}

void pin_nodes(SpMat& A, const std::vector<char>& free) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nonZeros());
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            if (free[it.row()] && free[it.col()]) trip.emplace_back(it.row(), it.col(), it.value());
    for (size_t a = 0; a < free.size(); ++a)
        if (!free[a]) trip.emplace_back(a, a, 1.0);
    A.setZero();
    A.setFromTriplets(trip.begin(), trip.end());
}

}  // namespace blowup
