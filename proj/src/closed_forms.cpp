#include "blowup/closed_forms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blowup/errors.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

namespace {

void require_dim(int n, const char* who) {
    if (n < 4) throw DomainError(std::string(who) + ": dimension n must be >= 4");
}

void require_D(double D, const char* who) {
    if (!(D > 1.0))
        throw DomainError(std::string(who) + ": scaling invariant D = " + std::to_string(D) +
                          " must exceed 1");
}

double absK_pow(double K, double e) { return std::pow(std::abs(K), e); }

}  // namespace

double scaling_invariant(int n, double K, double H) {
    if (!(K < 0.0)) throw DomainError("scaling_invariant: K must be negative");
    return std::sqrt(n * (n - 1.0)) * H / std::sqrt(-K);
}

double alpha_const(int n) {
    require_dim(n, "alpha_const");
    return std::pow(4.0 * n * (n - 1.0), (n - 2.0) / 4.0);
}

double crit_exponent(int n) { return 2.0 * n / (n - 2.0); }
double crit_trace_exponent(int n) { return 2.0 * (n - 1.0) / (n - 2.0); }
double conformal_constant(int n) { return 4.0 * (n - 1.0) / (n - 2.0); }

CurvaturePointData CurvaturePointData::flat(int n, double K, double D) {
    CurvaturePointData d;
    d.n = n;
    d.K = K;
    d.H = D * std::sqrt(-K) / std::sqrt(n * (n - 1.0));
    d.hessK = Eigen::MatrixXd::Identity(n, n);
    d.hessH = Eigen::MatrixXd::Identity(n - 1, n - 1);
    d.h_ij = Eigen::MatrixXd::Zero(n - 1, n - 1);
    d.pi_norm_sq = 0.0;
    d.s_g = 1.0;
    return d;
}

double CurvaturePointData::D() const { return scaling_invariant(n, K, H); }

void CurvaturePointData::validate() const {
    if (n < 4 || n > 7) throw ConfigError("n", "supported dimensions are 4..7");
    if (!(K < 0.0)) throw ConfigError("K", "scalar curvature K(p) must be negative");
    if (!std::isfinite(H)) throw ConfigError("H", "must be finite");
    if (!(s_g > 0.0)) throw ConfigError("s_g", "S_g(p) must be positive");
    if (!(pi_norm_sq >= 0.0)) throw ConfigError("pi_norm_sq", "must be nonnegative");
    auto check_sym = [](const Eigen::MatrixXd& m, long dim, const char* name) {
        if (m.rows() != dim || m.cols() != dim)
            throw ConfigError(name, "expected a " + std::to_string(dim) + "x" +
                                        std::to_string(dim) + " matrix");
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
            throw ConfigError(name, "must be symmetric");
    };
    check_sym(hessK, n, "hessK");
    check_sym(hessH, n - 1, "hessH");
    check_sym(h_ij, n - 1, "h_ij");
    if (!(D() > 1.0))
        throw ConfigError("H", "scaling invariant D = sqrt(n(n-1)) H / sqrt|K| = " +
                                   std::to_string(D()) + " must exceed 1");
}

BubbleParams BubbleParams::from(const CurvaturePointData& data, double delta) {
    BubbleParams p;
    p.n = data.n;
    p.Kp = data.K;
    p.D = data.D();
    p.delta = delta;
    p.center.assign(data.n - 1, 0.0);
    return p;
}

void BubbleParams::validate() const {
    require_dim(n, "BubbleParams");
    if (!(Kp < 0.0)) throw DomainError("BubbleParams: Kp must be negative");
    require_D(D, "BubbleParams");
    if (!(delta > 0.0)) throw DomainError("BubbleParams: delta must be positive");
    if (!center.empty() && static_cast<int>(center.size()) != n - 1)
        throw DomainError("BubbleParams: center must have n-1 entries");
}

double bubble_eval(const BubbleParams& p, const std::vector<double>& x) {
    p.validate();
    if (static_cast<int>(x.size()) != p.n) throw DomainError("bubble_eval: x must have n entries");
    if (x[p.n - 1] < 0.0) throw DomainError("bubble_eval: x_n must be nonnegative");
    double s = 0.0;
    for (int i = 0; i < p.n - 1; ++i) {
        double c = p.center.empty() ? 0.0 : p.center[i];
        s += (x[i] - c) * (x[i] - c);
    }
    double zz = x[p.n - 1] + p.D * p.delta;
    double q = s + zz * zz - p.delta * p.delta;
    double amp = alpha_const(p.n) * absK_pow(p.Kp, -(p.n - 2) / 4.0) *
                 std::pow(p.delta, (p.n - 2) / 2.0);
    return amp * std::pow(q, -(p.n - 2) / 2.0);
}

BubbleProfile::BubbleProfile(const BubbleParams& p) : n(p.n), D(p.D), delta(p.delta) {
    p.validate();
    amp = alpha_const(n) * absK_pow(p.Kp, -(n - 2) / 4.0) * std::pow(delta, (n - 2) / 2.0);
}

double BubbleProfile::q(double r, double z) const {
    double zz = z + D * delta;
    return r * r + zz * zz - delta * delta;
}

double BubbleProfile::value(double r, double z) const {
    return amp * std::pow(q(r, z), -(n - 2) / 2.0);
}

double BubbleProfile::d_r(double r, double z) const {
    return -(n - 2.0) * amp * r * std::pow(q(r, z), -n / 2.0);
}

double BubbleProfile::d_z(double r, double z) const {
    return -(n - 2.0) * amp * (z + D * delta) * std::pow(q(r, z), -n / 2.0);
}

double BubbleProfile::kernel_mode1(double r, double z) const { return d_r(r, z); }

double BubbleProfile::kernel_n(double r, double z) const {
    return amp * 0.5 * (n - 2.0) * (r * r + z * z + delta * delta - D * D * delta * delta) *
           std::pow(q(r, z), -n / 2.0);
}

namespace {

void require_normalized(const BubbleParams& p, const char* who) {
    p.validate();
    if (p.delta != 1.0) throw DomainError(std::string(who) + ": requires delta = 1");
    for (double c : p.center)
        if (c != 0.0) throw DomainError(std::string(who) + ": requires a centered bubble");
}

}  // namespace

double kernel_eval(int i, const BubbleParams& p, const std::vector<double>& x) {
    require_normalized(p, "kernel_eval");
    if (i < 1 || i > p.n) throw DomainError("kernel_eval: index out of range 1..n");
    if (static_cast<int>(x.size()) != p.n) throw DomainError("kernel_eval: x must have n entries");
    if (x[p.n - 1] < 0.0) throw DomainError("kernel_eval: x_n must be nonnegative");
    BubbleProfile b(p);
    double r2 = 0.0;
    for (int k = 0; k < p.n - 1; ++k) r2 += x[k] * x[k];
    double z = x[p.n - 1];
    double qv = r2 + (z + p.D) * (z + p.D) - 1.0;
    if (i < p.n) return -(p.n - 2.0) * b.amp * x[i - 1] * std::pow(qv, -p.n / 2.0);
    return b.kernel_n(std::sqrt(r2), z);
}

double kernel_n_derivative_form(const BubbleParams& p, const std::vector<double>& x) {
    require_normalized(p, "kernel_n_derivative_form");
    const int n = p.n;
    if (static_cast<int>(x.size()) != n) throw DomainError("kernel_n_derivative_form: bad x");
    double U = bubble_eval(p, x);
    // gradient of amp q^{-(n-2)/2}: -(n-2)/2 U q^{-1} dq
    double r2 = 0.0;
    for (int k = 0; k < n - 1; ++k) r2 += x[k] * x[k];
    double zz = x[n - 1] + p.D;
    double qv = r2 + zz * zz - 1.0;
    std::vector<double> grad(n);
    for (int k = 0; k < n - 1; ++k) grad[k] = -(n - 2.0) * U * x[k] / qv;
    grad[n - 1] = -(n - 2.0) * U * zz / qv;
    double dot = 0.0;
    for (int k = 0; k < n; ++k) dot += grad[k] * (x[k] + (k == n - 1 ? p.D : 0.0));
    return (2.0 - n) / 2.0 * U - dot + p.D * grad[n - 1];
}

double integral_I(double m, double alpha) {
    if (!(alpha >= 0.0) || !(alpha + 1.0 < 2.0 * m))
        throw DomainError("integral_I: needs alpha >= 0 and alpha + 1 < 2m");
    double a = 0.5 * (alpha + 1.0), b = m - a;
    return 0.5 * std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

namespace {

// int_D^inf (t - D)^k (t^2 - 1)^{-m} dt with t = D cosh u
double phi_generic(double m, double D, int k, const char* who) {
    require_D(D, who);
    double decay = 2.0 * m - 1.0 - k;  // integrand in u decays like e^{-decay u}
    if (!(decay > 0.0)) throw DomainError(std::string(who) + ": integral diverges for this m");
    auto f = [=](double u) {
        double ch = std::cosh(u), sh = std::sinh(u);
        double t2m1 = D * D * ch * ch - 1.0;
        double base = D * sh * std::pow(t2m1, -m);
        if (k == 0) return base;
        double tm = D * (ch - 1.0);
        return base * tm * tm;
    };
    // tail beyond U is below ~1e-22 relative to the integrand scale
    double umax = std::log(2.0 / D) + (52.0 * std::log(10.0) / 2.0 + std::log(1.0 / decay)) / decay;
    umax = std::max(umax, 4.0);
    std::vector<double> cuts{0.0};
    for (double u = 1.0; u < umax; u *= 2.0) cuts.push_back(u);
    cuts.push_back(umax);
    double s = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
        s += integrate_adaptive(f, cuts[i], cuts[i + 1], 24, 1e-16, 1e-14).value;
    return s;
}

}  // namespace

double integral_phi(double m, double D) { return phi_generic(m, D, 0, "integral_phi"); }

double integral_phi_hat(double m, double D) { return phi_generic(m, D, 2, "integral_phi_hat"); }

double bubble_energy(const CurvaturePointData& data) {
    require_dim(data.n, "bubble_energy");
    const int n = data.n;
    const double D = scaling_invariant(n, data.K, data.H);
    require_D(D, "bubble_energy");
    double a_n = std::pow(alpha_const(n), crit_trace_exponent(n)) * sphere_measure(n) *
                 integral_I(n - 1, n) * (n - 3.0) / ((n - 1.0) * std::sqrt(n * (n - 1.0)));
    return a_n * absK_pow(data.K, -(n - 2) / 2.0) *
           (-(n - 1.0) * integral_phi((n + 1) / 2.0, D) +
            D * std::pow(D * D - 1.0, -(n - 1) / 2.0));
}

double coeff_C(const CurvaturePointData& data) {
    require_dim(data.n, "coeff_C");
    const int n = data.n;
    const double D = scaling_invariant(n, data.K, data.H);
    require_D(D, "coeff_C");
    double a = alpha_const(n);
    return 2.0 * (n - 2.0) * sphere_measure(n) * a * a * absK_pow(data.K, -(n - 2) / 2.0) *
           std::pow(D * D - 1.0, -(n - 3) / 2.0) * integral_I(n - 1, n);
}

double coeff_B(const CurvaturePointData& data) {
    const int n = data.n;
    if (n == 4) throw DomainError("coeff_B: unsupported for n = 4, see the n = 4 branch of coeff_A");
    require_dim(n, "coeff_B");
    const double D = scaling_invariant(n, data.K, data.H);
    require_D(D, "coeff_B");
    if (!(data.pi_norm_sq >= 0.0)) throw DomainError("coeff_B: pi_norm_sq must be >= 0");
    if (data.pi_norm_sq == 0.0) return 0.0;
    double a = alpha_const(n);
    return a * a * (n - 2.0) / (n - 1.0) * sphere_measure(n) * integral_I(n - 1, n) *
           data.pi_norm_sq * absK_pow(data.K, -(n - 2) / 2.0) *
           (4.0 * (n - 3.0) * integral_phi_hat((n - 1) / 2.0, D) +
            integral_phi((n - 3) / 2.0, D));
}

double hessian_boundary_integral(const CurvaturePointData& data) {
    const int n = data.n;
    require_dim(n, "hessian_boundary_integral");
    const double D = scaling_invariant(n, data.K, data.H);
    require_D(D, "hessian_boundary_integral");
    if (data.hessH.rows() != n - 1 || data.hessH.cols() != n - 1)
        throw DomainError("hessian_boundary_integral: hessH must be (n-1)x(n-1)");
    double tr = data.hessH.trace() / (n - 1.0);
    if (tr == 0.0) return 0.0;
    BubbleProfile U(BubbleParams::from(data, 1.0));
    const double p = crit_trace_exponent(n);
    QuadratureSpec spec;
    spec.decay_exponent = n - 3.0;
    spec.rel_tol = 1e-12;
    spec.abs_tol = 1e-300;
    auto f = [&](double r) { return r * r * std::pow(U.value(r, 0.0), p); };
    return tr * boundary_integral(n, f, spec).value;
}

double hessian_interior_integral(const CurvaturePointData& data) {
    const int n = data.n;
    require_dim(n, "hessian_interior_integral");
    const double D = scaling_invariant(n, data.K, data.H);
    require_D(D, "hessian_interior_integral");
    if (data.hessK.rows() != n || data.hessK.cols() != n)
        throw DomainError("hessian_interior_integral: hessK must be n x n");
    double a = data.hessK.topLeftCorner(n - 1, n - 1).trace() / (n - 1.0);
    double b = data.hessK(n - 1, n - 1);
    if (a == 0.0 && b == 0.0) return 0.0;
    BubbleProfile U(BubbleParams::from(data, 1.0));
    const double p = crit_exponent(n);
    QuadratureSpec spec;
    spec.decay_exponent = n - 2.0;
    spec.rel_tol = 1e-11;
    spec.abs_tol = 1e-300;
    auto f = [&](double r, double z) { return (a * r * r + b * z * z) * std::pow(U.value(r, z), p); };
    return halfspace_integral(n, f, spec).value;
}

CoefficientA coeff_A_detail(const CurvaturePointData& data, double f_term) {
    const int n = data.n;
    require_dim(n, "coeff_A");
    const double D = scaling_invariant(n, data.K, data.H);
    require_D(D, "coeff_A");
    CoefficientA out;
    // second-order Taylor coefficients: H(x~) ~ H + 1/2 <D^2H x~, x~>, same for K
    double hb = hessian_boundary_integral(data);
    double hk = hessian_interior_integral(data);
    out.boundary_hessian = 0.5 * (n - 2.0) * hb;
    out.interior_hessian = (n - 2.0) / (4.0 * n) * hk;
    if (n == 4) {
        double a4 = alpha_const(4);
        out.b_term = (192.0 * std::numbers::pi * std::numbers::pi / std::abs(data.K) +
                      a4 * a4 * sphere_measure(4) * integral_I(3, 4) / std::abs(data.K)) *
                     data.pi_norm_sq;
        out.f_term = 0.0;
    } else {
        out.b_term = coeff_B(data);
        out.f_term = f_term;
    }
    out.value = out.b_term + out.f_term + out.boundary_hessian + out.interior_hessian;
    if (data.pi_norm_sq == 0.0 && hb == 0.0 && hk == 0.0) {
        out.degenerate = true;
        out.warning = "coeff_A: pi, hessH and hessK all vanish; A = 0 and d0 is undefined";
    }
    return out;
}

double coeff_A(const CurvaturePointData& data, double f_term) {
    return coeff_A_detail(data, f_term).value;
}

double optimal_d(double A, double C) {
    if (!(A > 0.0)) throw DomainError("optimal_d: A must be positive (d0 undefined)");
    if (!(C > 0.0)) throw DomainError("optimal_d: C must be positive");
    return C / (2.0 * A);
}

double optimal_d(const CurvaturePointData& data, double f_term) {
    return optimal_d(coeff_A(data, f_term), coeff_C(data));
}

double ell(double s) { return -s * std::log(s); }

double rho_of_eps(double eps) {
    const double smax = std::exp(-1.0);
    if (!(eps > 0.0) || eps > smax)
        throw DomainError("rho_of_eps: eps must lie in (0, 1/e]");
    if (eps == smax) return smax;
    double lo = 0.0, hi = smax;
    double s = std::min(eps / std::abs(std::log(eps)), 0.5 * smax);
    for (int it = 0; it < 200; ++it) {
        double g = ell(s) - eps;
        if (g > 0.0) hi = s; else lo = s;
        double dg = -std::log(s) - 1.0;
        double next = s - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 1e-16 * s) return next;
        s = next;
    }
    return s;
}

double zeta(int n, double eps) {
    require_dim(n, "zeta");
    if (!(eps > 0.0)) throw DomainError("zeta: eps must be positive");
    if (n >= 5) return eps * eps;
    double r = rho_of_eps(eps);
    return r * r * std::abs(std::log(r));
}

double concentration_scale(int n, double eps) {
    require_dim(n, "concentration_scale");
    if (!(eps > 0.0)) throw DomainError("concentration_scale: eps must be positive");
    return n >= 5 ? eps : rho_of_eps(eps);
}

ReducedCoefficients reduced_coefficients(const CurvaturePointData& data, double f_term,
                                         double eps) {
    ReducedCoefficients rc;
    rc.E_p = bubble_energy(data);
    CoefficientA a = coeff_A_detail(data, f_term);
    rc.A = a.value;
    rc.B = a.b_term;
    rc.f_term = a.f_term;
    rc.C = coeff_C(data);
    rc.d0 = a.value > 0.0 ? rc.C / (2.0 * a.value) : 0.0;
    rc.zeta = eps > 0.0 ? zeta(data.n, eps) : 0.0;
    return rc;
}

}  // namespace blowup
