#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace blowup {

// Pointwise geometric data at a boundary point p.
struct CurvaturePointData {
    int n = 5;
    double K = -1.0;
    double H = 0.0;
    Eigen::MatrixXd hessK;  // n x n
    Eigen::MatrixXd hessH;  // (n-1) x (n-1)
    double pi_norm_sq = 0.0;
    Eigen::MatrixXd h_ij;   // (n-1) x (n-1)
    double ric_nu = 0.0;
    double rbar = 0.0;
    double s_g = 1.0;

    // Identity Hessians, zero second fundamental form, H set from D.
    static CurvaturePointData flat(int n, double K, double D);

    double D() const;  // scaling invariant, no admissibility check
    // throws DomainError naming the offending field
    void validate() const;
};

struct BubbleParams {
    int n = 5;
    double Kp = -1.0;
    double D = 2.0;
    double delta = 1.0;
    std::vector<double> center;  // x~0, size n-1 (empty means origin)

    static BubbleParams from(const CurvaturePointData& data, double delta = 1.0);
    void validate() const;
};

double scaling_invariant(int n, double K, double H);
double alpha_const(int n);
double crit_exponent(int n);           // 2* = 2n/(n-2)
double crit_trace_exponent(int n);     // 2# = 2(n-1)/(n-2)
double conformal_constant(int n);      // c_n = 4(n-1)/(n-2)

// U_{delta, x0} at a point x (size n, x_n >= 0).
double bubble_eval(const BubbleParams& p, const std::vector<double>& x);

// Axisymmetric evaluation, centered bubble: r = |x~|, z = x_n.
struct BubbleProfile {
    int n;
    double amp;    // alpha_n |K|^{-(n-2)/4} delta^{(n-2)/2}
    double D;
    double delta;

    explicit BubbleProfile(const BubbleParams& p);
    double q(double r, double z) const;  // r^2 + (z + D delta)^2 - delta^2
    double value(double r, double z) const;
    double d_r(double r, double z) const;
    double d_z(double r, double z) const;
    // radial profile of j_i (i < n), i.e. j_i = profile * x_i / r; delta = 1 form
    double kernel_mode1(double r, double z) const;
    // j_n for delta = 1, closed rational form
    double kernel_n(double r, double z) const;
};

// kernel_eval: i in 1..n, delta = 1 and centered params required.
double kernel_eval(int i, const BubbleParams& p, const std::vector<double>& x);
// j_n through the derivative combination (independent branch)
double kernel_n_derivative_form(const BubbleParams& p, const std::vector<double>& x);

double integral_I(double m, double alpha);
double integral_phi(double m, double D);
double integral_phi_hat(double m, double D);

double bubble_energy(const CurvaturePointData& data);
double coeff_C(const CurvaturePointData& data);
double coeff_B(const CurvaturePointData& data);

// int <D^2H x~, x~> U^{2#}(x~, 0) dx~ and int <D^2K x, x> U^{2*} dx, delta = 1,
// by quadrature against the explicit bubble.
double hessian_boundary_integral(const CurvaturePointData& data);
double hessian_interior_integral(const CurvaturePointData& data);

struct CoefficientA {
    double value = 0.0;
    double b_term = 0.0;
    double f_term = 0.0;
    double boundary_hessian = 0.0;  // already weighted
    double interior_hessian = 0.0;  // already weighted
    bool degenerate = false;
    std::string warning;
};

CoefficientA coeff_A_detail(const CurvaturePointData& data, double f_term);
double coeff_A(const CurvaturePointData& data, double f_term);

double optimal_d(double A, double C);
double optimal_d(const CurvaturePointData& data, double f_term);

double ell(double s);  // -s ln s
double rho_of_eps(double eps);
double zeta(int n, double eps);
// length scale of the concentration: eps (n >= 5), rho(eps) (n = 4)
double concentration_scale(int n, double eps);

struct ReducedCoefficients {
    double E_p = 0.0;
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double f_term = 0.0;
    double d0 = 0.0;
    double zeta = 0.0;
};

ReducedCoefficients reduced_coefficients(const CurvaturePointData& data, double f_term,
                                         double eps);

}  // namespace blowup
