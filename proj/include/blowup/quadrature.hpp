#pragma once

#include <functional>
#include <vector>

namespace blowup {

struct GaussRule {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

// Nodes by Newton on the Legendre recurrence; cached per order.
const GaussRule& gauss_legendre(int npts);

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // panel error estimate plus tail bound
    double tail = 0.0;   // analytic bound on the discarded tail
    long evaluations = 0;
};

// Adaptive composite Gauss-Legendre on [a, b].
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              int npts, double abs_tol, double rel_tol, int max_depth = 48);

struct QuadratureSpec {
    double truncation_radius = 0.0;  // 0: chosen from decay_exponent
    int radial_points = 32;
    int angular_mode = 0;
    double rel_tol = 1e-12;
    double abs_tol = 1e-15;
    // caller promises |f| <~ |x|^{-(dim + decay_exponent)} far out
    double decay_exponent = 1.0;
    // f vanishes for |x| > support_radius (0: unbounded support)
    double support_radius = 0.0;
    // radii where f has kinks or fast transitions; panels are split there
    std::vector<double> breaks;

    void validate() const;
};

// Surface measure of the unit (n-2)-sphere, the x-tilde directions.
double sphere_measure(int n);

// Angular average over S^{n-2} of Y^2 for the representative harmonic of
// the mode: 1, x1/r, (x1^2 - x2^2)/r^2.
double angular_weight(int n, int mode);

// int over R^n_+ of f(r, z) with r = |x~|; mode > 0 multiplies by the
// angular average of the squared harmonic.
QuadResult halfspace_integral(int n, const std::function<double(double, double)>& f,
                              const QuadratureSpec& spec);

// int over R^{n-1} = boundary of f(r).
QuadResult boundary_integral(int n, const std::function<double(double)>& f,
                             const QuadratureSpec& spec);

enum class RateModel { Power, PowerLog };

struct RateFit {
    double c = 0.0;
    double q = 0.0;
    double residual = 0.0;  // l2 norm of log residuals
};

// Least squares in log space: v ~ c eps^q or c eps^q |ln eps|.
RateFit richardson_fit(const std::vector<double>& params, const std::vector<double>& values,
                       RateModel model);

struct Extrapolation {
    double limit = 0.0;
    double last_correction = 0.0;  // |limit - value at smallest parameter|
    std::vector<double> coefficients;
};

// Polynomial extrapolation v(t) = a0 + a1 t + ... to t -> 0.
Extrapolation extrapolate_to_zero(const std::vector<double>& t, const std::vector<double>& values,
                                  int order);

}  // namespace blowup
