#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "blowup/closed_forms.hpp"
#include "blowup/errors.hpp"

using namespace blowup;
using std::numbers::pi;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// |S^{n-2}|
double omega(int n) { return 2.0 * std::pow(pi, (n - 1) / 2.0) / std::tgamma((n - 1) / 2.0); }

double I_oracle(double m, double a) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double t) {
        return t == 0.0 ? (a == 0.0 ? 1.0 : 0.0) : std::exp(a * std::log(t) - m * std::log1p(t * t));
    });
}

double phi_oracle(double m, double D, double power) {
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    auto f = [&](double t) {
        if (t > 1e100) return 0.0;
        return std::pow(t - D, power) * std::pow(t * t - 1.0, -m);
    };
    return ts.integrate(f, D, D + 1.0) + es.integrate(f, D + 1.0, INFINITY);
}

// U for delta = 1 centered, written out
double log_U(int n, double K, double D, double r, double z) {
    return (n - 2) / 4.0 * std::log(4.0 * n * (n - 1)) - (n - 2) / 4.0 * std::log(std::abs(K)) -
           (n - 2) / 2.0 * std::log(r * r + (z + D) * (z + D) - 1.0);
}

// r^{n-2} U^q, in logs so that large r underflows cleanly
double weighted(int n, double K, double D, double r, double z, double q) {
    if (r == 0.0) return 0.0;
    return std::exp((n - 2) * std::log(r) + q * log_U(n, K, D, r, z));
}

// -(1/n)|K| int U^{2*} + H int_bdry U^{2#}, nested double-exponential quadrature
double energy_oracle(int n, double K, double D) {
    const double H = D * std::sqrt(std::abs(K)) / std::sqrt(n * (n - 1.0));
    const double p = 2.0 * n / (n - 2.0), pb = 2.0 * (n - 1.0) / (n - 2.0);
    boost::math::quadrature::exp_sinh<double> es;
    double vol = es.integrate([&](double z) {
        boost::math::quadrature::exp_sinh<double> inner;
        return inner.integrate(
            [&](double r) { return weighted(n, K, D, r, z, p); });
    });
    vol *= omega(n);
    double bd = omega(n) *
                es.integrate([&](double r) { return weighted(n, K, D, r, 0.0, pb); });
    return -std::abs(K) / n * vol + H * bd;
}

}  // namespace

TEST_CASE("scaling invariant") {
    CHECK(scaling_invariant(4, -12, 0) == doctest::Approx(0.0));
    CHECK(scaling_invariant(4, -3, 1) == doctest::Approx(2.0).epsilon(1e-15));
    for (int n = 4; n <= 7; ++n) {
        double lam = 7.0;
        CHECK(rel(scaling_invariant(n, lam * lam * -2.5, lam * 0.8), scaling_invariant(n, -2.5, 0.8)) <
              1e-14);
    }
    CHECK_THROWS_AS(scaling_invariant(5, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(scaling_invariant(5, 2.0, 1.0), DomainError);
}

TEST_CASE("alpha constant") {
    CHECK(alpha_const(4) == doctest::Approx(std::sqrt(48.0)).epsilon(1e-15));
    CHECK(alpha_const(6) == doctest::Approx(120.0).epsilon(1e-15));
    CHECK(alpha_const(5) == doctest::Approx(std::pow(80.0, 0.75)).epsilon(1e-15));
    CHECK_THROWS_AS(alpha_const(3), DomainError);
}

TEST_CASE("bubble: value at the origin, positivity, translation") {
    for (int n = 4; n <= 7; ++n)
        for (double D : {1.5, 2.0, 3.0}) {
            BubbleParams p{n, -2.0, D, 1.0, {}};
            std::vector<double> x(n, 0.0);
            double want = alpha_const(n) * std::pow(2.0, -(n - 2) / 4.0) *
                          std::pow(D * D - 1.0, -(n - 2) / 2.0);
            CHECK(rel(bubble_eval(p, x), want) < 1e-14);
        }
    std::mt19937 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        int n = 4 + k % 4;
        BubbleParams p{n, -(0.1 + 5 * u(gen)), 1.0 + 1e-3 + 3 * u(gen), 1e-3 + 2 * u(gen), {}};
        std::vector<double> x(n);
        for (int i = 0; i < n - 1; ++i) x[i] = 20 * (u(gen) - 0.5);
        x[n - 1] = k % 5 == 0 ? 0.0 : 10 * u(gen);
        CHECK(bubble_eval(p, x) > 0.0);
    }
    BubbleParams c{5, -1.0, 2.0, 0.3, {}};
    BubbleParams s = c;
    s.center = {0.4, -0.2, 0.1, 0.0};
    CHECK(rel(bubble_eval(s, {0.9, -0.1, 0.1, 0.0, 0.25}), bubble_eval(c, {0.5, 0.1, 0.0, 0.0, 0.25})) <
          1e-14);
}

TEST_CASE("kernels: zero sets and the two j_n branches") {
    for (int n = 4; n <= 7; ++n) {
        BubbleParams p{n, -1.0, 2.0, 1.0, {}};
        std::vector<double> x(n, 0.0);
        x[1] = 0.7;
        x[n - 1] = 0.3;
        CHECK(kernel_eval(1, p, x) == doctest::Approx(0.0).scale(1.0));
        // |x|^2 = D^2 - 1
        std::vector<double> y(n, 0.0);
        y[0] = std::sqrt(3.0) * 0.6;
        y[n - 1] = std::sqrt(3.0) * 0.8;
        CHECK(std::abs(kernel_eval(n, p, y)) < 1e-13 * std::abs(kernel_eval(n, p, x)));
    }
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        int n = 4 + k % 4;
        BubbleParams p{n, -(0.5 + u(gen)), 1.2 + 2 * u(gen), 1.0, {}};
        std::vector<double> x(n);
        for (int i = 0; i < n - 1; ++i) x[i] = 6 * (u(gen) - 0.5);
        x[n - 1] = 4 * u(gen);
        double a = kernel_eval(n, p, x), b = kernel_n_derivative_form(p, x);
        CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("integral_I") {
    CHECK(integral_I(3, 4) == doctest::Approx(3 * pi / 16).epsilon(1e-14));
    CHECK(integral_I(1, 0) == doctest::Approx(pi / 2).epsilon(1e-14));
    for (int n = 4; n <= 7; ++n)
        for (auto [m, a] : std::vector<std::pair<double, double>>{
                 {n - 1.0, double(n)}, {n - 1.0, n - 2.0}, {double(n), double(n)}, {double(n), n - 2.0}}) {
            double beta = 0.5 * boost::math::beta((a + 1) / 2, m - (a + 1) / 2);
            CHECK(rel(integral_I(m, a), beta) < 1e-13);
            CHECK(rel(integral_I(m, a), I_oracle(m, a)) < 1e-10);
        }
    for (int n = 5; n <= 7; ++n)
        CHECK(rel((n - 3.0) / (n - 1.0) * integral_I(n - 1, n), integral_I(n - 1, n - 2)) < 1e-12);
    CHECK_THROWS_AS(integral_I(2, 3), DomainError);
    CHECK_THROWS_AS(integral_I(1, -0.5), DomainError);
}

TEST_CASE("integral_phi and integral_phi_hat") {
    CHECK(integral_phi(1, 2) == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));
    CHECK(integral_phi(2, 3) < integral_phi(2, 2));
    CHECK(integral_phi_hat(2.5, 3) < integral_phi_hat(2.5, 2));
    for (double m : {1.0, 1.5, 2.0, 2.5, 3.0, 3.5})
        for (double D : {1.5, 2.0, 3.0}) CHECK(rel(integral_phi(m, D), phi_oracle(m, D, 0)) < 1e-10);
    for (double m : {2.0, 2.5, 3.0, 3.5})
        for (double D : {1.5, 2.0, 3.0}) CHECK(rel(integral_phi_hat(m, D), phi_oracle(m, D, 2)) < 1e-10);
    // regression pin, 30-digit oracle value
    CHECK(integral_phi_hat(2.5, 2) == doctest::Approx(phi_oracle(2.5, 2, 2)).epsilon(1e-10));
    CHECK(integral_phi_hat(2.5, 2) == doctest::Approx(0.02393225657483028).epsilon(1e-12));
    CHECK_THROWS_AS(integral_phi(2, 1.0), DomainError);
    CHECK_THROWS_AS(integral_phi_hat(2.5, 0.5), DomainError);
}

TEST_CASE("bubble energy against direct quadrature") {
    for (int n : {4, 5})
        for (double D : {1.5, 2.0, 3.0}) {
            auto d = CurvaturePointData::flat(n, -1.0, D);
            CHECK(rel(bubble_energy(d), energy_oracle(n, -1.0, D)) < 1e-8);
        }
    // n = 4, K = -1, D = 2: pinned
    CHECK(bubble_energy(CurvaturePointData::flat(4, -1, 2)) == doctest::Approx(73.28798949306).epsilon(1e-10));
    // (K, H) -> (lam^2 K, lam H) multiplies E by lam^{-(n-2)}
    for (int n = 4; n <= 7; ++n) {
        auto a = CurvaturePointData::flat(n, -1.3, 2.2);
        auto b = a;
        double lam = 1.7;
        b.K *= lam * lam;
        b.H *= lam;
        CHECK(rel(bubble_energy(b), std::pow(lam, -(n - 2.0)) * bubble_energy(a)) < 1e-12);
    }
    auto bad = CurvaturePointData::flat(5, -1.0, 2.0);
    bad.H = 0.5 * bad.H / 2.0 * 0.9;
    CHECK_THROWS_AS(bubble_energy(bad), DomainError);
}

TEST_CASE("coeff_C") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        auto d = CurvaturePointData::flat(4 + k % 4, -(0.1 + 4 * u(gen)), 1.0 + 1e-3 + 4 * u(gen));
        CHECK(coeff_C(d) > 0.0);
    }
    // C = (n - 1) int_bdry U^2(x~, 0) for delta = 1
    for (int n = 4; n <= 7; ++n)
        for (double D : {1.5, 2.0, 3.0}) {
            boost::math::quadrature::exp_sinh<double> es;
            double b = omega(n) * es.integrate([&](double r) { return weighted(n, -1.0, D, r, 0.0, 2.0); });
            CHECK(rel(coeff_C(CurvaturePointData::flat(n, -1.0, D)), (n - 1.0) * b) < 1e-8);
        }
    double want = 2 * 2 * (4 * pi) * 48 / std::sqrt(3.0) * (3 * pi / 16);
    CHECK(rel(coeff_C(CurvaturePointData::flat(4, -1, 2)), want) < 1e-13);
}

TEST_CASE("coeff_B") {
    auto d = CurvaturePointData::flat(5, -1.0, 2.0);
    CHECK(coeff_B(d) == 0.0);
    d.pi_norm_sq = 1.0;
    const int n = 5;
    double a = alpha_const(n);
    double want = a * a * (n - 2.0) / (n - 1.0) * omega(n) * 0.5 * boost::math::beta(3.0, 1.0) *
                  (4 * (n - 3) * phi_oracle(2.0, 2.0, 2) + phi_oracle(1.0, 2.0, 0));
    CHECK(rel(coeff_B(d), want) < 1e-9);
    CHECK(coeff_B(d) > 0.0);
    CHECK_THROWS(coeff_B(CurvaturePointData::flat(4, -1.0, 2.0)));
}

TEST_CASE("coeff_A") {
    for (int n = 5; n <= 7; ++n) {
        auto d = CurvaturePointData::flat(n, -1.0, 2.0);
        auto A = coeff_A_detail(d, 0.0);
        CHECK(A.boundary_hessian > 0.0);
        CHECK(A.interior_hessian > 0.0);
        CHECK(A.b_term == 0.0);
        CHECK(rel(A.value, A.boundary_hessian + A.interior_hessian) < 1e-14);
        auto d2 = d;
        d2.hessH *= 2.0;
        CHECK(rel(coeff_A_detail(d2, 0.0).boundary_hessian, 2.0 * A.boundary_hessian) < 1e-12);
    }
    // n = 5, K = -1, D = 2 reference
    CHECK(coeff_A(CurvaturePointData::flat(5, -1, 2), 0.0) == doctest::Approx(10979.385).epsilon(1e-6));
    auto z = CurvaturePointData::flat(5, -1.0, 2.0);
    z.hessH.setZero();
    z.hessK.setZero();
    auto A0 = coeff_A_detail(z, 0.0);
    CHECK(A0.degenerate);
    CHECK(!A0.warning.empty());
}

TEST_CASE("optimal_d") {
    CHECK(optimal_d(1.0, 2.0) == doctest::Approx(1.0));
    CHECK(optimal_d(3.7, 1.1) == doctest::Approx(optimal_d(3.7 * 9, 1.1 * 9)).epsilon(1e-15));
    CHECK_THROWS(optimal_d(0.0, 2.0));
    auto d = CurvaturePointData::flat(5, -1.0, 2.0);
    double A = coeff_A(d, 0.0), C = coeff_C(d), d0 = optimal_d(d, 0.0);
    CHECK(d0 == doctest::Approx(0.214405).epsilon(1e-5));
    const int N = 4000;
    double best = -INFINITY, arg = 0, h = 10 * d0 / N;
    for (int k = 1; k < N; ++k) {
        double x = k * h, g = x * C - x * x * A;
        if (g > best) best = g, arg = x;
    }
    CHECK(std::abs(arg - d0) <= h);
    CHECK(rel(best, C * C / (4 * A)) < 1e-5);
}

TEST_CASE("rho_of_eps and zeta") {
    for (double e : {1e-2, 1e-3, 1e-4}) CHECK(std::abs(ell(rho_of_eps(e)) - e) < 1e-12 * e);
    // ell increases on (0, 1/e) up to ell(1/e) = 1/e
    CHECK(rho_of_eps(std::exp(-1.0)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    double prev = 0.0;
    for (double e = 1e-3; e < 0.36; e += 0.01) {
        double r = rho_of_eps(e);
        CHECK(r > prev);
        prev = r;
    }
    CHECK_THROWS_AS(rho_of_eps(0.4), DomainError);
    CHECK_THROWS_AS(rho_of_eps(0.0), DomainError);
    CHECK(zeta(5, 0.1) == doctest::Approx(0.01));
    double r = rho_of_eps(0.05);
    CHECK(zeta(4, 0.05) == doctest::Approx(r * r * std::abs(std::log(r))));
}
