#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

#include "blowup/closed_forms.hpp"
#include "blowup/errors.hpp"
#include "blowup/quadrature.hpp"

using namespace blowup;
using std::numbers::pi;

namespace {
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
}

TEST_CASE("Gauss-Legendre rules") {
    for (int m : {2, 5, 16, 32}) {
        const auto& g = gauss_legendre(m);
        REQUIRE(g.x.size() == size_t(m));
        double wsum = 0.0;
        for (double w : g.w) wsum += w;
        CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
        // exact up to degree 2m - 1
        for (int k = 0; k <= 2 * m - 1; ++k) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += g.w[i] * std::pow(g.x[i], k);
            double want = k % 2 ? 0.0 : 2.0 / (k + 1);
            CHECK(std::abs(s - want) < 1e-13);
        }
    }
    CHECK(&gauss_legendre(16) == &gauss_legendre(16));
}

TEST_CASE("adaptive integration against Gauss-Kronrod") {
    auto f = [](double x) { return std::exp(-x) * std::sin(3 * x) / (1 + x * x); };
    double want = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 7.0, 20, 1e-15);
    auto r = integrate_adaptive(f, 0.0, 7.0, 16, 1e-15, 1e-14);
    CHECK(rel(r.value, want) < 1e-12);
    CHECK(r.error < 1e-10);
    // endpoint singularity, integrable
    auto s = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 16, 1e-12, 1e-10);
    CHECK(s.value == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("half-space and boundary integrals") {
    QuadratureSpec zero;
    auto z = halfspace_integral(5, [](double, double) { return 0.0; }, zero);
    CHECK(z.value == 0.0);
    CHECK(z.error == 0.0);
    CHECK(boundary_integral(5, [](double) { return 0.0; }, zero).value == 0.0);

    // int_{R^3} (r^2 + 3)^{-3} = (pi^2 / 4) 3^{-3/2}
    QuadratureSpec s;
    s.decay_exponent = 3.0;
    auto b = boundary_integral(4, [](double r) { return std::pow(r * r + 3.0, -3.0); }, s);
    CHECK(rel(b.value, pi * pi / 4 * std::pow(3.0, -1.5)) < 1e-10);

    // int U^{2*}, n = 5, K = -1, D = 2, against nested double-exponential quadrature
    const int n = 5;
    auto d = CurvaturePointData::flat(n, -1.0, 2.0);
    BubbleProfile U(BubbleParams::from(d));
    QuadratureSpec h;
    h.decay_exponent = n;
    auto v = halfspace_integral(n, [&](double r, double zz) { return std::pow(U.value(r, zz), 10.0 / 3.0); }, h);
    boost::math::quadrature::exp_sinh<double> es;
    double oracle = es.integrate([&](double zz) {
        boost::math::quadrature::exp_sinh<double> in;
        return in.integrate([&](double r) {
            return r == 0.0 ? 0.0 : std::exp(3 * std::log(r) + 10.0 / 3.0 * std::log(U.value(r, zz)));
        });
    });
    oracle *= sphere_measure(n);
    CHECK(rel(v.value, oracle) < 1e-8);

    // U^{(n+2)/(n-2)} j_n integrates to zero: dilations leave int U^{2*} fixed
    auto k = halfspace_integral(
        n, [&](double r, double zz) { return std::pow(U.value(r, zz), 7.0 / 3.0) * U.kernel_n(r, zz); }, h);
    CHECK(std::abs(k.value) < 1e-9 * v.value);
    // pinned regression value of the bubble mass
    CHECK(v.value == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("thin annulus far out, with declared breaks") {
    // radial bump on [700, 1400], n = 4: value = (|S^3| / 2) int bump rho^3
    const double R = 1400.0;
    auto bump = [&](double rho) {
        double s = (rho - 0.5 * R) / (0.5 * R);
        return s <= 0.0 || s >= 1.0 ? 0.0 : s * s * s * (1 - s) * (1 - s) * (1 - s);
    };
    double want = pi * pi * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                                [&](double r) { return bump(r) * r * r * r; }, 0.5 * R, R, 10, 1e-14);
    QuadratureSpec s;
    s.support_radius = R;
    s.breaks = {0.5 * R};
    auto h = halfspace_integral(4, [&](double r, double z) { return bump(std::hypot(r, z)); }, s);
    CHECK(rel(h.value, want) < 1e-10);
    auto b = boundary_integral(4, bump, s);
    double wb = 4 * pi * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                             [&](double r) { return bump(r) * r * r; }, 0.5 * R, R, 10, 1e-14);
    CHECK(rel(b.value, wb) < 1e-10);
}

TEST_CASE("QuadratureSpec validation") {
    QuadratureSpec s;
    s.decay_exponent = 0.0;
    CHECK_THROWS(boundary_integral(5, [](double r) { return 1.0 / (1 + r * r * r * r); }, s));
    s.decay_exponent = -1.0;
    CHECK_THROWS(halfspace_integral(5, [](double, double) { return 1.0; }, s));
}

TEST_CASE("richardson_fit") {
    std::vector<double> e{0.1, 0.05, 0.025}, v;
    for (double x : e) v.push_back(3 * x * x);
    auto f = richardson_fit(e, v, RateModel::Power);
    CHECK(std::abs(f.c - 3.0) < 1e-10);
    CHECK(std::abs(f.q - 2.0) < 1e-10);

    v.clear();
    for (double x : e) v.push_back(x * x * std::abs(std::log(x)));
    auto g = richardson_fit(e, v, RateModel::PowerLog);
    CHECK(std::abs(g.c - 1.0) < 1e-6);

    std::vector<double> e5{0.1, 0.08, 0.06, 0.04, 0.02}, noisy;
    for (size_t i = 0; i < e5.size(); ++i) noisy.push_back(3 * e5[i] * e5[i] * (1 + 0.01 * (i % 2 ? -1 : 1)));
    CHECK(std::abs(richardson_fit(e5, noisy, RateModel::Power).c - 3.0) < 0.06);

    CHECK_THROWS(richardson_fit({0.1, 0.1, 0.1}, {1, 2, 3}, RateModel::Power));
    CHECK_THROWS(richardson_fit({0.1}, {1}, RateModel::Power));
}

TEST_CASE("extrapolation to zero") {
    std::vector<double> t{0.08, 0.04, 0.02}, v;
    for (double x : t) v.push_back(1.5 - 2 * x + 7 * x * x);
    auto e = extrapolate_to_zero(t, v, 2);
    CHECK(e.limit == doctest::Approx(1.5).epsilon(1e-12));
    auto l = extrapolate_to_zero(t, v, 1);
    CHECK(std::abs(l.limit - 1.5) < std::abs(v.back() - 1.5));
    CHECK_THROWS(extrapolate_to_zero(t, v, 3));
}
