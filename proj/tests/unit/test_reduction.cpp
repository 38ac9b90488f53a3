#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "blowup/errors.hpp"
#include "blowup/pde_field.hpp"
#include "blowup/reduction.hpp"

using namespace blowup;

namespace {

struct Setup {
    CurvaturePointData data = CurvaturePointData::flat(5, -1.0, 2.0);
    GridPtr grid;
    ModelProblem problem;
    AnsatzParams params;
};

// eps = 0, constant coefficients, S_g -> 0, unit frame
Setup limit_setup(double h0, double ratio, double extent, double cutoff_radius) {
    Setup s;
    s.grid = std::make_shared<const AxiGrid>(AxiGrid::graded(5, h0, ratio, extent, DomainKind::HalfBall));
    s.problem = ModelProblem::constant(s.grid, 0.0, s.data.K, s.data.H, 0.0);
    s.params.data = s.data;
    s.params.d = 1.0;
    s.params.eps = 0.0;
    s.params.ell = 1.0;
    s.params.cutoff_radius = cutoff_radius;
    return s;
}

Eigen::Map<const Eigen::VectorXd> vec(const AxiField& f) {
    return Eigen::Map<const Eigen::VectorXd>(f.values.data(), f.values.size());
}

}  // namespace

TEST_CASE("ansatz: value at the origin and support") {
    auto s = limit_setup(0.02, 1.1, 40.0, 20.0);
    s.params.d = 0.5;
    AxiField W = ansatz_field(s.params, s.grid);
    BubbleProfile U(BubbleParams::from(s.data, 1.0));
    CHECK(W.at(0, 0) == doctest::Approx(std::pow(0.5, -1.5) * U.value(0, 0)).epsilon(1e-13));
    for (size_t j = 0; j < s.grid->nz(); ++j)
        for (size_t i = 0; i < s.grid->nr(); ++i)
            if (std::hypot(s.grid->r[i], s.grid->z[j]) >= 20.0) CHECK(W.at(i, j) == 0.0);
    CHECK(cutoff(3.0, 10.0) == 1.0);
    CHECK(cutoff(10.0, 10.0) == 0.0);
    CHECK(cutoff(7.5, 10.0) == doctest::Approx(0.5));
}

TEST_CASE("kernel fields: zero sets, axis, Gram structure") {
    auto s = limit_setup(0.02, 1.1, 40.0, 20.0);
    auto z = z_fields(s.params, s.grid);
    REQUIRE(z.size() == 5);
    for (int i = 0; i < 4; ++i) {
        CHECK(z[i].mode() == 1);
        for (size_t j = 0; j < s.grid->nz(); ++j) CHECK(z[i].at(0, j) == 0.0);
    }
    CHECK(z[4].mode() == 0);
    // zero of j_n on |y| = d sqrt(D^2 - 1), checked through the sampled profile
    double rz = std::sqrt(3.0);
    double v = interpolate(z[4], rz, 0.0), v0 = z[4].at(0, 0);
    CHECK(std::abs(v) < 1e-2 * std::abs(v0));
    Eigen::MatrixXd G = gram_matrix(s.problem, z);
    for (int i = 0; i < 5; ++i) {
        CHECK(G(i, i) > 0.0);
        for (int j = 0; j < 5; ++j)
            if (i != j) CHECK(std::abs(G(i, j)) <= 1e-12 * std::sqrt(G(i, i) * G(j, j)));
    }
}

TEST_CASE("projection onto the kernel complement") {
    auto s = limit_setup(0.02, 1.1, 40.0, 20.0);
    auto z = z_fields(s.params, s.grid);
    Projection p = project(s.problem, z[4], z);
    CHECK(p.coeffs(4) == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) CHECK(std::abs(p.coeffs(i)) < 1e-12);
    CHECK(vec(p.orth).norm() < 1e-10 * vec(z[4]).norm());

    AxiField w = sample(s.grid, Harmonic::constant(5), [](double r, double zz) { return std::exp(-(r * r + zz * zz) / 9); });
    Projection a = project(s.problem, w, z);
    Projection b = project(s.problem, a.orth, z);
    CHECK(b.coeffs.cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, a.coeffs.cwiseAbs().maxCoeff()));
    CHECK((vec(b.orth) - vec(a.orth)).norm() < 1e-12 * vec(a.orth).norm());
}

TEST_CASE("energy functional") {
    auto s = limit_setup(0.01, 1.02, 2000.0, 1000.0);
    CHECK(energy_J(s.problem, AxiField::zeros(s.grid)) == 0.0);
    AxiField U = sample_bubble(s.grid, BubbleParams::from(s.data, 1.0));
    double J = energy_J(s.problem, U), E = bubble_energy(s.data);
    CHECK(std::abs(J - E) < 1e-4 * E);

    // directional derivative against the discrete gradient
    AxiQuadrature q(s.grid, U.harmonic);
    DiscreteEnergy DE(s.problem, q);
    std::mt19937 gen(5);
    std::normal_distribution<double> nd;
    Eigen::VectorXd u = vec(U), phi(u.size());
    for (Eigen::Index a = 0; a < phi.size(); ++a) phi(a) = nd(gen) * std::abs(u(a));
    double slope = DE.gradient(u).dot(phi);
    double e1 = std::abs(DE.value(u + 1e-3 * phi) - DE.value(u) - 1e-3 * slope);
    double e2 = std::abs(DE.value(u + 5e-4 * phi) - DE.value(u) - 5e-4 * slope);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("auxiliary equation at the exact bubble") {
    // limit problem with the defect correction, whose discrete solution is the bubble
    FlatModelSpec m;
    m.data = CurvaturePointData::flat(5, -1.0, 2.0);
    m.h0 = 0.02;
    m.ratio = 1.08;
    m.domain_radius = 400.0;
    m.cutoff_radius = 200.0;
    FlatFrame fr = make_constant_frame(m, 0.0, 1.0);
    AnsatzParams ap;
    ap.data = fr.center;
    ap.eps = 0.0;
    ap.ell = 1.0;
    ap.cutoff_radius = m.cutoff_radius;
    const ModelProblem& P = fr.problem;
    AxiField W = ansatz_field(ap, fr.grid);
    auto z = z_fields(ap, fr.grid);
    auto tau = bubble_defect(m, fr, 1.0);
    AuxResult r = solve_auxiliary(P, W, z, {}, nullptr, &tau);
    double wn = std::sqrt(h1_inner(P, W, W));
    // phi is the cut-off tail of the bubble
    CHECK(r.norm < 1e-2 * wn);
    AxiField tail = sample_bubble(fr.grid, BubbleParams::from(fr.center, 1.0));
    for (size_t k = 0; k < tail.values.size(); ++k) tail.values[k] -= W.values[k];
    Projection pt = project(P, tail, z);
    AxiField diff0 = r.phi;
    for (size_t k = 0; k < diff0.values.size(); ++k) diff0.values[k] -= pt.orth.values[k];
    CHECK(std::sqrt(h1_inner(P, diff0, diff0)) < 1e-3 * r.norm);
    for (const auto& zi : z) CHECK(std::abs(h1_inner(P, r.phi, zi)) < 1e-10 * wn * std::sqrt(h1_inner(P, zi, zi)));

    // another start inside the ball lands on the same field
    AxiField start = r.phi;
    for (size_t k = 0; k < start.values.size(); ++k) start.values[k] *= 1.5;
    AuxResult r2 = solve_auxiliary(P, W, z, {}, &start, &tau);
    AxiField diff = r.phi;
    for (size_t k = 0; k < diff.values.size(); ++k) diff.values[k] -= r2.phi.values[k];
    CHECK(std::sqrt(h1_inner(P, diff, diff)) < 1e-8 * wn);

    CHECK(reduced_energy(P, W, AxiField::zeros(fr.grid)) == doctest::Approx(energy_J(P, W)).epsilon(1e-15));
    AxiField sum = W;
    for (size_t k = 0; k < sum.values.size(); ++k) sum.values[k] += r.phi.values[k];
    CHECK(reduced_energy(P, W, r.phi) == doctest::Approx(energy_J(P, sum)).epsilon(1e-14));
}

TEST_CASE("expansion fit on synthetic data") {
    const double A = 3.0, C = 2.0;
    std::vector<double> d{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, eps{0.08, 0.04, 0.02};
    std::vector<std::vector<double>> v;
    for (double x : d) {
        std::vector<double> row;
        for (double e : eps) row.push_back(x * C - x * x * A + (0.7 * x - 0.2) * e + 1.3 * e * e);
        v.push_back(row);
    }
    ExpansionFit f = fit_expansion(5, d, eps, v, 2);
    CHECK(f.A == doctest::Approx(A).epsilon(1e-10));
    CHECK(f.C == doctest::Approx(C).epsilon(1e-10));
    CHECK(f.d_fit == doctest::Approx(C / (2 * A)).epsilon(1e-10));
    CHECK(f.fit_residual < 1e-10);
}

TEST_CASE("maximization of the reduced energy") {
    const double A = 2.0, C = 1.6, s0 = 0.1;  // d0 = 0.4
    auto J = [&](double s, double d) { return 5.0 - (s - s0) * (s - s0) - (d * d * A - d * C); };
    SearchBox box;
    MaximizeResult r = maximize_reduced(J, box);
    const auto& last = r.history.back();
    CHECK(std::abs(r.s - s0) <= last.cell_s);
    CHECK(std::abs(r.d - 0.4) <= last.cell_d);

    std::mt19937 gen(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto noisy = [&](double s, double d) { return J(s, d) * (1.0 + 0.01 * u(gen)); };
    MaximizeOptions one;
    one.refinements = 0;
    MaximizeResult rn = maximize_reduced(noisy, box, one);
    CHECK(std::abs(rn.s - s0) <= 2 * rn.history.back().cell_s);
    CHECK(std::abs(rn.d - 0.4) <= 2 * rn.history.back().cell_d);

    auto edge = [&](double s, double d) { return -(s - s0) * (s - s0) + d; };
    CHECK_THROWS_AS(maximize_reduced(edge, box), NumericalError);
}
