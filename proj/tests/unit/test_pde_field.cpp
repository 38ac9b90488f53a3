#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>

#include "blowup/errors.hpp"
#include "blowup/pde_field.hpp"
#include "blowup/report.hpp"

using namespace blowup;

namespace {

GridPtr uniform(int n, double h, double extent, DomainKind k = DomainKind::HalfSpaceTruncated) {
    return std::make_shared<const AxiGrid>(AxiGrid::uniform(n, h, extent, k));
}

CurvaturePointData tracefree5() {
    auto d = CurvaturePointData::flat(5, -1.0, 2.0);
    d.h_ij = Eigen::MatrixXd::Zero(4, 4);
    d.h_ij(0, 0) = 1.0 / std::sqrt(2.0);
    d.h_ij(1, 1) = -1.0 / std::sqrt(2.0);
    return d;
}

}  // namespace

TEST_CASE("finite-difference weights are exact on polynomials") {
    std::vector<double> x{-0.3, -0.1, 0.0, 0.15, 0.4, 0.7};
    auto w = fd_weights(0.05, x, 2);
    for (int k = 0; k <= 5; ++k) {
        double d0 = 0, d1 = 0, d2 = 0;
        for (size_t i = 0; i < x.size(); ++i) {
            double p = std::pow(x[i], k);
            d0 += w[0][i] * p;
            d1 += w[1][i] * p;
            d2 += w[2][i] * p;
        }
        CHECK(d0 == doctest::Approx(std::pow(0.05, k)).epsilon(1e-12));
        CHECK(d1 == doctest::Approx(k ? k * std::pow(0.05, k - 1) : 0.0).epsilon(1e-10).scale(1.0));
        CHECK(d2 == doctest::Approx(k > 1 ? k * (k - 1) * std::pow(0.05, k - 2) : 0.0).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("zero field has zero residual") {
    auto g = uniform(5, 0.1, 3.0);
    auto d = CurvaturePointData::flat(5, -1.0, 2.0);
    ModelProblem P = ModelProblem::constant(g, 0.0, d.K, d.H, 0.0);
    AxiField z = AxiField::zeros(g);
    for (auto s : {ResidualScheme::Variational, ResidualScheme::HighOrder, ResidualScheme::HighOrder6}) {
        Residual r = residual(P, z, s);
        CHECK(r.interior_max == 0.0);
        CHECK(r.boundary_max == 0.0);
    }
}

TEST_CASE("sampled bubble: residual order under refinement") {
    const int n = 5;
    auto d = CurvaturePointData::flat(n, -1.0, 2.0);
    auto bp = BubbleParams::from(d, 1.0);
    auto run = [&](double h, ResidualScheme s, size_t margin = 0) {
        auto g = uniform(n, h, 4.0);
        ModelProblem P = ModelProblem::constant(g, 0.0, d.K, d.H, 0.0);
        Residual r = residual(P, sample_bubble(g, bp), s, margin);
        return std::max(r.interior_max, r.boundary_max);
    };
    // the truncated outer face carries a natural condition the bubble does not meet
    double v0 = run(0.02, ResidualScheme::Variational, 2), v1 = run(0.01, ResidualScheme::Variational, 2);
    CHECK(std::log2(v0 / v1) > 1.9);
    double a = run(0.02, ResidualScheme::HighOrder), b = run(0.01, ResidualScheme::HighOrder);
    CHECK(std::log2(a / b) > 3.5);
    double c = run(0.02, ResidualScheme::HighOrder6), e = run(0.01, ResidualScheme::HighOrder6);
    CHECK(std::log2(c / e) > 5.0);
    CHECK(e < 1e-5);
}

TEST_CASE("kernel j_n solves the linearized problem") {
    const int n = 6;
    auto d = CurvaturePointData::flat(n, -1.0, 1.5);
    auto bp = BubbleParams::from(d, 1.0);
    BubbleProfile B(bp);
    double prev = 0.0;
    for (double h : {0.02, 0.01}) {
        auto g = uniform(n, h, 4.0);
        AxiField U = sample_bubble(g, bp);
        AxiField j = sample(g, Harmonic::constant(n), [&](double r, double z) { return B.kernel_n(r, z); });
        Residual r = linear_residual(U, j, std::abs(d.K), d.H, 0, 6);
        double m = std::max(r.interior_max, r.boundary_max);
        if (prev > 0) CHECK(std::log2(prev / m) > 5.0);
        prev = m;
    }
    // a field that is not in the kernel does not pass
    auto g = uniform(n, 0.02, 4.0);
    AxiField U = sample_bubble(g, bp);
    AxiField w = sample(g, Harmonic::constant(n), [&](double r, double z) { return B.value(r, z); });
    Residual r = linear_residual(U, w, std::abs(d.K), d.H, 0, 6);
    CHECK(std::max(r.interior_max, r.boundary_max) > 1e-2);
}

TEST_CASE("grid mismatch is an error") {
    auto g1 = uniform(5, 0.1, 3.0), g2 = uniform(5, 0.05, 3.0);
    auto d = CurvaturePointData::flat(5, -1.0, 2.0);
    ModelProblem P = ModelProblem::constant(g1, 0.0, d.K, d.H, 0.0);
    CHECK_THROWS(residual(P, AxiField::zeros(g2)));
}

TEST_CASE("interpolation reproduces bilinear functions") {
    auto g = std::make_shared<const AxiGrid>(AxiGrid::graded(5, 0.05, 1.1, 6.0));
    AxiField f = sample(g, Harmonic::constant(5), [](double r, double z) { return 1 + 2 * r - z + 0.5 * r * z; });
    for (auto [r, z] : std::vector<std::pair<double, double>>{{0.01, 0.02}, {1.234, 0.77}, {3.3, 2.9}})
        CHECK(interpolate(f, r, z) == doctest::Approx(1 + 2 * r - z + 0.5 * r * z).epsilon(1e-12));
}

TEST_CASE("linear solve with zero sources") {
    auto g = uniform(5, 0.1, 3.0);
    ModelProblem P = ModelProblem::constant(g, 1.0, -1.0, 0.3, 0.0);
    AxiField u = solve_linear(P, AxiField::zeros(g), std::vector<double>(g->nr(), 0.0));
    for (double v : u.values) CHECK(v == 0.0);
}

TEST_CASE("E_p source and V_p") {
    auto g = std::make_shared<const AxiGrid>(AxiGrid::graded(5, 0.08, 1.12, 60.0, DomainKind::HalfBall));
    auto flat = CurvaturePointData::flat(5, -1.0, 2.0);
    flat.h_ij = Eigen::MatrixXd::Zero(4, 4);
    for (double v : ep_source(flat, g).values) CHECK(v == 0.0);
    for (double v : solve_vp(flat, g).values) CHECK(v == 0.0);

    auto d = tracefree5();
    AxiField src = ep_source(d, g);
    CHECK(src.mode() == 2);
    // explicit x_n factor
    for (size_t i = 0; i < g->nr(); ++i) CHECK(src.at(i, 0) == 0.0);

    AxiField v = solve_vp(d, g);
    VpReport rep = vp_report(d, v);
    CHECK(rep.orthogonality < 1e-8);
    CHECK(rep.quad_form > 0.0);
    CHECK(rep.quad_form == doctest::Approx(rep.quad_form_source).epsilon(1e-6));
    CHECK(rep.decay_slope < -1.0);

    auto sym = d;
    sym.h_ij(0, 1) = 0.3;
    CHECK_THROWS(solve_vp(sym, g));
}

TEST_CASE("snapshot round trip") {
    auto g = std::make_shared<const AxiGrid>(AxiGrid::graded(5, 0.05, 1.2, 5.0));
    AxiField f = sample(g, Harmonic::constant(5), [](double r, double z) { return std::exp(-r * r - z) / 3.0; });
    auto dir = std::filesystem::temp_directory_path() / "blowup_snapshot_test";
    std::filesystem::create_directories(dir);
    std::string a = (dir / "a.txt").string(), b = (dir / "b.txt").string();
    write_snapshot(a, f, {{"eps", "0.04"}, {"method", "newton"}});
    std::vector<std::pair<std::string, std::string>> meta;
    AxiField back = read_snapshot(a, &meta);
    REQUIRE(back.values.size() == f.values.size());
    for (size_t k = 0; k < f.values.size(); ++k) CHECK(back.values[k] == f.values[k]);
    CHECK(back.grid->r == g->r);
    CHECK(meta.size() == 2);
    write_snapshot(b, back, meta);
    CHECK(read_file(a) == read_file(b));
    std::filesystem::remove_all(dir);
    CHECK_THROWS(read_snapshot((dir / "missing.txt").string()));
}
