#include <doctest.h>

#include <cmath>
#include <memory>

#include "blowup/continuation.hpp"
#include "blowup/errors.hpp"
#include "blowup/pde_field.hpp"

using namespace blowup;

namespace {

GridPtr graded(double h0, double ratio, double extent) {
    return std::make_shared<const AxiGrid>(AxiGrid::graded(5, h0, ratio, extent, DomainKind::HalfBall));
}

double max_diff(const AxiField& a, const AxiField& b) {
    double m = 0.0;
    for (size_t k = 0; k < a.values.size(); ++k) m = std::max(m, std::abs(a.values[k] - b.values[k]));
    return m;
}

ContinuationSpec spec5(std::vector<double> path) {
    ContinuationSpec cs;
    cs.model.data = CurvaturePointData::flat(5, -1.0, 2.0);
    cs.eps_path = std::move(path);
    return cs;
}

}  // namespace

TEST_CASE("certified residual of the sampled bubble is discretization-limited") {
    auto d = CurvaturePointData::flat(5, -1.0, 2.0);
    double prev = INFINITY;
    for (double h : {0.04, 0.02, 0.01}) {
        auto g = graded(h, 1.0 + h, 200.0);
        ModelProblem P = ModelProblem::constant(g, 0.0, d.K, d.H, 0.0);
        double c = certified_residual(P, sample_bubble(g, BubbleParams::from(d, 1.0)));
        CHECK(c < 0.6 * prev);
        prev = c;
    }
    CHECK(prev < 1e-2);
}

TEST_CASE("blow-up fit") {
    auto d = CurvaturePointData::flat(5, -1.0, 2.0);
    auto g = graded(1e-3, 1.05, 10.0);
    AxiField u = sample_bubble(g, BubbleParams::from(d, 0.05));
    BlowupFit f = fit_blowup(u, d);
    CHECK(f.delta_fit == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(f.delta_width == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(f.p_fit == 0.0);
    CHECK(f.amplitude == doctest::Approx(1.0).epsilon(1e-3));

    // lengths scale with the frame
    CHECK(fit_blowup(u, d, 0.1).delta_fit == doctest::Approx(0.005).epsilon(1e-10));

    AxiField v = u;
    for (size_t j = 0; j < g->nz(); ++j)
        for (size_t i = 0; i < g->nr(); ++i) {
            double r = g->r[i], z = g->z[j];
            v.values[g->index(i, j)] *= 1.0 + 0.01 * std::cos(r) * std::exp(-z);
        }
    CHECK(fit_blowup(v, d).delta_fit == doctest::Approx(0.05).epsilon(0.03));

    // shifted center along a boundary line
    BubbleParams bp = BubbleParams::from(d, 0.05);
    bp.center = {0.3, 0.0, 0.0, 0.0};
    std::vector<double> x, tr;
    const double hx = 2e-3;
    for (int k = 0; k <= 500; ++k) {
        x.push_back(k * hx);
        tr.push_back(bubble_eval(bp, {k * hx, 0.0, 0.0, 0.0, 0.0}));
    }
    BlowupFit s = fit_blowup_line(x, tr, d);
    CHECK(std::abs(s.p_fit - 0.3) <= hx);
    CHECK(s.delta_fit == doctest::Approx(0.05).epsilon(1e-6));

    // maximum off the boundary
    AxiField w = u;
    w.values[g->index(0, 5)] = 10 * u.values[0];
    CHECK_THROWS_AS(fit_blowup(w, d), DomainError);
}

TEST_CASE("transplant between grids") {
    auto d = CurvaturePointData::flat(5, -1.0, 2.0);
    BubbleProfile U(BubbleParams::from(d, 1.0));
    auto a = graded(0.01, 1.02, 60.0), b = graded(0.005, 1.04, 200.0);
    AxiField ua = sample_bubble(a, BubbleParams::from(d, 1.0));
    AxiField ub = transplant(ua, b);
    double inner = 0.0, outer = 0.0;
    for (size_t j = 0; j < b->nz(); ++j)
        for (size_t i = 0; i < b->nr(); ++i) {
            double r = b->r[i], z = b->z[j], rho = std::hypot(r, z);
            if (rho > 200.0) continue;
            double e = std::abs(ub.at(i, j) / U.value(r, z) - 1.0);
            (rho < 50.0 ? inner : outer) = std::max(rho < 50.0 ? inner : outer, e);
        }
    CHECK(inner < 1e-3);
    CHECK(outer < 0.1);
}

TEST_CASE("rate report on synthetic runs") {
    const double d0 = 0.214405;
    std::vector<double> eps{0.08, 0.04, 0.02}, delta, zero(3, 0.0), one(3, 1.0);
    for (double e : eps) delta.push_back(d0 * e);
    RateReport r = verify_rate(5, eps, delta, zero, one, d0);
    CHECK(r.gap < 1e-12);
    CHECK(r.gap_ls < 1e-12);
    CHECK(r.power_q == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.amplitude_spread == 0.0);
    CHECK(r.p_monotone);

    std::vector<double> d4;
    for (double e : eps) d4.push_back(0.7 * rho_of_eps(e));
    RateReport q = verify_rate(4, eps, d4, zero, one, 0.7);
    CHECK(q.residual_rho < 1e-12);
    CHECK(q.residual_rho < q.residual_eps);
    CHECK(q.gap < 1e-12);
}

TEST_CASE("ContinuationSpec validation") {
    auto cs = spec5({0.04, 0.08});
    CHECK_THROWS_AS(cs.validate(), ConfigError);
    cs.eps_path = {};
    CHECK_THROWS_AS(cs.validate(), ConfigError);
    cs.eps_path = {0.05};
    cs.min_step_ratio = 0.0;
    CHECK_THROWS_AS(cs.validate(), ConfigError);
}

TEST_CASE("single eps: Newton, certified residual, basin") {
    ContinuationRun run = continuation(spec5({0.05}));
    REQUIRE(run.complete);
    REQUIRE(run.steps.size() == 1);
    const auto& s = run.steps[0];
    CHECK(s.residual < 1e-8);
    CHECK(s.min_value > 0.0);

    FlatFrame fr = make_frame(run.spec.model, 0.05);
    CHECK(certified_residual(fr.problem, s.u) == doctest::Approx(s.residual).epsilon(1e-6).scale(1e-12));
    NewtonResult direct = newton_solve(fr.problem, s.u);
    CHECK(direct.iterations <= 1);

    double top = s.u.values[0];
    AxiField hi = s.u, lo = s.u;
    for (auto& v : hi.values) v *= 1.05;
    for (auto& v : lo.values) v *= 0.95;
    NewtonResult a = newton_solve(fr.problem, hi), b = newton_solve(fr.problem, lo);
    CHECK(max_diff(a.u, b.u) < 1e-7 * top);
    CHECK(max_diff(a.u, s.u) < 1e-7 * top);
}

TEST_CASE("continuation path: positivity, concentration, warm starts") {
    ContinuationRun run = continuation(spec5({0.08, 0.04, 0.02}));
    REQUIRE(run.complete);
    std::vector<const ContinuationStep*> req;
    for (const auto& s : run.steps)
        if (s.requested) req.push_back(&s);
    REQUIRE(req.size() == 3);
    for (size_t k = 0; k < req.size(); ++k) {
        CHECK(req[k]->residual < 1e-8);
        CHECK(req[k]->min_value > 0.0);
        if (k) CHECK(req[k]->fit.delta_fit < req[k - 1]->fit.delta_fit);
    }
    // warm start against a cold start at the last eps
    ContinuationRun cold = continuation(spec5({0.02}));
    REQUIRE(cold.complete);
    CHECK(req.back()->iterations <= cold.steps[0].iterations);
    CHECK(req.back()->fit.delta_fit == doctest::Approx(cold.steps[0].fit.delta_fit).epsilon(1e-6));
}
