#pragma once

#include <string>
#include <vector>

#include "blowup/axi_grid.hpp"
#include "blowup/closed_forms.hpp"
#include "blowup/discrete.hpp"
#include "blowup/flat_model.hpp"
#include "blowup/reduction.hpp"

namespace blowup {

struct NewtonOptions {
    double tol = 1e-10;          // certified residual, see certified_residual
    int max_iter = 40;
    int max_halvings = 20;
    double negative_tol = 1e-10; // allowed min u / max u
};

struct NewtonResult {
    AxiField u;
    int iterations = 0;
    double residual = 0.0;
    double energy = 0.0;
    std::vector<double> history;
};

// max over free nodes of |dJ/du_a| / (sum of the magnitudes of the terms
// making up dJ/du_a): a backward error per equation, one for interior and
// boundary rows alike.
double certified_residual(const ModelProblem& problem, const AxiField& u);

// Damped Newton on the discrete gradient of J_eps, analytic Jacobian and
// sparse LU; the step is halved until the residual norm drops.
NewtonResult newton_solve(const ModelProblem& problem, const AxiField& initial,
                          const NewtonOptions& opt = {});

struct BlowupFit {
    double delta_fit = 0.0;    // from the peak value
    double delta_width = 0.0;  // from the half-maximum radius of the boundary trace
    double p_fit = 0.0;        // distance of the boundary maximum from the axis
    double peak = 0.0;
    double amplitude = 0.0;    // peak * delta_width^{(n-2)/2} / bubble constant, 1 for a bubble
};

// Lengths are returned in the grid's units times `scale`; the field is in
// the same frame. data supplies K, D at the bubble center.
BlowupFit fit_blowup(const AxiField& u, const CurvaturePointData& data, double scale = 1.0);
// Boundary trace sampled along a line through the center region, for fields
// that are not axisymmetric about the grid axis (p_fit is the x of the max).
BlowupFit fit_blowup_line(const std::vector<double>& x, const std::vector<double>& trace,
                          const CurvaturePointData& data);

struct ContinuationSpec {
    FlatModelSpec model;
    std::vector<double> eps_path;  // decreasing
    double d_init = 0.0;           // 0: closed-form d0
    NewtonOptions newton;
    AuxOptions aux;
    double min_step_ratio = 0.05;  // bisection floor, relative to the requested step
    bool shooting_fallback = true;

    void validate() const;
};

struct ContinuationStep {
    double eps = 0.0;
    double ell = 0.0;
    AxiField u;                // in the scaled frame of this eps
    int iterations = 0;
    double residual = 0.0;
    double energy = 0.0;
    double min_value = 0.0;
    BlowupFit fit;
    std::string method;        // "newton", "shooting"
    bool requested = true;     // false for bisection intermediates
};

struct ContinuationRun {
    ContinuationSpec spec;
    std::vector<ContinuationStep> steps;
    bool complete = true;
    std::string failure;
};

// Start: ansatz at d_init plus its auxiliary correction. Each next eps is
// warm-started from the transplanted previous solution; a failed step is
// bisected down to the floor, then the run stops with a failure marker.
ContinuationRun continuation(const ContinuationSpec& spec);

// Carries a scaled-frame profile to another grid: bilinear inside the
// source grid, |y|^{2-n} continuation of the edge values outside.
AxiField transplant(const AxiField& u, GridPtr to);

// Lyapunov-Schmidt shooting: find d with vanishing multiplier of the
// auxiliary equation, then polish with Newton.
NewtonResult solve_by_shooting(const FlatModelSpec& model, const FlatFrame& frame, double d_guess,
                               const NewtonOptions& nopt, const AuxOptions& aopt);

struct RateReport {
    int n = 5;
    double d0 = 0.0;
    std::vector<double> eps, delta, ratio;  // ratio = delta / scale(eps)
    double c_ls = 0.0;         // least squares delta ~ c scale(eps)
    double c_extrap = 0.0;     // ratio extrapolated to eps -> 0
    double gap = 0.0;          // |c_extrap - d0| / d0
    double gap_ls = 0.0;
    double power_q = 0.0;      // free power-law exponent of delta vs eps
    bool ratio_converging = false;  // successive changes shrink
    // n = 4: one-parameter fits c rho(eps) and c eps, log residuals
    double residual_rho = 0.0, residual_eps = 0.0;
    std::vector<double> p_drift;
    bool p_monotone = false;
    std::vector<double> amplitude;
    double amplitude_spread = 0.0;  // (max - min) / mean
};

RateReport verify_rate(int n, const std::vector<double>& eps, const std::vector<double>& delta,
                       const std::vector<double>& p_dist, const std::vector<double>& amplitude,
                       double d0);
RateReport verify_rate(const ContinuationRun& run, const CurvaturePointData& data, double f_term);

}  // namespace blowup
