#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "blowup/axi_grid.hpp"
#include "blowup/closed_forms.hpp"
#include "blowup/discrete.hpp"
#include "blowup/flat_model.hpp"

namespace blowup {

// All fields live in the scaled frame y = x / ell of a FlatFrame, where the
// bubble has size d and the cutoff sits at cutoff_radius / ell.
struct AnsatzParams {
    CurvaturePointData data;  // at the bubble center
    double d = 1.0;
    double eps = 0.0;
    double cutoff_radius = 5.0;               // physical
    double ell = 0.0;                         // 0: concentration_scale(n, eps)
    std::array<double, 2> d_interval{0.02, 2.0};

    double scale() const;   // ell
    double delta() const;   // physical concentration, ell * d
    void validate() const;
};

// Quintic smoothstep: 1 on [0, R/2], 0 past R, C^2.
double cutoff(double t, double R);
double cutoff_derivative(double t, double R);

// chi(ell |y|) [U_d(y) + ell d d^{-(n-2)/2} V_p(y / d)]; vp is a delta = 1
// mode-0 field (or null). Needs at least 8 r nodes inside the core |y| < d.
AxiField ansatz_field(const AnsatzParams& params, GridPtr grid, const AxiField* vp = nullptr);

// Z_i = chi d^{-(n-2)/2} j_i(y / d); i < n are mode 1 (harmonic theta_i),
// the last one is the mode-0 dilation generator.
std::vector<AxiField> z_fields(const AnsatzParams& params, GridPtr grid);

// H^1_g pairing with the discrete quadrature of the energy; fields of
// different modes are orthogonal.
double h1_inner(const ModelProblem& problem, const AxiField& a, const AxiField& b);
Eigen::MatrixXd gram_matrix(const ModelProblem& problem, const std::vector<AxiField>& z);

struct Projection {
    Eigen::VectorXd coeffs;
    AxiField orth;
};
Projection project(const ModelProblem& problem, const AxiField& phi, const std::vector<AxiField>& z);

struct AuxOptions {
    double tol = 1e-10;      // relative residual of the projected equation
    int max_iter = 30;
    int max_halvings = 12;
    double stall_tol = 1e-6;  // a stalled line search below this counts as converged
};

struct AuxResult {
    AxiField phi;
    double norm = 0.0;                // discrete H^1_g norm
    Eigen::VectorXd multipliers;      // K-component of the equation, per Z_i
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;
};

// grad J(w + phi) - tau + sum_i c_i M Z_i = 0 with <phi, Z_i> = 0: bordered
// Newton with damping, M the H^1_g matrix. tau (optional, per node) is a
// defect correction, see bubble_defect.
AuxResult solve_auxiliary(const ModelProblem& problem, const AxiField& w,
                          const std::vector<AxiField>& z, const AuxOptions& opt = {},
                          const AxiField* initial = nullptr,
                          const std::vector<double>* defect = nullptr);

// Discrete gradient of the limit problem (constant coefficients, eps = 0)
// at the uncut bubble of size d. The bubble solves the continuous problem,
// so this is pure truncation error; subtracting it from the gradient makes
// the limit problem's discrete solution exact.
std::vector<double> bubble_defect(const FlatModelSpec& spec, const FlatFrame& frame, double d);

double energy_J(const ModelProblem& problem, const AxiField& u);
double reduced_energy(const ModelProblem& problem, const AxiField& w, const AxiField& phi);

// J of the ansatz (V_p = 0) in the scaled frame of the flat model by
// adaptive quadrature, no grid involved.
double ansatz_energy_quadrature(const FlatModelSpec& spec, const AnsatzParams& params,
                                double rel_tol = 1e-11);

struct ExpansionCell {
    double d = 0.0, eps = 0.0, zeta = 0.0;
    double j_quad = 0.0;        // continuous J(W)
    double dj = 0.0;            // J(W + phi) - J(W) on the grid, defect corrected
    double j_reduced = 0.0;     // j_quad + dj
    double value = 0.0;         // (j_reduced - E) / zeta
    double phi_norm = 0.0;
    double multiplier = 0.0;
    int aux_iterations = 0;
};

struct ExpansionFit {
    std::vector<double> d;
    std::vector<double> limit;        // extrapolated (J - E)/zeta per d
    std::vector<double> correction;   // last Richardson correction per d
    double A = 0.0, C = 0.0, d_fit = 0.0;
    double fit_residual = 0.0;
};

// Extrapolate each row of values (rows: d, cols: eps) to eps -> 0 in the
// variable t = eps (n >= 5) or 1/|ln rho(eps)| (n = 4), then fit
// limit(d) = d C - d^2 A by least squares.
ExpansionFit fit_expansion(int n, const std::vector<double>& d_grid,
                           const std::vector<double>& eps_seq,
                           const std::vector<std::vector<double>>& values, int order = 2);

struct ExpansionReport {
    double E = 0.0;
    double A_ref = 0.0, C_ref = 0.0, d0_ref = 0.0;
    std::vector<ExpansionCell> cells;   // row-major over (d, eps)
    ExpansionFit fit;
    double gap_A = 0.0, gap_C = 0.0, gap_d0 = 0.0;
};

struct ExpansionOptions {
    AuxOptions aux;
    bool with_correction = true;   // aux solves; off: continuous J(W) only
    int extrapolation_order = 2;
    int threads = 0;
};

ExpansionReport expansion_check(const FlatModelSpec& spec, const std::vector<double>& d_grid,
                                const std::vector<double>& eps_seq,
                                const ExpansionOptions& opt = {});

// One (d, eps) cell of the expansion check.
ExpansionCell expansion_cell(const FlatModelSpec& spec, double d, double eps,
                             const ExpansionOptions& opt = {});

struct SearchBox {
    double s_lo = -1.0, s_hi = 1.0;   // boundary arc parameter
    double d_lo = 0.05, d_hi = 1.0;
};

struct MaximizeOptions {
    int ns = 9, nd = 17;
    int refinements = 3;
    int threads = 0;
};

struct MaximizeLevel {
    double s = 0.0, d = 0.0, value = 0.0;
    double cell_s = 0.0, cell_d = 0.0;
    double margin_s = 0.0, margin_d = 0.0;   // distance to the faces of the box
};

struct MaximizeResult {
    double s = 0.0, d = 0.0, value = 0.0;
    std::vector<MaximizeLevel> history;
};

// Grid search over box with successive zooms. The maximizer must stay more
// than one cell away from every face of the box; otherwise NumericalError
// names the face.
MaximizeResult maximize_reduced(const std::function<double(double, double)>& J,
                                const SearchBox& box, const MaximizeOptions& opt = {});

// (s, d) -> J_eps of the ansatz (continuous quadrature, no Phi) for the flat
// model with the bubble centered at distance s from p0 along x_1; the
// coefficient fields are the mode-0 part of the shifted quadratic model.
std::function<double(double, double)> flat_reduced_energy(const FlatModelSpec& spec, double eps);

}  // namespace blowup
