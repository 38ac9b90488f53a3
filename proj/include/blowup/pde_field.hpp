#pragma once

#include <string>
#include <vector>

#include "blowup/axi_grid.hpp"
#include "blowup/closed_forms.hpp"
#include "blowup/discrete.hpp"

namespace blowup {

enum class ResidualScheme {
    Variational,  // rows of the discrete gradient, second order
    HighOrder,    // strong form, Fornberg stencils, fourth order on uniform grids
    HighOrder6    // same with sixth-order stencils
};

struct Residual {
    AxiField interior;
    std::vector<double> boundary;  // per r node on z = 0
    double interior_max = 0.0;
    double boundary_max = 0.0;
};

// interior = -c_n Lap u + S u - K (u+)^{(n+2)/(n-2)},
// boundary = 2/(n-2) du/dnu + eps u - H (u+)^{n/(n-2)}.
// HighOrder skips the `margin` outermost rows/columns (one-sided stencils
// are used elsewhere near edges).
Residual residual(const ModelProblem& problem, const AxiField& u,
                  ResidualScheme scheme = ResidualScheme::Variational, size_t margin = 0);

// Linearization at the bubble profile U (values on the grid), for a field v
// with any angular factor: -c_n Lap v + p|K| U^{p-1} v and
// 2/(n-2) dv/dnu - n/(n-2) H U^{2/(n-2)} v. High-order scheme only.
Residual linear_residual(const AxiField& U, const AxiField& v, double absK, double H,
                         size_t margin = 0, int order = 4);

// Finite-difference weights (Fornberg) for the derivatives 0..m at x0.
std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& x, int m);

// Sampling helpers.
AxiField sample(GridPtr grid, const Harmonic& h, const std::function<double(double, double)>& f);
AxiField sample_bubble(GridPtr grid, const BubbleParams& p);
// Bilinear interpolation of the profile; clamps to the grid box.
double interpolate(const AxiField& f, double r, double z);

// -c_n Lap w + S w = f, dw/dnu = g on z = 0, natural Neumann far out.
struct LinearSolveReport {
    double relative_residual = 0.0;
};
AxiField solve_linear(const ModelProblem& problem, const AxiField& interior_source,
                      const std::vector<double>& boundary_flux, LinearSolveReport* report = nullptr);

// The V_p source 8(n-1)/(n-2) h^{ij} d_ij U x_n (delta = 1), trace removed.
AxiField ep_source(const CurvaturePointData& data, GridPtr grid);

struct VpOptions {
    double tol = 1e-12;
    int max_iter = 20000;
};

// Linear problem sourced by E_p, homogeneous Dirichlet on the far edge of
// the grid (and on the axis for mode >= 1), projected CG orthogonal to the
// discretized kernels of the same angular factor.
AxiField solve_vp(const CurvaturePointData& data, GridPtr grid, const VpOptions& opt = {});

struct VpReport {
    double orthogonality = 0.0;     // max_i |int v j_i|
    double iii_interior = 0.0;      // |K| int U^{(n+2)/(n-2)} v
    double iii_boundary = 0.0;      // (n-1) H int_bdry U^{n/(n-2)} v
    double iii_scale = 0.0;         // same integrals with |v|, |Y|
    double iii_gap = 0.0;           // |difference| / scale
    double quad_form = 0.0;         // int (L v) v, discrete bilinear form
    double quad_form_source = 0.0;  // int E_p v
    double f_term = 0.0;            // 1/2 quad_form
    double decay_slope = 0.0;
    std::vector<std::pair<double, double>> decay_samples;  // (R, max |v| on |x| = R)
    int cg_iterations = 0;
};

VpReport vp_report(const CurvaturePointData& data, const AxiField& v);

// Snapshot format: header lines starting with '#', then "r z mode value".
void write_snapshot(const std::string& path, const AxiField& f,
                    const std::vector<std::pair<std::string, std::string>>& meta = {});
AxiField read_snapshot(const std::string& path,
                       std::vector<std::pair<std::string, std::string>>* meta = nullptr);

}  // namespace blowup
