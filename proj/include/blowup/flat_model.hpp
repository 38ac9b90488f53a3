#pragma once

#include "blowup/axi_grid.hpp"
#include "blowup/closed_forms.hpp"
#include "blowup/discrete.hpp"

namespace blowup {

// Flat Fermi model around a common minimum p0 of K and H. Quadratic local
// model from the Hessians, saturated far away so K stays negative and H
// bounded:  K = K(p0) + cap(q_K),  cap(q) = q / (1 + q / (k_cap |K(p0)|)),
// with q_K the angular average of 1/2 <D^2K (x - p0), x - p0>.
struct FlatModelSpec {
    CurvaturePointData data;          // at p0
    double domain_radius = 10.0;      // physical
    double cutoff_radius = 5.0;       // physical, ansatz cutoff
    double k_cap = 0.5;
    double h_cap = 1.0;
    double s_model = 0.0;             // S_g of the model (0: flat limit)
    double h0 = 1e-4;                 // grid spacing near the axis, scaled units
    double ratio = 1.05;              // geometric growth, scaled units
    DomainKind kind = DomainKind::HalfBall;
    double shift = 0.0;               // distance of the bubble center from p0 along x_1

    void validate() const;
    // values at the bubble center p(shift)
    CurvaturePointData center_data() const;
    double K_phys(double r, double z) const;   // in the frame of the bubble center
    double H_phys(double r) const;
};

// One eps of the model in coordinates y = x / ell.
struct FlatFrame {
    double eps = 0.0;
    double ell = 1.0;
    CurvaturePointData center;
    GridPtr grid;
    ModelProblem problem;
};

// ell = eps (n >= 5) or rho(eps) (n = 4) unless given.
FlatFrame make_frame(const FlatModelSpec& spec, double eps, double ell = 0.0);
// same frame, coefficients frozen at their center values (limit problem)
FlatFrame make_constant_frame(const FlatModelSpec& spec, double eps, double ell = 0.0);

}  // namespace blowup
