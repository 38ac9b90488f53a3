#pragma once

#include <Eigen/Sparse>

#include <functional>
#include <vector>

#include "blowup/axi_grid.hpp"

namespace blowup {

using SpMat = Eigen::SparseMatrix<double>;

// Variational (r, z) discretization for one angular factor: node volumes,
// boundary areas and the stiffness matrix of int |grad u|^2 incl. the
// centrifugal term of the mode. All carry the sphere measure times the
// angular average of Y^2, so sums are physical integrals.
class AxiQuadrature {
public:
    AxiQuadrature(GridPtr grid, const Harmonic& harmonic);

    const AxiGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    int mode() const { return mode_; }
    double angular_factor() const { return wang_; }

    const Eigen::VectorXd& volume() const { return vol_; }    // per node
    const Eigen::VectorXd& area() const { return area_; }     // per node, nonzero on z = 0
    const SpMat& stiffness() const { return stiff_; }         // int grad u . grad v
    // nodes carrying unknowns: active and off the axis for mode >= 1
    const std::vector<char>& free() const { return free_; }

    double l2(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    double boundary_l2(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    double dirichlet(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

private:
    GridPtr grid_;
    int mode_;
    double wang_;
    Eigen::VectorXd vol_, area_;
    SpMat stiff_;
    std::vector<char> free_;
};

// Discretized (pb) on the flat half-domain.
struct ModelProblem {
    GridPtr grid;
    std::vector<double> s_g;  // per node
    std::vector<double> K;    // per node
    std::vector<double> H;    // per r node on z = 0
    double eps = 0.0;
    double h_g = 0.0;         // Escobar normalization

    static ModelProblem from_functions(GridPtr grid,
                                       const std::function<double(double, double)>& s_g,
                                       const std::function<double(double, double)>& K,
                                       const std::function<double(double)>& H, double eps);
    static ModelProblem constant(GridPtr grid, double s_g, double K, double H, double eps);
    // allow_zero_s: the S_g -> 0 limit of the flat model
    void validate(bool allow_zero_s = true) const;
};

// Energy, gradient and Hessian of the discrete J_eps for a mode-0 field.
class DiscreteEnergy {
public:
    DiscreteEnergy(const ModelProblem& problem, const AxiQuadrature& quad);

    double value(const Eigen::VectorXd& u) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& u) const;
    SpMat hessian(const Eigen::VectorXd& u) const;
    // componentwise scale of |gradient| terms, for a backward-error residual
    Eigen::VectorXd gradient_scale(const Eigen::VectorXd& u) const;
    // H^1_g form c_n int grad u grad v + S u v
    SpMat h1_matrix() const;

    const ModelProblem& problem() const { return *prob_; }
    const AxiQuadrature& quad() const { return *quad_; }

private:
    const ModelProblem* prob_;
    const AxiQuadrature* quad_;
    int n_;
    double cn_;
};

// Hessian of J at the pure bubble profile for an arbitrary angular factor
// (the linear problem), optionally with Dirichlet nodes; used for V_p.
SpMat linearized_operator(const AxiQuadrature& quad, const std::vector<double>& U,
                          double absK, double H);

// Replace rows/cols of non-free nodes by identity.
void pin_nodes(SpMat& A, const std::vector<char>& free);

}  // namespace blowup
