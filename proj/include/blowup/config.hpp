#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blowup/closed_forms.hpp"
#include "blowup/continuation.hpp"
#include "blowup/flat_model.hpp"
#include "blowup/reduction.hpp"

namespace blowup {

inline constexpr int kSchemaVersion = 1;

enum class Command { VerifyClosedForms, Vp, Reduce, Solve, Rates };
std::string to_string(Command c);
Command command_from_string(const std::string& s);  // ConfigError on "command"

// Lengths carry their unit in the key: *_phys are physical lengths, *_scaled
// are in the frame y = x / ell, *_bubble in units of the bubble size.
struct GridBlock {
    double h0_scaled = 1e-4;
    double ratio = 1.05;
    double domain_radius_phys = 10.0;
    double cutoff_radius_phys = 5.0;
    std::string kind = "half-ball";
    double k_cap = 0.5;
    double h_cap = 1.0;
    double s_model = 0.0;
};

struct ClosedFormsBlock {
    std::vector<int> dims{4, 5, 6, 7};
    std::vector<double> D{1.5, 2.0, 3.0};
    double quad_rel_tol = 1e-13;
    // bubble/kernel residual study, uniform grids on [0, extent]^2
    std::vector<double> residual_h_bubble{0.02, 0.01, 0.005};
    double residual_extent_bubble = 4.0;
    std::string residual_scheme = "high_order6";
};

struct VpBlock {
    std::vector<double> h0_bubble{0.04, 0.02, 0.01};
    double ratio = 1.04;
    double radius_bubble = 1000.0;
    double cg_tol = 1e-12;
};

struct MaximizeBlock {
    bool enabled = false;
    std::vector<double> eps;
    double s_lo_phys = -0.5, s_hi_phys = 0.5;
    double d_lo = 0.05, d_hi = 1.0;
    int ns = 9, nd = 17, refinements = 3;
};

struct ReduceBlock {
    std::vector<double> d_grid;
    std::vector<double> eps_path;
    int extrapolation_order = 2;
    double aux_tol = 1e-10;
    int aux_max_iter = 30;
    MaximizeBlock maximize;
};

struct SolveBlock {
    std::vector<double> eps_path;
    double d_init = 0.0;
    double newton_tol = 1e-10;
    int newton_max_iter = 40;
    double negative_tol = 1e-10;
    double aux_tol = 1e-10;
    double min_step_ratio = 0.05;
    bool shooting_fallback = true;
};

struct RatesBlock {
    std::string run_dir;  // empty: run the continuation of the solve block
    double f_term = 0.0;
};

// Verdict thresholds of the suites.
struct Tolerances {
    double beta_vs_quadrature = 1e-10;
    double beta_identity = 1e-12;
    double bubble_energy = 1e-6;
    double residual_order = 1.9;
    double residual_finest = 1e-6;
    double vp_orthogonality = 1e-8;
    double vp_identity = 1e-3;
    double vp_slope = 0.3;
    double expansion_rel = 0.1;
    double phi_exponent = 1.3;
    double phi_ratio_growth = 2.0;   // n = 4: max(|Phi|/rho) / first
    double solve_residual = 1e-8;
    double rate_gap = 0.2;
    double amplitude_spread = 0.05;
    double certificate_rel = 1e-6;   // stored vs recomputed residual
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    Command command = Command::VerifyClosedForms;
    CurvaturePointData curvature;
    // presence flags, for "all referenced blocks present"
    bool has_grid = false, has_closed_forms = false, has_vp = false, has_reduce = false,
         has_solve = false, has_rates = false;
    GridBlock grid;
    ClosedFormsBlock closed_forms;
    VpBlock vp;
    ReduceBlock reduce;
    SolveBlock solve;
    RatesBlock rates;
    Tolerances tolerances;
    std::string output_dir = "runs/out";

    // throws ConfigError naming the field
    void validate() const;

    FlatModelSpec flat_model() const;
    ContinuationSpec continuation_spec() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
// Fully resolved config; parse_config(to_json(c)) reproduces c.
std::string to_json(const RunConfig& c);

}  // namespace blowup
