#include "blowup/flat_model.hpp"

#include <cmath>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

double cap(double q, double scale) { return q / (1.0 + q / scale); }

struct ModeZero {
    double a;   // tangential trace / (n-1) of hessK
    double b;   // normal entry
    double aH;  // trace / (n-1) of hessH
    double kx;  // hessK_11 (shift direction)
    double hx;  // hessH_11
};

ModeZero mode_zero(const CurvaturePointData& d) {
    const int n = d.n;
    return {d.hessK.topLeftCorner(n - 1, n - 1).trace() / (n - 1.0), d.hessK(n - 1, n - 1),
            d.hessH.trace() / (n - 1.0), d.hessK(0, 0), d.hessH(0, 0)};
}

}  // namespace

void FlatModelSpec::validate() const {
    data.validate();
    if (!(domain_radius > 0.0)) throw ConfigError("model.domain_radius", "must be positive");
    if (!(cutoff_radius > 0.0) || cutoff_radius > domain_radius)
        throw ConfigError("model.cutoff_radius", "must lie in (0, domain_radius]");
    if (!(k_cap > 0.0 && k_cap < 1.0)) throw ConfigError("model.k_cap", "must lie in (0, 1)");
    if (!(h_cap > 0.0)) throw ConfigError("model.h_cap", "must be positive");
    if (!(s_model >= 0.0)) throw ConfigError("model.s_model", "must be nonnegative");
    if (!(h0 > 0.0)) throw ConfigError("grid.h0", "must be positive");
    if (!(ratio > 1.0 && ratio <= 1.5)) throw ConfigError("grid.ratio", "must lie in (1, 1.5]");
    if (data.pi_norm_sq != 0.0 || (data.h_ij.size() && !data.h_ij.isZero(0.0)))
        throw ConfigError("pi_norm_sq", "the flat model has no second fundamental form; set it to 0");
    ModeZero m = mode_zero(data);
    if (m.a < 0.0 || m.b < 0.0 || m.kx < 0.0)
        throw ConfigError("hessK", "the flat model needs a positive semidefinite hessK");
    if (m.aH < 0.0 || m.hx < 0.0)
        throw ConfigError("hessH", "the flat model needs a positive semidefinite hessH");
}

CurvaturePointData FlatModelSpec::center_data() const {
    CurvaturePointData c = data;
    if (shift != 0.0) {
        ModeZero m = mode_zero(data);
        c.K = data.K + cap(0.5 * m.kx * shift * shift, k_cap * std::abs(data.K));
        c.H = data.H + cap(0.5 * m.hx * shift * shift, h_cap * data.H);
    }
    return c;
}

double FlatModelSpec::K_phys(double r, double z) const {
    ModeZero m = mode_zero(data);
    double q = 0.5 * (m.a * r * r + m.b * z * z + m.kx * shift * shift);
    return data.K + cap(q, k_cap * std::abs(data.K));
}

double FlatModelSpec::H_phys(double r) const {
    ModeZero m = mode_zero(data);
    double q = 0.5 * (m.aH * r * r + m.hx * shift * shift);
    return data.H + cap(q, h_cap * data.H);
}

namespace {

FlatFrame frame_common(const FlatModelSpec& spec, double eps, double ell) {
    spec.validate();
    if (!(eps >= 0.0)) throw ConfigError("eps", "must be nonnegative");
    FlatFrame f;
    f.eps = eps;
    f.ell = ell > 0.0 ? ell : concentration_scale(spec.data.n, eps);
    f.center = spec.center_data();
    f.grid = std::make_shared<const AxiGrid>(
        AxiGrid::graded(spec.data.n, spec.h0, spec.ratio, spec.domain_radius / f.ell, spec.kind));
    return f;
}

}  // namespace

FlatFrame make_frame(const FlatModelSpec& spec, double eps, double ell) {
    FlatFrame f = frame_common(spec, eps, ell);
    const double l = f.ell;
    f.problem = ModelProblem::from_functions(
        f.grid, [&](double, double) { return spec.s_model * l * l; },
        [&](double r, double z) { return spec.K_phys(l * r, l * z); },
        [&](double r) { return spec.H_phys(l * r); }, eps * l);
    f.problem.validate();
    return f;
}

FlatFrame make_constant_frame(const FlatModelSpec& spec, double eps, double ell) {
    FlatFrame f = frame_common(spec, eps, ell);
    f.problem = ModelProblem::constant(f.grid, spec.s_model * f.ell * f.ell, f.center.K,
                                       f.center.H, eps * f.ell);
    f.problem.validate();
    return f;
}

}  // namespace blowup
