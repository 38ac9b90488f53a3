#include "blowup/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

GaussRule make_rule(int n) {
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.x[i] = -x;
        g.x[n - 1 - i] = x;
        g.w[i] = w;
        g.w[n - 1 - i] = w;
    }
    return g;
}

// mag (optional) receives the same rule applied to |f|
double panel(const std::function<double(double)>& f, double a, double b, const GaussRule& g,
             long& evals, double* mag = nullptr) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0, m = 0.0;
    for (size_t i = 0; i < g.x.size(); ++i) {
        double v = f(c + h * g.x[i]);
        s += g.w[i] * v;
        m += g.w[i] * std::abs(v);
    }
    evals += static_cast<long>(g.x.size());
    if (mag) *mag = m * std::abs(h);
    return s * h;
}

// Global adaptive scheme: always split the segment with the largest error
// estimate |l + r - whole|; stop when the summed estimate meets the tolerance.
struct Segment {
    double a, b, l, r, ml, mr, err;
    int depth;
};

struct Adaptive {
    const std::function<double(double)>& f;
    const GaussRule& g;
    int max_depth;
    size_t max_segments = 2000;
    long evals = 0;

    Segment make(double a, double b, double whole, int depth) {
        Segment s{a, b, 0, 0, 0, 0, 0, depth};
        double m = 0.5 * (a + b);
        s.l = panel(f, a, m, g, evals, &s.ml);
        s.r = panel(f, m, b, g, evals, &s.mr);
        s.err = std::abs(s.l + s.r - whole);
        return s;
    }
};

double sphere_area_full(int dim) {  // |S^{dim-1}|
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

}  // namespace

const GaussRule& gauss_legendre(int npts) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    if (npts < 1) throw DomainError("gauss_legendre: order must be positive");
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(npts);
    if (it == cache.end()) it = cache.emplace(npts, make_rule(npts)).first;
    return it->second;
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              int npts, double abs_tol, double rel_tol, int max_depth) {
    QuadResult res;
    if (a == b) return res;
    const GaussRule& g = gauss_legendre(npts);
    Adaptive ad{f, g, max_depth};
    double whole = panel(f, a, b, g, ad.evals);
    auto worse = [](const Segment& x, const Segment& y) { return x.err < y.err; };
    std::vector<Segment> heap{ad.make(a, b, whole, 0)};
    double err = heap[0].err, mag = heap[0].ml + heap[0].mr;
    // tolerances relative to int |f|, so integrals that cancel to zero stop
    std::vector<Segment> done;  // at max depth, not split further
    while (!heap.empty() && err > std::max(abs_tol, rel_tol * mag) &&
           heap.size() + done.size() < ad.max_segments) {
        std::pop_heap(heap.begin(), heap.end(), worse);
        Segment s = heap.back();
        heap.pop_back();
        if (s.depth >= max_depth || !(s.b - s.a > 1e-300)) {
            done.push_back(s);
            continue;
        }
        double m = 0.5 * (s.a + s.b);
        Segment x = ad.make(s.a, m, s.l, s.depth + 1), y = ad.make(m, s.b, s.r, s.depth + 1);
        err += x.err + y.err - s.err;
        mag += x.ml + x.mr + y.ml + y.mr - s.ml - s.mr;
        for (Segment* t : {&x, &y}) {
            heap.push_back(*t);
            std::push_heap(heap.begin(), heap.end(), worse);
        }
    }
    done.insert(done.end(), heap.begin(), heap.end());
    std::sort(done.begin(), done.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
    res.value = 0.0;
    double e = 0.0;
    for (const Segment& s : done) {
        res.value += s.l + s.r;
        e += s.err;
    }
    res.error = e;
    res.evaluations = ad.evals;
    return res;
}

void QuadratureSpec::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw DomainError("QuadratureSpec: tolerances must be positive");
    if (radial_points < 16) throw DomainError("QuadratureSpec: radial_points must be >= 16");
    if (angular_mode < 0) throw DomainError("QuadratureSpec: angular_mode must be >= 0");
    if (truncation_radius < 0.0 || support_radius < 0.0)
        throw DomainError("QuadratureSpec: radii must be nonnegative");
    if (support_radius == 0.0 && !(decay_exponent > 0.0))
        throw DomainError("QuadratureSpec: declared decay too slow for convergence (s <= 0)");
}

double sphere_measure(int n) {
    if (n < 2) throw DomainError("sphere_measure: n must be >= 2");
    return sphere_area_full(n - 1);
}

double angular_weight(int n, int mode) {
    double k = n - 1;
    switch (mode) {
        case 0: return 1.0;
        case 1: return 1.0 / k;
        case 2:
            if (n < 4) throw DomainError("angular_weight: mode 2 needs n >= 4");
            return 4.0 / (k * (k + 2.0));
        default: throw DomainError("angular_weight: only modes 0, 1, 2 are tabulated");
    }
}

namespace {

// radial pieces in tan-mapped variable over [0, atan R]
struct Truncation {
    double radius;
    double tail;
};

template <class SampleMax>
Truncation choose_radius(const QuadratureSpec& spec, double dim, double measure,
                         SampleMax&& sample_max, const std::function<double(double)>& estimate) {
    const double s = spec.decay_exponent;
    auto tail_at = [&](double R) {
        double M = 2.0 * sample_max(R) * std::pow(R, dim + s);
        return M * measure * std::pow(R, -s) / s;
    };
    if (spec.support_radius > 0.0) return {spec.support_radius, 0.0};
    if (spec.truncation_radius > 0.0) {
        double R = spec.truncation_radius;
        double t = tail_at(R);
        double target = std::max(spec.abs_tol, spec.rel_tol * std::abs(estimate(R)));
        if (t > target)
            throw NumericalError("quadrature: tail bound " + std::to_string(t) +
                                     " exceeds tolerance at the given truncation radius",
                                 {t});
        return {R, t};
    }
    double R = 16.0;
    double est = estimate(R);
    for (; R <= 1e16; R *= 2.0) {
        double target = std::max(spec.abs_tol, spec.rel_tol * std::abs(est));
        double t = tail_at(R);
        if (t <= 0.1 * target) return {R, t};
    }
    double t = tail_at(1e16);
    throw NumericalError("quadrature: tail bound " + std::to_string(t) +
                             " does not meet tolerance; declared decay too slow",
                         {t});
}

// tan-mapped cut points in [0, atan R]
std::vector<double> tau_cuts(const QuadratureSpec& spec, double R) {
    std::vector<double> c{0.0};
    std::vector<double> b = spec.breaks;
    std::sort(b.begin(), b.end());
    for (double x : b)
        if (x > 0.0 && x < R) c.push_back(std::atan(x));
    c.push_back(std::atan(R));
    return c;
}

QuadResult integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& cuts,
                            int npts, double abs_tol, double rel_tol) {
    QuadResult res;
    const double share = 1.0 / (cuts.size() - 1);
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
        QuadResult r = integrate_adaptive(f, cuts[k], cuts[k + 1], npts, share * abs_tol, rel_tol);
        res.value += r.value;
        res.error += r.error;
        res.evaluations += r.evaluations;
    }
    return res;
}

double crude_pieces(const std::function<double(double)>& f, const std::vector<double>& cuts,
                    const GaussRule& g) {
    double s = 0.0;
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
        double a = cuts[k], h = 0.5 * (cuts[k + 1] - a);
        for (size_t j = 0; j < g.x.size(); ++j) s += g.w[j] * h * std::abs(f(a + h * (1.0 + g.x[j])));
    }
    return s;
}

}  // namespace

QuadResult halfspace_integral(int n, const std::function<double(double, double)>& f,
                              const QuadratureSpec& spec) {
    spec.validate();
    const double pi = std::numbers::pi;
    const double wang = sphere_measure(n) * angular_weight(n, spec.angular_mode);
    const int np = spec.radial_points;
    const GaussRule& g = gauss_legendre(np);

    auto radial_integrand = [&](double th) {
        double st = std::sin(th), ct = std::cos(th);
        double jac_ang = std::pow(st, n - 2);
        return [=, &f](double tau) {
            double rho = std::tan(tau);
            double sec2 = 1.0 + rho * rho;
            return f(rho * st, rho * ct) * jac_ang * std::pow(rho, n - 1) * sec2;
        };
    };
    // crude fixed-rule value of int |f|, used only to size tolerances
    auto crude = [&](double R) {
        auto cuts = tau_cuts(spec, R);
        double s = 0.0;
        for (int i = 0; i < np; ++i) {
            double th = 0.25 * pi * (1.0 + g.x[i]);
            s += g.w[i] * crude_pieces(radial_integrand(th), cuts, g);
        }
        return s * 0.25 * pi;
    };
    auto sample_max = [&](double R) {
        double m = 0.0;
        for (int i = 0; i <= 32; ++i) {
            double th = 0.5 * pi * i / 32.0;
            m = std::max(m, std::abs(f(R * std::sin(th), R * std::cos(th))));
        }
        return m;
    };
    Truncation tr = choose_radius(spec, n, 0.5 * sphere_area_full(n), sample_max, crude);

    const auto cuts = tau_cuts(spec, tr.radius);
    double scale = std::abs(crude(tr.radius));
    double outer_abs = std::max(spec.abs_tol, spec.rel_tol * scale);
    double inner_abs = 0.1 * outer_abs / (0.5 * pi);
    long evals = 0;
    double inner_err = 0.0;
    std::function<double(double)> outer = [&](double th) {
        QuadResult r = integrate_pieces(radial_integrand(th), cuts, np, inner_abs, 0.1 * spec.rel_tol);
        evals += r.evaluations;
        inner_err = std::max(inner_err, r.error);
        return r.value;
    };
    QuadResult o = integrate_adaptive(outer, 0.0, 0.5 * pi, np, outer_abs, spec.rel_tol);
    QuadResult res;
    res.value = wang * o.value;
    res.tail = tr.tail * angular_weight(n, spec.angular_mode);
    res.error = wang * (o.error + 0.5 * pi * inner_err) + res.tail;
    res.evaluations = evals;
    return res;
}

QuadResult boundary_integral(int n, const std::function<double(double)>& f,
                             const QuadratureSpec& spec) {
    spec.validate();
    const double w = sphere_measure(n) * angular_weight(n, spec.angular_mode);
    const int np = spec.radial_points;
    const GaussRule& g = gauss_legendre(np);
    auto integrand = [&](double tau) {
        double r = std::tan(tau);
        return f(r) * std::pow(r, n - 2) * (1.0 + r * r);
    };
    auto crude = [&](double R) { return crude_pieces(integrand, tau_cuts(spec, R), g); };
    auto sample_max = [&](double R) { return std::abs(f(R)); };
    Truncation tr = choose_radius(spec, n - 1, sphere_measure(n), sample_max, crude);
    QuadResult r = integrate_pieces(integrand, tau_cuts(spec, tr.radius), np, spec.abs_tol, spec.rel_tol);
    QuadResult res;
    res.value = w * r.value;
    res.tail = tr.tail * angular_weight(n, spec.angular_mode);
    res.error = w * r.error + res.tail;
    res.evaluations = r.evaluations;
    return res;
}

RateFit richardson_fit(const std::vector<double>& params, const std::vector<double>& values,
                       RateModel model) {
    const size_t m = params.size();
    if (m < 3 || values.size() != m)
        throw DomainError("richardson_fit: need >= 3 matching samples");
    for (size_t i = 0; i < m; ++i) {
        if (!(params[i] > 0.0)) throw DomainError("richardson_fit: parameters must be positive");
        if (i > 0 && !(params[i] < params[i - 1]))
            throw DomainError("richardson_fit: parameters must be strictly decreasing");
        if (model == RateModel::PowerLog && !(params[i] < 1.0))
            throw DomainError("richardson_fit: log model needs parameters < 1");
    }
    double sign = values[0] > 0 ? 1.0 : -1.0;
    for (double v : values)
        if (!(v * sign > 0.0) || !std::isfinite(v))
            throw DomainError("richardson_fit: values must be nonzero, finite and of one sign");
    Eigen::MatrixXd X(m, 2);
    Eigen::VectorXd y(m);
    for (size_t i = 0; i < m; ++i) {
        double le = std::log(params[i]);
        X(i, 0) = 1.0;
        X(i, 1) = le;
        y(i) = std::log(values[i] * sign);
        if (model == RateModel::PowerLog) y(i) -= std::log(std::abs(le));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < 2) throw DomainError("richardson_fit: collinear samples");
    Eigen::VectorXd b = qr.solve(y);
    RateFit fit;
    fit.c = sign * std::exp(b(0));
    fit.q = b(1);
    fit.residual = (X * b - y).norm();
    return fit;
}

Extrapolation extrapolate_to_zero(const std::vector<double>& t, const std::vector<double>& values,
                                  int order) {
    const size_t m = t.size();
    if (order < 0 || m < static_cast<size_t>(order) + 1 || values.size() != m)
        throw DomainError("extrapolate_to_zero: not enough samples for the order");
    Eigen::MatrixXd X(m, order + 1);
    Eigen::VectorXd y(m);
    double tmax = 0.0;
    for (double v : t) tmax = std::max(tmax, std::abs(v));
    if (!(tmax > 0.0)) throw DomainError("extrapolate_to_zero: degenerate abscissae");
    for (size_t i = 0; i < m; ++i) {
        double p = 1.0;
        for (int k = 0; k <= order; ++k) {
            X(i, k) = p;
            p *= t[i] / tmax;
        }
        y(i) = values[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < order + 1) throw DomainError("extrapolate_to_zero: collinear samples");
    Eigen::VectorXd b = qr.solve(y);
    Extrapolation e;
    e.limit = b(0);
    size_t imin = 0;
    for (size_t i = 1; i < m; ++i)
        if (std::abs(t[i]) < std::abs(t[imin])) imin = i;
    e.last_correction = std::abs(e.limit - values[imin]);
    double p = 1.0;
    for (int k = 0; k <= order; ++k) {
        e.coefficients.push_back(b(k) / p);
        p *= tmax;
    }
    return e;
}

}  // namespace blowup
