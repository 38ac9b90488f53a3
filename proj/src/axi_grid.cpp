#include "blowup/axi_grid.hpp"

#include <cmath>
#include <sstream>

#include "blowup/errors.hpp"

namespace blowup {

std::string to_string(DomainKind k) {
    return k == DomainKind::HalfBall ? "half-ball" : "half-space-truncated";
}

DomainKind domain_kind_from_string(const std::string& s) {
    if (s == "half-ball") return DomainKind::HalfBall;
    if (s == "half-space-truncated") return DomainKind::HalfSpaceTruncated;
    throw ConfigError("domain_kind", "unknown domain kind '" + s + "'");
}

AxiGrid AxiGrid::uniform(int n, double h, double extent, DomainKind kind) {
    if (!(h > 0.0) || !(extent > h)) throw DomainError("AxiGrid::uniform: need 0 < h < extent");
    AxiGrid g;
    g.n = n;
    g.kind = kind;
    size_t m = static_cast<size_t>(std::llround(extent / h));
    for (size_t i = 0; i <= m; ++i) g.r.push_back(i * h);
    g.z = g.r;
    g.radius = g.r.back();
    g.validate();
    return g;
}

AxiGrid AxiGrid::graded(int n, double h0, double ratio, double extent, DomainKind kind) {
    if (!(h0 > 0.0) || !(ratio > 1.0) || ratio > 1.5 || !(extent > h0))
        throw DomainError("AxiGrid::graded: need h0 > 0, 1 < ratio <= 1.5, extent > h0");
    AxiGrid g;
    g.n = n;
    g.kind = kind;
    double x = 0.0, h = h0;
    const double knee = h0 / (ratio - 1.0);
    g.r.push_back(0.0);
    while (x < extent) {
        if (x >= knee) h *= ratio;
        x += h;
        g.r.push_back(x);
    }
    g.z = g.r;
    g.radius = extent;
    g.validate();
    return g;
}

void AxiGrid::validate() const {
    if (n < 3) throw DomainError("AxiGrid: dimension must be >= 3");
    if (r.size() < 3 || z.size() < 3) throw DomainError("AxiGrid: need at least 3 nodes per axis");
    if (r[0] != 0.0) throw DomainError("AxiGrid: first r node must be the axis");
    if (z[0] != 0.0) throw DomainError("AxiGrid: first z node must be the boundary");
    auto check = [](const std::vector<double>& v, const char* name) {
        for (size_t i = 1; i < v.size(); ++i) {
            if (!(v[i] > v[i - 1]))
                throw DomainError(std::string("AxiGrid: ") + name + " nodes not increasing");
            if (i > 1) {
                double a = v[i - 1] - v[i - 2], b = v[i] - v[i - 1];
                double q = std::max(a / b, b / a);
                if (q > 1.5 + 1e-12)
                    throw DomainError(std::string("AxiGrid: ") + name +
                                      " spacing ratio exceeds 1.5");
            }
        }
    };
    check(r, "r");
    check(z, "z");
    if (kind == DomainKind::HalfBall && !(radius > 0.0))
        throw DomainError("AxiGrid: half-ball radius must be positive");
}

bool AxiGrid::active(size_t i, size_t j) const {
    if (kind == DomainKind::HalfSpaceTruncated) return true;
    return r[i] * r[i] + z[j] * z[j] <= radius * radius * (1.0 + 1e-14);
}

double AxiGrid::extent() const {
    if (kind == DomainKind::HalfBall) return radius;
    return std::min(r.back(), z.back());
}

Harmonic Harmonic::constant(int n) {
    Harmonic h;
    h.dim = n - 1;
    h.c0 = 1.0;
    h.c1 = Eigen::VectorXd::Zero(n - 1);
    h.c2 = Eigen::MatrixXd::Zero(n - 1, n - 1);
    return h;
}

Harmonic Harmonic::coordinate(int n, int i) {
    if (i < 0 || i >= n - 1) throw DomainError("Harmonic::coordinate: index out of range");
    Harmonic h = constant(n);
    h.c0 = 0.0;
    h.c1(i) = 1.0;
    return h;
}

Harmonic Harmonic::quadratic(int n, const Eigen::MatrixXd& m) {
    if (m.rows() != n - 1 || m.cols() != n - 1)
        throw DomainError("Harmonic::quadratic: matrix must be (n-1)x(n-1)");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
        throw DomainError("Harmonic::quadratic: h_ij must be symmetric");
    Harmonic h = constant(n);
    h.c0 = 0.0;
    h.c2 = m - (m.trace() / (n - 1.0)) * Eigen::MatrixXd::Identity(n - 1, n - 1);
    return h;
}

int Harmonic::mode() const {
    if (c2.size() && c2.cwiseAbs().maxCoeff() > 0.0) return 2;
    if (c1.size() && c1.cwiseAbs().maxCoeff() > 0.0) return 1;
    return 0;
}

bool Harmonic::is_zero() const { return mode() == 0 && c0 == 0.0; }

std::string Harmonic::tag() const {
    std::ostringstream os;
    os.precision(17);
    os << "Y" << mode() << "[" << c0;
    for (int i = 0; i < c1.size(); ++i) os << "," << c1(i);
    for (int i = 0; i < c2.rows(); ++i)
        for (int j = i; j < c2.cols(); ++j) os << "," << c2(i, j);
    os << "]";
    return os.str();
}

bool same_harmonic(const Harmonic& a, const Harmonic& b) {
    return a.dim == b.dim && a.c0 == b.c0 && a.c1 == b.c1 && a.c2 == b.c2;
}

namespace {

// E[theta_i theta_j] = delta_ij / k, E[theta_i theta_j theta_k theta_l] = sym / (k (k+2))
double avg_deg2(const Eigen::MatrixXd& a, int k) { return a.trace() / k; }

double avg_deg4(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int k) {
    double s = a.trace() * b.trace() + 2.0 * (a.cwiseProduct(b.transpose())).sum();
    return s / (k * (k + 2.0));
}

}  // namespace

double angular_average(const Harmonic& a, const Harmonic& b) {
    if (a.dim != b.dim) throw DomainError("angular_average: dimension mismatch");
    const int k = a.dim;
    double s = a.c0 * b.c0;
    s += a.c0 * avg_deg2(b.c2, k) + b.c0 * avg_deg2(a.c2, k);
    s += a.c1.dot(b.c1) / k;
    s += avg_deg4(a.c2, b.c2, k);
    return s;
}

double angular_mean(const Harmonic& a) { return a.c0 + avg_deg2(a.c2, a.dim); }

AxiField::AxiField(GridPtr g, Harmonic h) : grid(std::move(g)), harmonic(std::move(h)) {
    if (!grid) throw DomainError("AxiField: null grid");
    values.assign(grid->size(), 0.0);
}

AxiField::AxiField(GridPtr g, Harmonic h, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v)), harmonic(std::move(h)) {
    validate();
}

AxiField AxiField::zeros(GridPtr g) {
    int n = g->n;
    return AxiField(std::move(g), Harmonic::constant(n));
}

void AxiField::validate() const {
    if (!grid) throw DomainError("AxiField: null grid");
    if (values.size() != grid->size()) throw DomainError("AxiField: grid/field size mismatch");
    if (harmonic.dim != grid->n - 1) throw DomainError("AxiField: harmonic dimension mismatch");
    for (double v : values)
        if (!std::isfinite(v)) throw DomainError("AxiField: non-finite value");
    if (mode() >= 1)
        for (size_t j = 0; j < grid->nz(); ++j)
            if (values[grid->index(0, j)] != 0.0)
                throw DomainError("AxiField: mode >= 1 field must vanish on the axis");
}

}  // namespace blowup
