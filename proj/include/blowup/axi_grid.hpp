#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace blowup {

enum class DomainKind { HalfSpaceTruncated, HalfBall };

std::string to_string(DomainKind k);
DomainKind domain_kind_from_string(const std::string& s);

// Tensor grid in (r, z) = (|x~|, x_n) for an n-dimensional half-domain.
struct AxiGrid {
    int n = 5;
    std::vector<double> r;
    std::vector<double> z;
    DomainKind kind = DomainKind::HalfSpaceTruncated;
    double radius = 0.0;  // half-ball radius; unused for the truncated box

    static AxiGrid uniform(int n, double h, double extent,
                           DomainKind kind = DomainKind::HalfSpaceTruncated);
    // spacing h0 up to h0/(ratio-1), then geometric growth; same nodes in r and z.
    // The last node is the first one at or past extent, so grids with a common
    // (h0, ratio) are prefixes of each other.
    static AxiGrid graded(int n, double h0, double ratio, double extent,
                          DomainKind kind = DomainKind::HalfSpaceTruncated);

    void validate() const;
    size_t nr() const { return r.size(); }
    size_t nz() const { return z.size(); }
    size_t size() const { return r.size() * z.size(); }
    size_t index(size_t i, size_t j) const { return j * r.size() + i; }
    bool active(size_t i, size_t j) const;
    double extent() const;  // largest |x| covered by active nodes
};

using GridPtr = std::shared_ptr<const AxiGrid>;

// Angular factor Y on S^{n-2}: c0 + c1 . theta + theta^T c2 theta.
struct Harmonic {
    int dim = 0;  // n - 1
    double c0 = 1.0;
    Eigen::VectorXd c1;
    Eigen::MatrixXd c2;

    static Harmonic constant(int n);
    static Harmonic coordinate(int n, int i);                 // theta_i, i in 0..n-2
    static Harmonic quadratic(int n, const Eigen::MatrixXd& h);  // trace removed

    int mode() const;            // highest nonzero degree
    bool is_zero() const;
    std::string tag() const;
};

// Exact sphere moments: average over S^{n-2} of Y1 * Y2, and of Y.
double angular_average(const Harmonic& a, const Harmonic& b);
double angular_mean(const Harmonic& a);

// Axisymmetric profile times an angular factor.
struct AxiField {
    GridPtr grid;
    std::vector<double> values;
    Harmonic harmonic;

    AxiField() = default;
    AxiField(GridPtr g, Harmonic h);
    AxiField(GridPtr g, Harmonic h, std::vector<double> v);
    static AxiField zeros(GridPtr g);

    int mode() const { return harmonic.mode(); }
    double angular_weight() const { return angular_average(harmonic, harmonic); }
    double at(size_t i, size_t j) const { return values[grid->index(i, j)]; }
    void validate() const;
};

bool same_harmonic(const Harmonic& a, const Harmonic& b);

}  // namespace blowup
