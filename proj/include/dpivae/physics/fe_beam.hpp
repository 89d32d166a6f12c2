#pragma once

#include <array>
#include <vector>

#include "dpivae/core.hpp"
#include "dpivae/physics/banded.hpp"

namespace dpivae {

/// Hermite cubic Euler-Bernoulli beam elements on a 1-D mesh.
/// DOF ordering is (w_0, theta_0, w_1, theta_1, ...), giving a symmetric
/// banded stiffness matrix with half-bandwidth 3.
namespace fe {

/// Hermite shape functions at local coordinate xi in [0, 1] for an element of
/// length h; rotation DOFs carry a factor h.
inline std::array<double, 4> shape(double xi, double h) {
    double xi2 = xi * xi, xi3 = xi2 * xi;
    return {1.0 - 3.0 * xi2 + 2.0 * xi3, h * (xi - 2.0 * xi2 + xi3),
            3.0 * xi2 - 2.0 * xi3, h * (xi3 - xi2)};
}

inline std::array<double, 4> shape_dxi(double xi, double h) {
    double xi2 = xi * xi;
    return {-6.0 * xi + 6.0 * xi2, h * (1.0 - 4.0 * xi + 3.0 * xi2),
            6.0 * xi - 6.0 * xi2, h * (3.0 * xi2 - 2.0 * xi)};
}

/// d/dh of shape() at fixed xi.
inline std::array<double, 4> shape_dh(double xi, double) {
    double xi2 = xi * xi, xi3 = xi2 * xi;
    return {0.0, xi - 2.0 * xi2 + xi3, 0.0, xi3 - xi2};
}

/// Second derivative of the transverse displacement, w''(x) = B . u_e.
inline std::array<double, 4> curvature_row(double xi, double h) {
    double h2 = h * h;
    return {(-6.0 + 12.0 * xi) / h2, (-4.0 + 6.0 * xi) / h,
            (6.0 - 12.0 * xi) / h2, (-2.0 + 6.0 * xi) / h};
}

inline std::array<double, 4> curvature_row_dxi(double, double h) {
    double h2 = h * h;
    return {12.0 / h2, 6.0 / h, -12.0 / h2, 6.0 / h};
}

inline std::array<double, 4> curvature_row_dh(double xi, double h) {
    double h2 = h * h, h3 = h2 * h;
    return {-2.0 * (-6.0 + 12.0 * xi) / h3, -(-4.0 + 6.0 * xi) / h2,
            -2.0 * (6.0 - 12.0 * xi) / h3, -(-2.0 + 6.0 * xi) / h2};
}

/// 4x4 element bending stiffness for flexural rigidity EI and length h.
inline Eigen::Matrix4d element_stiffness(double EI, double h) {
    double h2 = h * h, h3 = h2 * h;
    Eigen::Matrix4d k;
    k << 12.0 / h3, 6.0 / h2, -12.0 / h3, 6.0 / h2,
         6.0 / h2, 4.0 / h, -6.0 / h2, 2.0 / h,
         -12.0 / h3, -6.0 / h2, 12.0 / h3, -6.0 / h2,
         6.0 / h2, 2.0 / h, -6.0 / h2, 4.0 / h;
    return EI * k;
}

/// d/dh of element_stiffness.
inline Eigen::Matrix4d element_stiffness_dh(double EI, double h) {
    double h2 = h * h, h3 = h2 * h, h4 = h3 * h;
    Eigen::Matrix4d k;
    k << -36.0 / h4, -12.0 / h3, 36.0 / h4, -12.0 / h3,
         -12.0 / h3, -4.0 / h2, 12.0 / h3, -2.0 / h2,
         36.0 / h4, 12.0 / h3, -36.0 / h4, 12.0 / h3,
         -12.0 / h3, -2.0 / h2, 12.0 / h3, -4.0 / h2;
    return EI * k;
}

struct Mesh {
    std::vector<double> nodes;  // strictly increasing positions

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_elements() const { return n_nodes() - 1; }
    int n_dof() const { return 2 * n_nodes(); }
    double length(int e) const { return nodes[e + 1] - nodes[e]; }

    /// Element containing x (boundaries resolve to the left element except at
    /// the left end of the mesh).
    int locate(double x) const {
        int lo = 0, hi = n_elements() - 1;
        while (lo < hi) {
            int mid = (lo + hi + 1) / 2;
            if (x >= nodes[mid]) lo = mid; else hi = mid - 1;
        }
        return lo;
    }
};

/// Uniform subdivision between fixed breakpoints; every breakpoint becomes a
/// node. `target` is the total element count to aim for.
inline Mesh mesh_from_breakpoints(const std::vector<double>& breaks, int target) {
    Mesh m;
    double total = breaks.back() - breaks.front();
    m.nodes.push_back(breaks.front());
    for (size_t s = 0; s + 1 < breaks.size(); ++s) {
        double seg = breaks[s + 1] - breaks[s];
        int n = std::max(1, static_cast<int>(std::lround(target * seg / total)));
        for (int i = 1; i <= n; ++i)
            m.nodes.push_back(breaks[s] + seg * i / n);
    }
    return m;
}

class Assembly {
public:
    explicit Assembly(const Mesh& mesh)
        : mesh_(mesh), K_(mesh.n_dof(), 3), F_(Vec::Zero(mesh.n_dof())) {}

    /// EI may vary per element (damaged zones).
    void add_bending(const std::vector<double>& EI) {
        for (int e = 0; e < mesh_.n_elements(); ++e) {
            Eigen::Matrix4d k = element_stiffness(EI[e], mesh_.length(e));
            for (int a = 0; a < 4; ++a)
                for (int b = a; b < 4; ++b)
                    K_.add(2 * e + a, 2 * e + b, a <= b ? k(a, b) : 0.0);
        }
    }

    void add_translation_spring(int node, double k) { K_.add(2 * node, 2 * node, k); }
    void add_rotation_spring(int node, double k) { K_.add(2 * node + 1, 2 * node + 1, k); }

    /// Pin the transverse DOF of a node (eliminated exactly: the row and
    /// column are zeroed and the diagonal set to one before factorization).
    void fix(int node) { fixed_.push_back(2 * node); }
    void fix_dof(int dof) { fixed_.push_back(dof); }

    void add_point_load(double position, double P) {
        int e = mesh_.locate(position);
        double h = mesh_.length(e);
        double xi = (position - mesh_.nodes[e]) / h;
        auto N = shape(xi, h);
        for (int a = 0; a < 4; ++a) F_[2 * e + a] += P * N[a];
    }

    void factorize() {
        for (int d : fixed_) {
            for (int o = -3; o <= 3; ++o) {
                int j = d + o;
                if (o == 0 || j < 0 || j >= K_.size()) continue;
                K_.at(d, j) = 0.0;
            }
            K_.at(d, d) = 1.0;
            F_[d] = 0.0;
        }
        K_.factorize();
    }
    Vec solve() const { return K_.solve(F_); }
    Vec solve(const Vec& rhs) const { return K_.solve(rhs); }
    Vec& load() { return F_; }
    BandedSpd& stiffness() { return K_; }

    double deflection_at(const Vec& u, double x) const {
        int e = mesh_.locate(x);
        double h = mesh_.length(e);
        double xi = (x - mesh_.nodes[e]) / h;
        auto N = shape(xi, h);
        double w = 0.0;
        for (int a = 0; a < 4; ++a) w += N[a] * u[2 * e + a];
        return w;
    }

    double curvature_at(const Vec& u, double x) const {
        int e = mesh_.locate(x);
        double h = mesh_.length(e);
        double xi = (x - mesh_.nodes[e]) / h;
        auto B = curvature_row(xi, h);
        double c = 0.0;
        for (int a = 0; a < 4; ++a) c += B[a] * u[2 * e + a];
        return c;
    }

private:
    const Mesh& mesh_;
    BandedSpd K_;
    Vec F_;
    std::vector<int> fixed_;
};

}  // namespace fe
}  // namespace dpivae
