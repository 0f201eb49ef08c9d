// Shared fixtures and reference implementations for the test suite.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hodgeopt/hodgeopt.hpp"

namespace testing_support {

using namespace hodgeopt;

inline SimplicialComplex filled_triangle() { return build_complex({{0, 1, 2}}, 2); }

inline SimplicialComplex hollow_triangle() { return build_complex({{0, 1}, {0, 2}, {1, 2}}, 1); }

inline SimplicialComplex path2() { return build_complex({{0, 1}, {1, 2}}, 1); }

inline SimplicialComplex tetrahedron_boundary() { return build_complex({{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}, 2); }

inline SimplicialComplex two_triangles() { return build_complex({{0, 1, 2}, {3, 4, 5}}, 2); }

/// N uniform points on the unit square and their VR complex.
inline SimplicialComplex random_vr(Rng& rng, std::size_t n, double eps, int max_order = 2)
{
    return build_vietoris_rips(sample_unit_cube(n, 2, rng), eps, max_order);
}

/// A VR complex with at least one edge and one triangle.
inline SimplicialComplex random_instance(Rng& rng, std::size_t n_lo = 8, std::size_t n_hi = 16)
{
    while (true) {
        const auto n = n_lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_hi - n_lo + 1));
        SimplicialComplex c = random_vr(rng, n, rng.uniform(0.35, 0.6));
        if (c.dimension() >= 2 && c.count(2) > 0) return c;
    }
}

inline WeightAssignment random_weights(const SimplicialComplex& c, Rng& rng, double lo = 0.2, double hi = 5.0)
{
    WeightAssignment w = WeightAssignment::uniform(c);
    for (int k = 0; k <= c.dimension(); ++k) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(c.count(k)));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(lo, hi);
        w.set_order(k, v);
    }
    return w;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng)
{
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

/// Sign of the permutation taking `from` to `to` by counting inversions of
/// positions; independent of the face-deletion sign rule.
inline int relative_parity(const std::vector<Vertex>& face_in_order, const std::vector<Vertex>& sorted)
{
    std::vector<std::size_t> perm;
    for (Vertex v : face_in_order)
        perm.push_back(static_cast<std::size_t>(std::find(sorted.begin(), sorted.end(), v) - sorted.begin()));
    int inversions = 0;
    for (std::size_t i = 0; i < perm.size(); ++i)
        for (std::size_t j = i + 1; j < perm.size(); ++j)
            if (perm[i] > perm[j]) ++inversions;
    return inversions % 2 == 0 ? 1 : -1;
}

/// Boundary matrix from the orientation definition: the face opposite vertex v
/// of [v, rest...] inherits sign +1 on the ordering (rest...) when v is moved
/// to the front by an even permutation.
inline Eigen::MatrixXi boundary_oracle(const SimplicialComplex& c, int k)
{
    Eigen::MatrixXi b = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(c.count(k - 1)),
                                              static_cast<Eigen::Index>(c.count(k)));
    for (std::size_t j = 0; j < c.count(k); ++j) {
        const auto& verts = c.simplex(k, j).vertices();
        for (Vertex v : verts) {
            std::vector<Vertex> ordering{v};
            std::vector<Vertex> rest;
            for (Vertex x : verts)
                if (x != v) rest.push_back(x);
            ordering.insert(ordering.end(), rest.begin(), rest.end());
            // [v, rest] has parity p relative to the ascending order; its boundary
            // contributes +[rest], so the face carries sign p.
            const int p = relative_parity(ordering, verts);
            const auto row = c.index_of(Simplex(rest));
            b(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(j)) = p;
        }
    }
    return b;
}

/// All cliques of the epsilon graph up to max_order + 1 vertices by scanning
/// every vertex subset (feasible for N <= 12).
inline std::vector<std::vector<Simplex>> brute_force_vr(const PointCloud& cloud, double eps, int max_order)
{
    const std::size_t n = cloud.size();
    std::vector<std::vector<Simplex>> out(static_cast<std::size_t>(max_order) + 1);
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<Vertex> verts;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) verts.push_back(static_cast<Vertex>(i));
        if (verts.size() > static_cast<std::size_t>(max_order) + 1) continue;
        bool clique = true;
        for (std::size_t a = 0; a < verts.size() && clique; ++a)
            for (std::size_t b = a + 1; b < verts.size() && clique; ++b)
                clique = cloud.distance(verts[a], verts[b]) <= eps;
        if (clique) out[verts.size() - 1].push_back(Simplex(verts));
    }
    for (auto& level : out) std::sort(level.begin(), level.end());
    return out;
}

/// Fixed-step classical Runge-Kutta for x' = -L x.
inline Eigen::VectorXd rk4(const Eigen::MatrixXd& l, Eigen::VectorXd x, double t, int steps)
{
    const double h = t / steps;
    for (int i = 0; i < steps; ++i) {
        const Eigen::VectorXd k1 = -l * x;
        const Eigen::VectorXd k2 = -l * (x + 0.5 * h * k1);
        const Eigen::VectorXd k3 = -l * (x + 0.5 * h * k2);
        const Eigen::VectorXd k4 = -l * (x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

/// Orthonormal basis of the column space of `a` via complete orthogonal decomposition.
inline Eigen::MatrixXd range_basis(const Eigen::MatrixXd& a, double tol = 1e-10)
{
    if (a.cols() == 0 || a.rows() == 0) return Eigen::MatrixXd(a.rows(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
    const double smax = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    const Eigen::Index r = (svd.singularValues().array() > tol * std::max(1.0, smax)).count();
    return svd.matrixU().leftCols(r);
}

inline Eigen::Index numerical_rank(const Eigen::MatrixXd& a) { return range_basis(a).cols(); }

/// Largest principal-angle sine between two subspaces with orthonormal bases.
inline double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    if (a.cols() != b.cols()) return 1.0;
    if (a.cols() == 0) return 0.0;
    return (a - b * (b.transpose() * a)).norm();
}

inline double sorted_max_diff(Eigen::VectorXd a, Eigen::VectorXd b)
{
    if (a.size() != b.size()) return INFINITY;
    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

/// Silences the warning sink for the lifetime of the object, recording messages.
struct CaptureWarnings {
    std::vector<std::string> messages;
    WarningHandler previous;
    CaptureWarnings()
    {
        previous = set_warning_handler([this](const std::string& m) { messages.push_back(m); });
    }
    ~CaptureWarnings() { set_warning_handler(previous); }
};

} // namespace testing_support
