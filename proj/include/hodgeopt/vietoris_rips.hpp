/**
 * Vietoris-Rips complexes of point clouds.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hodgeopt/complex.hpp"
#include "hodgeopt/random.hpp"

namespace hodgeopt {

using DistanceFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

inline double euclidean_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm(); }

/// One point per row.
class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(Eigen::MatrixXd points, DistanceFn metric = euclidean_distance)
        : points_(std::move(points)), metric_(std::move(metric))
    {
        if (points_.size() > 0 && points_.cols() < 1) throw ValidationError("points must have dimension >= 1");
        if (!points_.allFinite()) throw ValidationError("point coordinates must be finite");
    }

    std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
    Eigen::Index dim() const { return points_.cols(); }
    const Eigen::MatrixXd& points() const { return points_; }
    Eigen::VectorXd point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)).transpose(); }

    double distance(std::size_t i, std::size_t j) const { return metric_(point(i), point(j)); }

private:
    Eigen::MatrixXd points_;
    DistanceFn metric_ = euclidean_distance;
};

/// n points drawn uniformly from [0,1]^dim, row by row, coordinate by coordinate.
inline PointCloud sample_unit_cube(std::size_t n, Eigen::Index dim, Rng& rng)
{
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), dim);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        for (Eigen::Index j = 0; j < dim; ++j) pts(i, j) = rng.uniform();
    return PointCloud(std::move(pts));
}

namespace detail {

inline void extend_cliques(const std::vector<std::vector<std::size_t>>& upper_neighbors,
                           std::vector<Vertex>& clique, const std::vector<std::size_t>& candidates,
                           std::size_t max_size, std::vector<std::vector<Simplex>>& out)
{
    out[clique.size() - 1].push_back(Simplex(clique));
    if (clique.size() == max_size) return;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const std::size_t v = candidates[c];
        // Keep candidates after v that are also neighbours of v (both lists ascending).
        std::vector<std::size_t> next;
        const auto& nv = upper_neighbors[v];
        std::size_t a = c + 1, b = 0;
        while (a < candidates.size() && b < nv.size()) {
            if (candidates[a] < nv[b]) ++a;
            else if (nv[b] < candidates[a]) ++b;
            else {
                next.push_back(candidates[a]);
                ++a;
                ++b;
            }
        }
        clique.push_back(static_cast<Vertex>(v));
        extend_cliques(upper_neighbors, clique, next, max_size, out);
        clique.pop_back();
    }
}

} // namespace detail

/// Edge {i,j} iff d(p_i, p_j) <= epsilon; higher simplices are the cliques of
/// that graph with at most max_order + 1 vertices.
inline SimplicialComplex build_vietoris_rips(const PointCloud& cloud, double epsilon, int max_order)
{
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    if (max_order < 1) throw ValidationError("max_order must be >= 1");
    const std::size_t n = cloud.size();
    if (n == 0) return SimplicialComplex();
    if (static_cast<std::size_t>(max_order) > n - 1) {
        warn("max_order " + std::to_string(max_order) + " exceeds N-1 = " + std::to_string(n - 1) + "; clamping");
        max_order = static_cast<int>(n - 1);
    }

    std::vector<std::vector<std::size_t>> upper(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (cloud.distance(i, j) <= epsilon) upper[i].push_back(j);

    std::vector<std::vector<Simplex>> by_order(static_cast<std::size_t>(max_order) + 1);
    std::vector<Vertex> clique;
    for (std::size_t v = 0; v < n; ++v) {
        clique.assign(1, static_cast<Vertex>(v));
        detail::extend_cliques(upper, clique, upper[v], static_cast<std::size_t>(max_order) + 1, by_order);
    }
    for (auto& level : by_order) std::sort(level.begin(), level.end());
    return SimplicialComplex(std::move(by_order));
}

} // namespace hodgeopt
