/**
 * Weighted Hodge decomposition of k-chains:
 *
 *   s = B_k^T a  +  h  +  W_k^{-1} B_{k+1} W_{k+1} b,     h in ker L_k,
 *
 * with the three parts mutually orthogonal in the W_k inner product.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "hodgeopt/laplacian.hpp"

namespace hodgeopt {

struct ChainSignal {
    int order = 0;
    Eigen::VectorXd values;
};

struct HodgeComponents {
    int order = 0;
    Eigen::VectorXd gradient;        ///< B_k^T a
    Eigen::VectorXd harmonic;        ///< in ker L_k
    Eigen::VectorXd curl;            ///< W_k^{-1} B_{k+1} W_{k+1} b
    Eigen::VectorXd lower_potential; ///< a, empty when k = 0
    Eigen::VectorXd upper_potential; ///< b, empty when k = dimension
};

enum class DecompositionRoute {
    normal_equations, ///< minimum-norm solutions of L^u_{k-1} a = W_{k-1}^{-1} B_k W_k s and L^d_{k+1} b = B_{k+1}^T s
    least_squares,    ///< minimum-norm minimisers of the W_k-norm residuals
};

/// Factorises the two potential problems of one (complex, weights, order)
/// once and decomposes any number of signals against them.
class HodgeDecomposer {
public:
    HodgeDecomposer(const SimplicialComplex& complex, const WeightAssignment& weights, int k,
                    DecompositionRoute route = DecompositionRoute::normal_equations)
        : order_(k), route_(route)
    {
        if (k < 0 || k > complex.dimension())
            throw ValidationError("signal order " + std::to_string(k) + " outside [0, " +
                                  std::to_string(complex.dimension()) + "]");
        const WeightAssignment w = validated_weights(complex, weights);
        wk_ = w.order(k);
        sqrt_wk_ = wk_.array().sqrt();

        if (k >= 1) {
            lower_b_ = boundary_dense(complex, k);
            wl_inv_ = w.order(k - 1).cwiseInverse();
            if (route == DecompositionRoute::normal_equations)
                lower_ = factor(wl_inv_.asDiagonal() * lower_b_ * wk_.asDiagonal() * lower_b_.transpose());
            else
                lower_ = factor(sqrt_wk_.matrix().asDiagonal() * lower_b_.transpose());
        }
        if (k < complex.dimension()) {
            upper_b_ = boundary_dense(complex, k + 1);
            const Eigen::VectorXd& wu = w.order(k + 1);
            coboundary_ = wk_.cwiseInverse().asDiagonal() * upper_b_ * wu.asDiagonal();
            if (route == DecompositionRoute::normal_equations)
                upper_ = factor(upper_b_.transpose() * wk_.cwiseInverse().asDiagonal() * upper_b_ * wu.asDiagonal());
            else
                upper_ = factor(sqrt_wk_.matrix().asDiagonal() * coboundary_);
        }
    }

    int order() const { return order_; }
    Eigen::Index size() const { return wk_.size(); }

    HodgeComponents operator()(const Eigen::VectorXd& s) const
    {
        if (s.size() != wk_.size())
            throw ValidationError("signal of order " + std::to_string(order_) + " has length " +
                                  std::to_string(s.size()) + ", expected " + std::to_string(wk_.size()));
        if (!s.allFinite()) throw ValidationError("signal has non-finite entries");

        HodgeComponents out;
        out.order = order_;
        out.gradient = Eigen::VectorXd::Zero(s.size());
        out.curl = Eigen::VectorXd::Zero(s.size());
        const Eigen::VectorXd weighted = (sqrt_wk_ * s.array()).matrix();

        if (lower_) {
            const Eigen::VectorXd rhs = route_ == DecompositionRoute::normal_equations
                                            ? Eigen::VectorXd(wl_inv_.asDiagonal() * (lower_b_ * wk_.asDiagonal() * s))
                                            : weighted;
            out.lower_potential = solve(*lower_, rhs);
            out.gradient = lower_b_.transpose() * out.lower_potential;
        }
        if (upper_) {
            const Eigen::VectorXd rhs = route_ == DecompositionRoute::normal_equations
                                            ? Eigen::VectorXd(upper_b_.transpose() * s)
                                            : weighted;
            out.upper_potential = solve(*upper_, rhs);
            out.curl = coboundary_ * out.upper_potential;
        }
        out.harmonic = s - out.gradient - out.curl;
        return out;
    }

private:
    using Factor = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>;

    static std::optional<Factor> factor(const Eigen::MatrixXd& a)
    {
        if (a.rows() == 0 || a.cols() == 0) return std::nullopt;
        Factor f;
        f.setThreshold(1e-10);
        f.compute(a);
        return f;
    }

    // Minimum-norm least-squares solution.
    static Eigen::VectorXd solve(const Factor& f, const Eigen::VectorXd& rhs) { return f.solve(rhs); }

    int order_;
    DecompositionRoute route_;
    Eigen::VectorXd wk_;
    Eigen::ArrayXd sqrt_wk_;
    Eigen::VectorXd wl_inv_;
    Eigen::MatrixXd lower_b_, upper_b_, coboundary_;
    std::optional<Factor> lower_, upper_;
};

inline HodgeComponents hodge_decompose(const SimplicialComplex& complex, const WeightAssignment& weights,
                                       const ChainSignal& signal,
                                       DecompositionRoute route = DecompositionRoute::normal_equations)
{
    return HodgeDecomposer(complex, weights, signal.order, route)(signal.values);
}

struct DecompositionReport {
    double reconstruction_residual = 0.0;   ///< ||s - (g + h + c)||
    double relative_reconstruction = 0.0;   ///< divided by max(||s||, tiny)
    double harmonic_residual = 0.0;         ///< ||L_k h||
    double relative_harmonic_residual = 0.0; ///< divided by ||L_k||_2 ||s||
    double gradient_harmonic = 0.0;         ///< |(g, h)_{W_k}|
    double gradient_curl = 0.0;             ///< |(g, c)_{W_k}|
    double harmonic_curl = 0.0;             ///< |(h, c)_{W_k}|
    double max_orthogonality = 0.0;                ///< largest pairwise inner product over ||s||_{W_k}^2

    bool within(double tol) const
    {
        return relative_reconstruction <= tol && relative_harmonic_residual <= tol && max_orthogonality <= tol;
    }
};

inline DecompositionReport verify_decomposition(const HodgeComponents& parts, const SimplicialComplex& complex,
                                                const WeightAssignment& weights, const ChainSignal& signal)
{
    const int k = signal.order;
    const WeightAssignment w = validated_weights(complex, weights);
    const Eigen::VectorXd& wk = w.order(k);
    const HodgeLaplacian lap = assemble_laplacian(complex, w, k);

    DecompositionReport r;
    const Eigen::VectorXd recon = parts.gradient + parts.harmonic + parts.curl;
    r.reconstruction_residual = (signal.values - recon).norm();
    r.relative_reconstruction = r.reconstruction_residual / std::max(signal.values.norm(), 1e-300);
    if (signal.values.norm() == 0.0) r.relative_reconstruction = r.reconstruction_residual;

    r.harmonic_residual = (lap.full() * parts.harmonic).norm();
    // The harmonic part can be pure round-off (betti_k = 0), so residuals are
    // measured against the signal rather than against h itself.
    const double scale = spectral_norm(lap.full()) * signal.values.norm();
    r.relative_harmonic_residual = scale > 0.0 ? r.harmonic_residual / scale : r.harmonic_residual;

    r.gradient_harmonic = std::abs(weighted_inner_product(parts.gradient, parts.harmonic, wk));
    r.gradient_curl = std::abs(weighted_inner_product(parts.gradient, parts.curl, wk));
    r.harmonic_curl = std::abs(weighted_inner_product(parts.harmonic, parts.curl, wk));

    const double ns = weighted_inner_product(signal.values, signal.values, wk);
    const double largest = std::max({r.gradient_harmonic, r.gradient_curl, r.harmonic_curl});
    r.max_orthogonality = ns > 0.0 ? largest / ns : largest;
    return r;
}

} // namespace hodgeopt
