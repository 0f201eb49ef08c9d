/**
 * Weighted Hodge Laplacians, their symmetric similarity transforms, spectra,
 * kernel bases and the two spectral functions used for weight design.
 *
 * With W_j = diag(w_j) the order-k operators are
 *
 *   down  L^d_k = B_k^T W_{k-1}^{-1} B_k W_k
 *   up    L^u_k = W_k^{-1} B_{k+1} W_{k+1} B_{k+1}^T
 *   full  L_k   = L^d_k + L^u_k
 *
 * and W_k^{1/2} L_k W_k^{-1/2} is symmetric positive semidefinite. Every
 * eigensolve runs on that symmetric form.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hodgeopt/boundary.hpp"
#include "hodgeopt/weights.hpp"

namespace hodgeopt {

/// Eigenvalues below zero_threshold(lambda_max) count as kernel.
inline double zero_threshold(double lambda_max) { return 1e-9 * std::max(1.0, lambda_max); }

/// g^T W f.
inline double weighted_inner_product(const Eigen::VectorXd& f, const Eigen::VectorXd& g, const Eigen::VectorXd& w)
{
    if (f.size() != g.size() || f.size() != w.size())
        throw ValidationError("inner product operands have lengths " + std::to_string(f.size()) + ", " +
                              std::to_string(g.size()) + ", " + std::to_string(w.size()));
    return (w.array() * f.array() * g.array()).sum();
}

inline double weighted_norm(const Eigen::VectorXd& f, const Eigen::VectorXd& w)
{
    return std::sqrt(std::max(0.0, weighted_inner_product(f, f, w)));
}

/// Largest singular value (0 for empty matrices).
inline double spectral_norm(const Eigen::MatrixXd& a)
{
    if (a.size() == 0) return 0.0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues()[0];
}

namespace detail {

/// A A^T with an exactly symmetric result.
inline Eigen::MatrixXd gram_rows(const Eigen::MatrixXd& a)
{
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), a.rows());
    if (a.cols() == 0) return out;
    out.selfadjointView<Eigen::Lower>().rankUpdate(a);
    return out.selfadjointView<Eigen::Lower>();
}

} // namespace detail

class HodgeLaplacian {
public:
    int order() const { return order_; }
    Eigen::Index size() const { return full_.rows(); }

    const Eigen::MatrixXd& down() const { return down_; }
    const Eigen::MatrixXd& up() const { return up_; }
    const Eigen::MatrixXd& full() const { return full_; }

    /// W_k^{1/2} L W_k^{-1/2} for the full, down and up operators.
    const Eigen::MatrixXd& symmetric_form() const { return sym_full_; }
    const Eigen::MatrixXd& symmetric_down() const { return sym_down_; }
    const Eigen::MatrixXd& symmetric_up() const { return sym_up_; }

    const Eigen::VectorXd& lower_weights() const { return w_lower_; }
    const Eigen::VectorXd& weights() const { return w_; }
    const Eigen::VectorXd& upper_weights() const { return w_upper_; }

    /// Unweighted incidence matrices B_k and B_{k+1} (possibly empty).
    const Eigen::MatrixXd& lower_boundary() const { return b_lower_; }
    const Eigen::MatrixXd& upper_boundary() const { return b_upper_; }

    /// Maps a chain into symmetric coordinates (multiplies by W_k^{1/2}) and back.
    Eigen::VectorXd to_symmetric(const Eigen::VectorXd& x) const { return w_.array().sqrt().matrix().cwiseProduct(x); }
    Eigen::VectorXd from_symmetric(const Eigen::VectorXd& x) const { return x.cwiseQuotient(w_.array().sqrt().matrix()); }

    /// Same operator with every term multiplied by c > 0 (upper weights times c, lower weights over c).
    HodgeLaplacian scaled(double c) const;

private:
    friend HodgeLaplacian assemble_laplacian_from(int, const Eigen::MatrixXd&, const Eigen::MatrixXd&,
                                                  const Eigen::VectorXd&, const Eigen::VectorXd&,
                                                  const Eigen::VectorXd&);
    int order_ = 0;
    Eigen::MatrixXd down_, up_, full_;
    Eigen::MatrixXd sym_down_, sym_up_, sym_full_;
    Eigen::VectorXd w_lower_, w_, w_upper_;
    Eigen::MatrixXd b_lower_, b_upper_;
};

/// Assembly from explicit incidence matrices and weight vectors. `b_lower` is
/// D_{k-1} x D_k and `b_upper` is D_k x D_{k+1}; either may have zero rows or
/// columns. Weights must already be validated.
inline HodgeLaplacian assemble_laplacian_from(int k, const Eigen::MatrixXd& b_lower, const Eigen::MatrixXd& b_upper,
                                              const Eigen::VectorXd& w_lower, const Eigen::VectorXd& w,
                                              const Eigen::VectorXd& w_upper)
{
    const Eigen::Index n = w.size();
    if (b_lower.cols() != n || b_upper.rows() != n || b_lower.rows() != w_lower.size() ||
        b_upper.cols() != w_upper.size())
        throw ValidationError("incidence and weight dimensions disagree at order " + std::to_string(k));

    HodgeLaplacian lap;
    lap.order_ = k;
    lap.w_lower_ = w_lower;
    lap.w_ = w;
    lap.w_upper_ = w_upper;
    lap.b_lower_ = b_lower;
    lap.b_upper_ = b_upper;

    const Eigen::ArrayXd sw = w.array().sqrt();
    // G_d = W_{k-1}^{-1/2} B_k W_k^{1/2},  G_u = W_k^{-1/2} B_{k+1} W_{k+1}^{1/2}.
    const Eigen::MatrixXd g_down = w_lower.array().rsqrt().matrix().asDiagonal() * b_lower * sw.matrix().asDiagonal();
    const Eigen::MatrixXd g_up =
        sw.inverse().matrix().asDiagonal() * b_upper * w_upper.array().sqrt().matrix().asDiagonal();
    lap.sym_down_ = detail::gram_rows(g_down.transpose());
    lap.sym_up_ = detail::gram_rows(g_up);
    lap.sym_full_ = lap.sym_down_ + lap.sym_up_;

    lap.down_ = b_lower.transpose() * w_lower.cwiseInverse().asDiagonal() * b_lower * w.asDiagonal();
    lap.up_ = w.cwiseInverse().asDiagonal() * b_upper * w_upper.asDiagonal() * b_upper.transpose();
    lap.full_ = lap.down_ + lap.up_;
    return lap;
}

inline HodgeLaplacian HodgeLaplacian::scaled(double c) const
{
    return assemble_laplacian_from(order_, b_lower_, b_upper_, w_lower_ / c, w_, w_upper_ * c);
}

/// L_k of `complex` under `weights`, for 0 <= k <= dimension.
inline HodgeLaplacian assemble_laplacian(const SimplicialComplex& complex, const WeightAssignment& weights, int k)
{
    if (k < 0 || k > complex.dimension())
        throw ValidationError("Laplacian order " + std::to_string(k) + " outside [0, " +
                              std::to_string(complex.dimension()) + "]");
    const WeightAssignment w = validated_weights(complex, weights);
    return assemble_laplacian_from(k, boundary_dense(complex, k), boundary_dense(complex, k + 1), w.order(k - 1),
                                   w.order(k), w.order(k + 1));
}

/// W_k^{1/2} L_k W_k^{-1/2}.
inline Eigen::MatrixXd symmetrize(const HodgeLaplacian& lap) { return lap.symmetric_form(); }

struct SpectralData {
    Eigen::VectorXd eigenvalues;          ///< ascending
    Eigen::MatrixXd eigenvectors;         ///< eigenvectors of L_k, orthonormal in the W_k inner product
    Eigen::MatrixXd symmetric_eigenvectors; ///< orthonormal eigenvectors of the symmetric form
    Eigen::Index kernel_dim = 0;
    double zero_tol = 0.0;

    /// Eigenvalues above the zero threshold, ascending.
    Eigen::VectorXd nonzero() const { return eigenvalues.tail(eigenvalues.size() - kernel_dim); }
};

/// Symmetric eigendecomposition with eigenvalues below the zero threshold
/// counted as kernel.
inline SpectralData symmetric_spectrum(const Eigen::MatrixXd& sym)
{
    SpectralData out;
    if (sym.rows() == 0) return out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success)
        throw NumericalError("symmetric eigensolver did not converge on a " + std::to_string(sym.rows()) + "x" +
                             std::to_string(sym.cols()) + " matrix");
    out.eigenvalues = es.eigenvalues();
    out.symmetric_eigenvectors = es.eigenvectors();
    out.zero_tol = zero_threshold(out.eigenvalues.maxCoeff());
    out.kernel_dim = (out.eigenvalues.array() < out.zero_tol).count();
    out.eigenvectors = out.symmetric_eigenvectors;
    return out;
}

inline SpectralData spectrum(const HodgeLaplacian& lap)
{
    SpectralData out = symmetric_spectrum(lap.symmetric_form());
    if (lap.size() > 0)
        out.eigenvectors = lap.weights().array().rsqrt().matrix().asDiagonal() * out.symmetric_eigenvectors;
    return out;
}

struct KernelBasis {
    int order = 0;
    Eigen::MatrixXd basis; ///< orthonormal columns
    Eigen::Index betti() const { return basis.cols(); }
};

namespace detail {

/// Flips each column so that its first largest-magnitude entry is positive.
inline void canonical_signs(Eigen::MatrixXd& m)
{
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index arg = 0;
        m.col(j).cwiseAbs().maxCoeff(&arg);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (std::abs(m(i, j)) >= std::abs(m(arg, j)) * (1.0 - 1e-9)) {
                arg = i;
                break;
            }
        if (m(arg, j) < 0.0) m.col(j) *= -1.0;
    }
}

} // namespace detail

/// Orthonormal basis of ker(B_k) ∩ ker(B_{k+1}^T), i.e. of the kernel of the
/// unweighted L_k = B_k^T B_k + B_{k+1} B_{k+1}^T.
inline KernelBasis kernel_basis(const SimplicialComplex& complex, int k)
{
    if (k < 0 || k > complex.dimension())
        throw ValidationError("kernel order " + std::to_string(k) + " outside [0, " +
                              std::to_string(complex.dimension()) + "]");
    const Eigen::MatrixXd lower = boundary_dense(complex, k);
    const Eigen::MatrixXd upper = boundary_dense(complex, k + 1);
    const Eigen::MatrixXd l = lower.transpose() * lower + upper * upper.transpose();

    KernelBasis out;
    out.order = k;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(l);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of L_" + std::to_string(k) + " failed");
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double tol = zero_threshold(ev.size() > 0 ? ev.maxCoeff() : 0.0);
    const Eigen::Index m = (ev.array() <= tol).count();
    out.basis = eig.eigenvectors().leftCols(m);
    detail::canonical_signs(out.basis);
    return out;
}

/// Orthonormal basis of the kernel of the symmetric form of `lap`.
inline KernelBasis kernel_basis(const HodgeLaplacian& lap)
{
    const SpectralData s = spectrum(lap);
    KernelBasis out;
    out.order = lap.order();
    out.basis = s.symmetric_eigenvectors.leftCols(s.kernel_dim);
    detail::canonical_signs(out.basis);
    return out;
}

/// tr L_k^+ = sum of 1/lambda over the non-zero eigenvalues.
inline double trace_pseudoinverse(const SpectralData& s) { return s.nonzero().cwiseInverse().sum(); }
inline double trace_pseudoinverse(const HodgeLaplacian& lap) { return trace_pseudoinverse(spectrum(lap)); }

/// tr((L~ + K K^T)^{-1}) - m for an orthonormal kernel basis K of the symmetric form.
inline double trace_pseudoinverse_shifted(const HodgeLaplacian& lap, const Eigen::MatrixXd& kernel)
{
    const Eigen::MatrixXd shifted = lap.symmetric_form() + kernel * kernel.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) throw NumericalError("L + K K^T is not positive definite");
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(shifted.rows(), shifted.cols()));
    return inv.trace() - static_cast<double>(kernel.cols());
}

inline double lambda_min_nonzero(const SpectralData& s)
{
    if (s.kernel_dim == s.eigenvalues.size())
        throw DegenerateInstance("Laplacian has no non-zero eigenvalue");
    return s.eigenvalues[s.kernel_dim];
}

inline double lambda_min_nonzero(const HodgeLaplacian& lap) { return lambda_min_nonzero(spectrum(lap)); }

} // namespace hodgeopt
