/**
 * Weight design for Hodge Laplacians through semidefinite programming.
 *
 * The order-k weights are fixed to one, so L_k is symmetric and affine in
 *
 *   u       = reciprocals of the order k-1 weights,
 *   w_{k+1} = the order k+1 weights,
 *
 * L_k(u, w) = B_k^T diag(u) B_k + B_{k+1} diag(w) B_{k+1}^T. Each optimized
 * block is normalized to sum to one and kept non-negative; a block that is
 * not optimized stays at unity.
 *
 * With K an orthonormal basis of ker L_k, the pseudoinverse trace satisfies
 * tr L^+ = tr (L + K K^T)^{-1} - m, and the smallest non-zero eigenvalue is
 * the largest g with L + b K K^T - g I >= 0 for some b.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hodgeopt/boundary.hpp"
#include "hodgeopt/laplacian.hpp"
#include "hodgeopt/sdp.hpp"

namespace hodgeopt {

enum class WeightObjective { trace_pinv, lambda_min };

inline const char* to_string(WeightObjective o)
{
    return o == WeightObjective::trace_pinv ? "trace" : "lambda";
}

struct OptimizeFlags {
    bool lower = false;
    bool upper = true;
};

/// Problem data shared by both programs.
struct WeightDesign {
    int order = 0;
    OptimizeFlags flags;
    Eigen::MatrixXd lower_boundary; ///< B_k
    Eigen::MatrixXd upper_boundary; ///< B_{k+1}
    Eigen::MatrixXd kernel;         ///< orthonormal basis of ker L_k at w_k = 1

    Eigen::Index size() const { return lower_boundary.cols(); }
    Eigen::Index lower_count() const { return lower_boundary.rows(); }
    Eigen::Index upper_count() const { return upper_boundary.cols(); }
    Eigen::Index betti() const { return kernel.cols(); }

    /// The uniform feasible point of a block: 1/D when optimized, unity otherwise.
    Eigen::VectorXd uniform_lower() const
    {
        const double v = flags.lower ? 1.0 / static_cast<double>(lower_count()) : 1.0;
        return Eigen::VectorXd::Constant(lower_count(), v);
    }
    Eigen::VectorXd uniform_upper() const
    {
        const double v = flags.upper ? 1.0 / static_cast<double>(upper_count()) : 1.0;
        return Eigen::VectorXd::Constant(upper_count(), v);
    }

    /// L_k(u, w).
    Eigen::MatrixXd laplacian(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const
    {
        Eigen::MatrixXd l = Eigen::MatrixXd::Zero(size(), size());
        if (lower_count() > 0) l.noalias() += lower_boundary.transpose() * u.asDiagonal() * lower_boundary;
        if (upper_count() > 0) l.noalias() += upper_boundary * w.asDiagonal() * upper_boundary.transpose();
        return 0.5 * (l + l.transpose());
    }
};

inline WeightDesign make_weight_design(const SimplicialComplex& complex, int k, OptimizeFlags flags)
{
    if (k < 0 || k > complex.dimension())
        throw ValidationError("order " + std::to_string(k) + " outside [0, " + std::to_string(complex.dimension()) +
                              "]");
    if (!flags.lower && !flags.upper) throw ValidationError("nothing to optimize: select lower and/or upper weights");
    if (flags.lower && k == 0) throw ValidationError("order 0 has no lower weights");
    if (flags.upper && k == complex.dimension() && complex.count(k + 1) == 0)
        throw ValidationError("no upper weights to optimize");

    WeightDesign d;
    d.order = k;
    d.flags = flags;
    d.lower_boundary = boundary_dense(complex, k);
    d.upper_boundary = boundary_dense(complex, k + 1);
    if (complex.count(k) == 0) throw ValidationError("order " + std::to_string(k) + " has no simplices");
    if (flags.lower && d.lower_count() == 0) throw ValidationError("no lower weights to optimize");
    if (flags.upper && d.upper_count() == 0) throw ValidationError("no upper weights to optimize");
    d.kernel = kernel_basis(complex, k).basis;
    return d;
}

namespace detail {

struct DecisionLayout {
    Eigen::Index lower_offset = -1, upper_offset = -1, gamma = -1, beta = -1, total = 0;
};

inline DecisionLayout weight_layout(const WeightDesign& d, std::vector<VariableBlock>& blocks)
{
    DecisionLayout l;
    if (d.flags.lower) {
        l.lower_offset = l.total;
        blocks.push_back({"u", l.total, d.lower_count()});
        l.total += d.lower_count();
    }
    if (d.flags.upper) {
        l.upper_offset = l.total;
        blocks.push_back({"w_upper", l.total, d.upper_count()});
        l.total += d.upper_count();
    }
    return l;
}

/// Adds the rank-one weight terms of L_k(u, w) to `block`, padded to `rows`.
inline void add_weight_terms(const WeightDesign& d, const DecisionLayout& l, Eigen::Index rows, LmiBlock& block)
{
    const Eigen::Index n = d.size();
    if (d.flags.lower)
        for (Eigen::Index i = 0; i < d.lower_count(); ++i) {
            Eigen::VectorXd f = Eigen::VectorXd::Zero(rows);
            f.head(n) = d.lower_boundary.row(i).transpose();
            block.terms.push_back({l.lower_offset + i, SymmetricTerm::rank_one(std::move(f))});
        }
    if (d.flags.upper)
        for (Eigen::Index j = 0; j < d.upper_count(); ++j) {
            Eigen::VectorXd f = Eigen::VectorXd::Zero(rows);
            f.head(n) = d.upper_boundary.col(j);
            block.terms.push_back({l.upper_offset + j, SymmetricTerm::rank_one(std::move(f))});
        }
}

/// Fixed part of L_k: blocks that are not optimized sit at unity.
inline Eigen::MatrixXd fixed_laplacian(const WeightDesign& d)
{
    const Eigen::VectorXd u = d.flags.lower ? Eigen::VectorXd::Zero(d.lower_count()) : d.uniform_lower();
    const Eigen::VectorXd w = d.flags.upper ? Eigen::VectorXd::Zero(d.upper_count()) : d.uniform_upper();
    return d.laplacian(u, w);
}

/// Simplex normalization and non-negativity for the weight blocks.
inline void add_weight_constraints(const WeightDesign& d, const DecisionLayout& l, SdpProblem& p,
                                   Eigen::Index extra_ineq)
{
    const Eigen::Index nw = (d.flags.lower ? d.lower_count() : 0) + (d.flags.upper ? d.upper_count() : 0);
    const Eigen::Index neq = (d.flags.lower ? 1 : 0) + (d.flags.upper ? 1 : 0);
    p.eq_matrix = Eigen::MatrixXd::Zero(neq, l.total);
    p.eq_rhs = Eigen::VectorXd::Ones(neq);
    Eigen::Index row = 0;
    if (d.flags.lower) p.eq_matrix.row(row++).segment(l.lower_offset, d.lower_count()).setOnes();
    if (d.flags.upper) p.eq_matrix.row(row++).segment(l.upper_offset, d.upper_count()).setOnes();

    p.ineq_matrix = Eigen::MatrixXd::Zero(nw + extra_ineq, l.total);
    p.ineq_offset = Eigen::VectorXd::Zero(nw + extra_ineq);
    Eigen::Index r = 0;
    if (d.flags.lower)
        for (Eigen::Index i = 0; i < d.lower_count(); ++i) p.ineq_matrix(r++, l.lower_offset + i) = 1.0;
    if (d.flags.upper)
        for (Eigen::Index j = 0; j < d.upper_count(); ++j) p.ineq_matrix(r++, l.upper_offset + j) = 1.0;
}

inline Eigen::VectorXd uniform_decision(const WeightDesign& d, const DecisionLayout& l)
{
    Eigen::VectorXd y = Eigen::VectorXd::Zero(l.total);
    if (d.flags.lower) y.segment(l.lower_offset, d.lower_count()) = d.uniform_lower();
    if (d.flags.upper) y.segment(l.upper_offset, d.upper_count()) = d.uniform_upper();
    return y;
}

} // namespace detail

/// minimize tr Y  s.t.  [[L_k(u, w) + K K^T, I], [I, Y]] >= 0.
inline SdpProblem build_trace_sdp(const WeightDesign& d)
{
    SdpProblem p;
    const detail::DecisionLayout l = detail::weight_layout(d, p.layout);
    const Eigen::Index n = d.size();
    p.objective = Eigen::VectorXd::Zero(l.total);

    LmiBlock block;
    block.name = "schur";
    block.constant = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    block.constant.topLeftCorner(n, n) = detail::fixed_laplacian(d) + d.kernel * d.kernel.transpose();
    block.constant.topRightCorner(n, n).setIdentity();
    block.constant.bottomLeftCorner(n, n).setIdentity();
    detail::add_weight_terms(d, l, 2 * n, block);
    p.lmis.push_back(std::move(block));

    MatrixSlack y;
    y.name = "Y";
    y.block = 0;
    y.offset = n;
    y.size = n;
    y.objective = Eigen::MatrixXd::Identity(n, n);
    p.slacks.push_back(std::move(y));

    detail::add_weight_constraints(d, l, p, 0);

    // Strictly feasible start: uniform weights and Y = A^{-1} + I.
    const Eigen::VectorXd y0 = detail::uniform_decision(d, l);
    const Eigen::MatrixXd a = d.laplacian(d.uniform_lower(), d.uniform_upper()) + d.kernel * d.kernel.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
        p.initial_scalars = y0;
        p.initial_slacks.push_back(llt.solve(Eigen::MatrixXd::Identity(n, n)) + Eigen::MatrixXd::Identity(n, n));
    }
    return p;
}

inline SdpProblem build_trace_sdp(const SimplicialComplex& complex, int k, bool optimize_lower, bool optimize_upper)
{
    return build_trace_sdp(make_weight_design(complex, k, {optimize_lower, optimize_upper}));
}

/// maximize g  s.t.  L_k(u, w) + b K K^T - g I >= 0.
///
/// b is capped at tr L_k(1, 1) plus the largest squared column norm plus one.
/// Every feasible g is at most tr L_k(u, w), which stays below the cap, and
/// b = g is always feasible, so the cap leaves the optimum unchanged; it only
/// gives the dual problem a strictly feasible point. b is dropped when
/// ker L_k = 0.
inline SdpProblem build_lambda_sdp(const WeightDesign& d)
{
    SdpProblem p;
    detail::DecisionLayout l = detail::weight_layout(d, p.layout);
    const Eigen::Index n = d.size();
    const Eigen::Index m = d.betti();
    l.gamma = l.total++;
    p.layout.push_back({"gamma", l.gamma, 1});
    if (m > 0) {
        l.beta = l.total++;
        p.layout.push_back({"beta", l.beta, 1});
    }
    p.sense = ObjectiveSense::maximize;
    p.objective = Eigen::VectorXd::Zero(l.total);
    p.objective[l.gamma] = 1.0;

    LmiBlock block;
    block.name = "shifted";
    block.constant = detail::fixed_laplacian(d);
    detail::add_weight_terms(d, l, n, block);
    SymmetricTerm minus_identity;
    minus_identity.factor = Eigen::MatrixXd::Identity(n, n);
    minus_identity.scale = Eigen::VectorXd::Constant(n, -1.0);
    block.terms.push_back({l.gamma, std::move(minus_identity)});
    if (m > 0) {
        SymmetricTerm shift;
        shift.factor = d.kernel;
        shift.scale = Eigen::VectorXd::Ones(m);
        block.terms.push_back({l.beta, std::move(shift)});
    }
    p.lmis.push_back(std::move(block));

    detail::add_weight_constraints(d, l, p, m > 0 ? 1 : 0);
    const Eigen::MatrixXd unity = d.laplacian(Eigen::VectorXd::Ones(d.lower_count()), Eigen::VectorXd::Ones(d.upper_count()));
    double col_norm = 0.0;
    if (d.lower_count() > 0) col_norm = std::max(col_norm, d.lower_boundary.rowwise().squaredNorm().maxCoeff());
    if (d.upper_count() > 0) col_norm = std::max(col_norm, d.upper_boundary.colwise().squaredNorm().maxCoeff());
    const double cap = unity.trace() + col_norm + 1.0;
    if (m > 0) {
        const Eigen::Index r = p.ineq_matrix.rows() - 1;
        p.ineq_matrix(r, l.beta) = -1.0;
        p.ineq_offset[r] = cap;
    }

    // Strictly feasible start at uniform weights.
    Eigen::VectorXd y0 = detail::uniform_decision(d, l);
    const SpectralData s = symmetric_spectrum(d.laplacian(d.uniform_lower(), d.uniform_upper()));
    const double lam = s.kernel_dim < s.eigenvalues.size() ? s.eigenvalues[s.kernel_dim] : 0.0;
    y0[l.gamma] = 0.5 * lam;
    if (m > 0) y0[l.beta] = 0.5 * cap;
    p.initial_scalars = y0;
    return p;
}

inline SdpProblem build_lambda_sdp(const SimplicialComplex& complex, int k, bool optimize_lower, bool optimize_upper)
{
    return build_lambda_sdp(make_weight_design(complex, k, {optimize_lower, optimize_upper}));
}

/// Spectral objective of L_k(u, w) evaluated directly.
inline double evaluate_objective(const WeightDesign& d, WeightObjective objective, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& w)
{
    const SpectralData s = symmetric_spectrum(d.laplacian(u, w));
    return objective == WeightObjective::trace_pinv ? trace_pseudoinverse(s) : lambda_min_nonzero(s);
}

struct WeightOptimizationResult {
    int order = 0;
    WeightObjective objective = WeightObjective::trace_pinv;
    OptimizeFlags flags;
    Eigen::VectorXd lower_decision; ///< u, reciprocals of w_{k-1}; empty unless optimized
    Eigen::VectorXd lower_weights;  ///< w_{k-1}
    Eigen::VectorXd upper_weights;  ///< w_{k+1}
    double sdp_objective = 0.0;     ///< tr Y - m, or gamma
    double direct_objective = 0.0;  ///< recomputed from the assembled Laplacian
    double uniform_objective = 0.0;
    double improvement_percent = 0.0;
    double relative_disagreement = 0.0;
    bool accurate = false; ///< SDP and direct values agree within the tolerance
    std::size_t clamped = 0;
    SdpSolution certificate;

    bool optimal() const { return certificate.optimal() && accurate; }

    WeightAssignment weights(const SimplicialComplex& complex) const
    {
        WeightAssignment w = WeightAssignment::uniform(complex);
        if (order >= 1) w.set_order(order - 1, lower_weights);
        if (order + 1 <= complex.dimension()) w.set_order(order + 1, upper_weights);
        return w;
    }
};

struct WeightOptimizerOptions {
    SdpOptions sdp;
    double agreement_tol = 1e-5;
};

namespace detail {

/// Raises entries below kWeightFloor to the floor and rescales the others so
/// the vector sums to one.
inline Eigen::VectorXd floor_and_normalize(Eigen::VectorXd v, std::size_t& clamped)
{
    double free_sum = 0.0;
    std::size_t floored = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v[i] >= kWeightFloor)) {
            v[i] = kWeightFloor;
            ++floored;
        } else {
            free_sum += v[i];
        }
    }
    clamped += floored;
    const double target = 1.0 - kWeightFloor * static_cast<double>(floored);
    if (free_sum > 0.0 && target > 0.0)
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (v[i] > kWeightFloor) v[i] *= target / free_sum;
    return v;
}

} // namespace detail

inline WeightOptimizationResult optimize_weights(const WeightDesign& d, WeightObjective objective,
                                                 const WeightOptimizerOptions& options = {})
{
    const SdpProblem problem = objective == WeightObjective::trace_pinv ? build_trace_sdp(d) : build_lambda_sdp(d);
    WeightOptimizationResult r;
    r.order = d.order;
    r.objective = objective;
    r.flags = d.flags;
    // The solver's gap is relative to max(1, |objective|); for objectives far
    // below one it is tightened so the agreement check remains meaningful.
    SdpOptions sdp = options.sdp;
    const double scale = std::abs(evaluate_objective(d, objective, d.uniform_lower(), d.uniform_upper()));
    if (scale < 1.0) sdp.gap_tol = std::min(sdp.gap_tol, 0.1 * options.agreement_tol * scale);
    r.certificate = solve_sdp(problem, sdp);

    Eigen::VectorXd u = d.uniform_lower();
    Eigen::VectorXd w = d.uniform_upper();
    if (d.flags.lower) {
        u = detail::floor_and_normalize(r.certificate.block(problem, "u"), r.clamped);
        r.lower_decision = u;
    }
    if (d.flags.upper) w = detail::floor_and_normalize(r.certificate.block(problem, "w_upper"), r.clamped);
    if (r.clamped > 0) warn(std::to_string(r.clamped) + " optimized weight(s) raised to floor");
    r.lower_weights = u.cwiseInverse();
    r.upper_weights = w;

    r.sdp_objective = objective == WeightObjective::trace_pinv
                          ? r.certificate.primal_objective - static_cast<double>(d.betti())
                          : r.certificate.primal_objective;
    r.direct_objective = evaluate_objective(d, objective, u, w);
    r.uniform_objective = evaluate_objective(d, objective, d.uniform_lower(), d.uniform_upper());
    r.improvement_percent = objective == WeightObjective::trace_pinv
                                ? 100.0 * (r.uniform_objective - r.direct_objective) / r.uniform_objective
                                : 100.0 * (r.direct_objective - r.uniform_objective) / r.uniform_objective;
    r.relative_disagreement =
        std::abs(r.sdp_objective - r.direct_objective) / std::max(std::abs(r.direct_objective), 1e-300);
    r.accurate = r.relative_disagreement <= options.agreement_tol;
    if (!r.accurate)
        warn("solver accuracy: SDP objective " + std::to_string(r.sdp_objective) + " vs direct " +
             std::to_string(r.direct_objective));
    return r;
}

inline WeightOptimizationResult optimize_weights(const SimplicialComplex& complex, int k, WeightObjective objective,
                                                 OptimizeFlags flags, const WeightOptimizerOptions& options = {})
{
    return optimize_weights(make_weight_design(complex, k, flags), objective, options);
}

} // namespace hodgeopt
