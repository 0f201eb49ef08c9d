/**
 * Dense primal-dual interior-point solver for linear matrix inequalities.
 *
 * Problem form (all matrices symmetric):
 *
 *   minimize    c^T y + sum_s <C_s, Y_s>
 *   subject to  F0_b + sum_i y_i F_ib + E_b(Y_s) >= 0     for every LMI block b
 *               G y + h >= 0                              (elementwise)
 *               A y = a
 *
 * y is a vector of scalar decisions. Each Y_s is a free symmetric matrix
 * ("matrix slack") that enters exactly one block as a principal submatrix,
 * E_b(Y) = [0 0; 0 Y] at the slack's offset. Coefficients F_ib are stored in
 * factored form U diag(d) U^T, which keeps rank-one terms cheap.
 *
 * The method is an infeasible-start Mehrotra predictor-corrector with
 * Nesterov-Todd scaling. Matrix slacks are eliminated from the Newton system
 * block by block, so the dense Schur system has the size of y only.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hodgeopt/diagnostics.hpp"

namespace hodgeopt {

/// U diag(d) U^T.
struct SymmetricTerm {
    Eigen::MatrixXd factor;
    Eigen::VectorXd scale;

    static SymmetricTerm rank_one(Eigen::VectorXd u, double d = 1.0)
    {
        SymmetricTerm t;
        t.factor = std::move(u);
        t.scale = Eigen::VectorXd::Constant(1, d);
        return t;
    }

    /// Eigendecomposition of a dense symmetric matrix, dropping negligible modes.
    static SymmetricTerm from_dense(const Eigen::MatrixXd& a)
    {
        SymmetricTerm t;
        if (a.rows() != a.cols()) throw ValidationError("LMI coefficient must be square");
        if (a.size() == 0) {
            t.factor.resize(0, 0);
            return t;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
        const double cut = 1e-14 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            if (std::abs(es.eigenvalues()[i]) > cut) keep.push_back(i);
        t.factor.resize(a.rows(), static_cast<Eigen::Index>(keep.size()));
        t.scale.resize(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) {
            t.factor.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
            t.scale[static_cast<Eigen::Index>(j)] = es.eigenvalues()[keep[j]];
        }
        return t;
    }

    Eigen::Index rows() const { return factor.rows(); }
    Eigen::Index rank() const { return factor.cols(); }

    Eigen::MatrixXd dense() const { return factor * scale.asDiagonal() * factor.transpose(); }
};

struct LmiTerm {
    Eigen::Index variable;
    SymmetricTerm coefficient;
};

struct LmiBlock {
    std::string name;
    Eigen::MatrixXd constant;
    std::vector<LmiTerm> terms;
    Eigen::Index size() const { return constant.rows(); }
};

struct MatrixSlack {
    std::string name;
    std::size_t block = 0;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
    Eigen::MatrixXd objective; ///< C_s; contributes <C_s, Y_s>
};

/// Named contiguous range of the scalar decision vector.
struct VariableBlock {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index length = 0;
};

enum class ObjectiveSense { minimize, maximize };

struct SdpProblem {
    ObjectiveSense sense = ObjectiveSense::minimize;
    Eigen::VectorXd objective; ///< c, in the stated sense
    std::vector<VariableBlock> layout;
    std::vector<LmiBlock> lmis;
    std::vector<MatrixSlack> slacks;
    Eigen::MatrixXd ineq_matrix; ///< G
    Eigen::VectorXd ineq_offset; ///< h
    Eigen::MatrixXd eq_matrix;   ///< A
    Eigen::VectorXd eq_rhs;      ///< a
    std::optional<Eigen::VectorXd> initial_scalars;
    std::vector<Eigen::MatrixXd> initial_slacks;

    Eigen::Index num_scalars() const { return objective.size(); }

    const VariableBlock* find_block(const std::string& name) const
    {
        for (const auto& b : layout)
            if (b.name == name) return &b;
        return nullptr;
    }

    /// Throws ValidationError on inconsistent dimensions or asymmetric data.
    void validate() const
    {
        const Eigen::Index m = num_scalars();
        if (m == 0 && slacks.empty()) throw ValidationError("SDP has no decision variables");
        for (const auto& b : layout)
            if (b.offset < 0 || b.length < 0 || b.offset + b.length > m)
                throw ValidationError("variable block '" + b.name + "' exceeds the decision vector");
        for (const auto& blk : lmis) {
            if (blk.constant.rows() != blk.constant.cols())
                throw ValidationError("LMI block '" + blk.name + "' constant is not square");
            if ((blk.constant - blk.constant.transpose()).cwiseAbs().maxCoeff() >
                1e-12 * std::max(1.0, blk.constant.cwiseAbs().maxCoeff()))
                throw ValidationError("LMI block '" + blk.name + "' constant is not symmetric");
            for (const auto& t : blk.terms) {
                if (t.variable < 0 || t.variable >= m)
                    throw ValidationError("LMI block '" + blk.name + "' references a missing variable");
                if (t.coefficient.rows() != blk.size() || t.coefficient.scale.size() != t.coefficient.rank())
                    throw ValidationError("LMI block '" + blk.name + "' has a coefficient of the wrong size");
            }
        }
        std::vector<int> slack_count(lmis.size(), 0);
        for (const auto& s : slacks) {
            if (s.block >= lmis.size()) throw ValidationError("matrix slack '" + s.name + "' names a missing block");
            if (++slack_count[s.block] > 1)
                throw ValidationError("at most one matrix slack per LMI block is supported");
            if (s.size <= 0 || s.offset < 0 || s.offset + s.size > lmis[s.block].size())
                throw ValidationError("matrix slack '" + s.name + "' does not fit its block");
            if (s.objective.rows() != s.size || s.objective.cols() != s.size)
                throw ValidationError("matrix slack '" + s.name + "' objective has the wrong size");
        }
        if (ineq_matrix.rows() != ineq_offset.size() || (ineq_matrix.rows() > 0 && ineq_matrix.cols() != m))
            throw ValidationError("inequality data has inconsistent dimensions");
        if (eq_matrix.rows() != eq_rhs.size() || (eq_matrix.rows() > 0 && eq_matrix.cols() != m))
            throw ValidationError("equality data has inconsistent dimensions");
        if (initial_scalars && initial_scalars->size() != m)
            throw ValidationError("initial point has the wrong length");
        if (!initial_slacks.empty() && initial_slacks.size() != slacks.size())
            throw ValidationError("initial slack values do not match the slack list");
    }
};

enum class SdpStatus { optimal, max_iterations, stalled, inaccurate };

inline const char* to_string(SdpStatus s)
{
    switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::max_iterations: return "max_iter";
    case SdpStatus::stalled: return "stalled";
    case SdpStatus::inaccurate: return "inaccurate";
    }
    return "unknown";
}

struct SdpOptions {
    double gap_tol = 1e-6;  ///< on |primal - dual| / max(1, |primal|)
    double feas_tol = 1e-8; ///< PSD violation floor and residual tolerance
    int max_iter = 100;
    double step_fraction = 0.98;
    bool verbose = false;
};

struct SdpSolution {
    SdpStatus status = SdpStatus::max_iterations;
    Eigen::VectorXd scalars;
    std::vector<Eigen::MatrixXd> slacks;
    std::vector<Eigen::MatrixXd> dual_blocks; ///< Z_b >= 0
    Eigen::VectorXd dual_ineq;
    Eigen::VectorXd dual_eq;
    double primal_objective = 0.0; ///< in the problem's sense
    double dual_objective = 0.0;
    double duality_gap = 0.0;    ///< |primal - dual|
    double relative_gap = 0.0;   ///< duality_gap / max(1, |primal|)
    double min_eigenvalue = 0.0; ///< smallest eigenvalue over all constraints at the returned point
    double psd_violation = 0.0;  ///< min(0, min_eigenvalue)
    double equality_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    double seconds = 0.0;

    bool optimal() const { return status == SdpStatus::optimal; }

    Eigen::VectorXd block(const SdpProblem& problem, const std::string& name) const
    {
        const VariableBlock* b = problem.find_block(name);
        if (!b) throw ValidationError("no variable block named '" + name + "'");
        return scalars.segment(b->offset, b->length);
    }
};

namespace detail {

inline Eigen::MatrixXd symmetric_part(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

inline double frob_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return a.cwiseProduct(b).sum(); }

/// Largest alpha in [0, inf) with diag(lambda) + alpha * d >= 0 (inf when unbounded).
inline double max_step(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& d)
{
    if (lambda.size() == 0) return std::numeric_limits<double>::infinity();
    const Eigen::ArrayXd isq = lambda.array().rsqrt();
    const Eigen::MatrixXd scaled = isq.matrix().asDiagonal() * d * isq.matrix().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric_part(scaled), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    return lo >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lo;
}

inline double max_step_lp(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d)
{
    double a = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d[i] < 0.0) a = std::min(a, -lambda[i] / d[i]);
    return a;
}

/// Per-block data that does not change across iterations.
struct BlockStructure {
    Eigen::MatrixXd factors;             ///< all coefficient factors side by side
    Eigen::VectorXd scales;              ///< matching diagonal
    std::vector<Eigen::Index> owner;     ///< scalar variable of each factor column
    std::optional<std::size_t> slack;    ///< index into problem.slacks
};

/// Nesterov-Todd scaling of one block: R^{-1} S R^{-T} = R^T Z R = diag(lambda).
struct NtScaling {
    Eigen::MatrixXd r, rinv;
    Eigen::VectorXd lambda;
    Eigen::MatrixXd v; ///< (R R^T)^{-1}, so that V S V = Z
};

inline NtScaling nt_scaling(const Eigen::MatrixXd& s, const Eigen::MatrixXd& z)
{
    Eigen::LLT<Eigen::MatrixXd> ls(s), lz(z);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
        throw NumericalError("iterate left the positive semidefinite cone");
    const Eigen::MatrixXd l_s = ls.matrixL();
    const Eigen::MatrixXd l_z = lz.matrixL();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(l_z.transpose() * l_s, Eigen::ComputeFullU | Eigen::ComputeFullV);
    NtScaling nt;
    nt.lambda = svd.singularValues();
    if (nt.lambda.minCoeff() <= 0.0) throw NumericalError("degenerate scaling point");
    const Eigen::ArrayXd isq = nt.lambda.array().rsqrt();
    nt.r = l_s * svd.matrixV() * isq.matrix().asDiagonal();
    nt.rinv = isq.matrix().asDiagonal() * svd.matrixU().transpose() * l_z.transpose();
    nt.v = nt.rinv.transpose() * nt.rinv;
    nt.v = symmetric_part(nt.v);
    return nt;
}

/// U_I^T (R_I R_I^T)^{-1} U_I with I the rows outside [offset, offset + size).
inline Eigen::MatrixXd schur_outside(const Eigen::MatrixXd& r, const Eigen::MatrixXd& u, Eigen::Index offset,
                                     Eigen::Index size)
{
    const Eigen::Index n = r.rows();
    const Eigen::Index ni = n - size;
    if (ni == 0) return Eigen::MatrixXd::Zero(u.cols(), u.cols());
    Eigen::MatrixXd ri(ni, n), ui(ni, u.cols());
    ri << r.topRows(offset), r.bottomRows(n - offset - size);
    ui << u.topRows(offset), u.bottomRows(n - offset - size);
    // R_I^T = Q T, so R_I R_I^T = T^T T.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ri.transpose());
    const Eigen::MatrixXd t = qr.matrixQR().topRows(ni).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd x = t.transpose().triangularView<Eigen::Lower>().solve(ui);
    return x.transpose() * x;
}

} // namespace detail

class SdpSolver {
public:
    SdpSolver(const SdpProblem& problem, SdpOptions options = {}) : p_(problem), opt_(options)
    {
        p_.validate();
        m_ = p_.num_scalars();
        sign_ = p_.sense == ObjectiveSense::maximize ? -1.0 : 1.0;
        c_ = sign_ * p_.objective;
        for (std::size_t b = 0; b < p_.lmis.size(); ++b) {
            const LmiBlock& blk = p_.lmis[b];
            detail::BlockStructure st;
            Eigen::Index total = 0;
            for (const auto& t : blk.terms) total += t.coefficient.rank();
            st.factors.resize(blk.size(), total);
            st.scales.resize(total);
            Eigen::Index col = 0;
            for (const auto& t : blk.terms) {
                const Eigen::Index r = t.coefficient.rank();
                st.factors.middleCols(col, r) = t.coefficient.factor;
                st.scales.segment(col, r) = t.coefficient.scale;
                for (Eigen::Index j = 0; j < r; ++j) st.owner.push_back(t.variable);
                col += r;
            }
            structure_.push_back(std::move(st));
        }
        for (std::size_t s = 0; s < p_.slacks.size(); ++s) structure_[p_.slacks[s].block].slack = s;
    }

    SdpSolution solve();

private:
    struct Iterate {
        Eigen::VectorXd y;
        std::vector<Eigen::MatrixXd> ys; // matrix slacks
        std::vector<Eigen::MatrixXd> s, z;
        Eigen::VectorXd sl, zl; // inequality slack and multiplier
        Eigen::VectorXd nu;
    };

    struct Residuals {
        std::vector<Eigen::MatrixXd> primal; // F(y, Y) - S
        Eigen::VectorXd primal_lp;           // G y + h - sl
        Eigen::VectorXd eq;                  // a - A y
        Eigen::VectorXd dual;                // c - F^*(Z) - G^T zl - A^T nu
        std::vector<Eigen::MatrixXd> dual_slack; // C_s - (Z_b)_JJ
    };

    struct Direction {
        Eigen::VectorXd dy, dnu, dsl, dzl;
        std::vector<Eigen::MatrixXd> dys, ds, dz;
        std::vector<Eigen::MatrixXd> ds_scaled, dz_scaled;
        Eigen::VectorXd dsl_scaled, dzl_scaled;
    };

    Eigen::MatrixXd block_value(std::size_t b, const Eigen::VectorXd& y, const Eigen::MatrixXd* slack_value) const
    {
        const auto& st = structure_[b];
        Eigen::MatrixXd out = p_.lmis[b].constant;
        add_linear(b, y, out);
        if (st.slack && slack_value) {
            const MatrixSlack& sl = p_.slacks[*st.slack];
            out.block(sl.offset, sl.offset, sl.size, sl.size) += *slack_value;
        }
        return out;
    }

    void add_linear(std::size_t b, const Eigen::VectorXd& y, Eigen::MatrixXd& out) const
    {
        const auto& st = structure_[b];
        if (st.factors.cols() == 0) return;
        Eigen::VectorXd coef(st.factors.cols());
        for (Eigen::Index a = 0; a < coef.size(); ++a) coef[a] = st.scales[a] * y[st.owner[static_cast<std::size_t>(a)]];
        out.noalias() += st.factors * coef.asDiagonal() * st.factors.transpose();
    }

    /// F^*(Z) accumulated into out: out_i += <F_ib, Z>.
    void add_adjoint(std::size_t b, const Eigen::MatrixXd& z, Eigen::VectorXd& out) const
    {
        const auto& st = structure_[b];
        if (st.factors.cols() == 0) return;
        const Eigen::MatrixXd zu = z * st.factors;
        for (Eigen::Index a = 0; a < st.factors.cols(); ++a)
            out[st.owner[static_cast<std::size_t>(a)]] += st.scales[a] * st.factors.col(a).dot(zu.col(a));
    }

    const MatrixSlack* slack_of(std::size_t b) const
    {
        return structure_[b].slack ? &p_.slacks[*structure_[b].slack] : nullptr;
    }

    Iterate initial_point() const;
    Residuals residuals(const Iterate& it) const;
    double primal_objective(const Iterate& it) const;
    double dual_objective(const Iterate& it) const;

    SdpProblem p_;
    SdpOptions opt_;
    Eigen::Index m_ = 0;
    double sign_ = 1.0;
    Eigen::VectorXd c_;
    std::vector<detail::BlockStructure> structure_;
};

inline SdpSolver::Iterate SdpSolver::initial_point() const
{
    Iterate it;
    it.y = p_.initial_scalars ? *p_.initial_scalars : Eigen::VectorXd::Zero(m_);
    for (std::size_t s = 0; s < p_.slacks.size(); ++s) {
        const auto n = p_.slacks[s].size;
        it.ys.push_back(p_.initial_slacks.empty() ? Eigen::MatrixXd::Zero(n, n) : p_.initial_slacks[s]);
    }
    double max_coef = 0.0;
    for (const auto& blk : p_.lmis)
        for (const auto& t : blk.terms)
            max_coef = std::max(max_coef, t.coefficient.scale.cwiseAbs().maxCoeff() *
                                              t.coefficient.factor.colwise().squaredNorm().maxCoeff());
    for (std::size_t b = 0; b < p_.lmis.size(); ++b) {
        const auto n = p_.lmis[b].size();
        const double sqn = std::sqrt(static_cast<double>(n));
        const MatrixSlack* sl = slack_of(b);
        const Eigen::MatrixXd f = block_value(b, it.y, sl ? &it.ys[*structure_[b].slack] : nullptr);
        // Start from the current constraint value when it is comfortably interior.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f, Eigen::EigenvaluesOnly);
        const double scale = std::max({10.0, sqn, max_coef, p_.lmis[b].constant.norm()});
        if (es.eigenvalues().minCoeff() > 1e-3 * std::max(1.0, es.eigenvalues().maxCoeff()))
            it.s.push_back(f);
        else
            it.s.push_back(scale * Eigen::MatrixXd::Identity(n, n));
        double zeta = std::max(10.0, sqn);
        if (c_.size() > 0) zeta = std::max(zeta, sqn * (1.0 + c_.cwiseAbs().maxCoeff()) / (1.0 + max_coef));
        it.z.push_back(zeta * Eigen::MatrixXd::Identity(n, n));
    }
    const Eigen::Index l = p_.ineq_offset.size();
    it.sl = Eigen::VectorXd::Ones(l);
    if (l > 0) {
        const Eigen::VectorXd g = p_.ineq_matrix * it.y + p_.ineq_offset;
        for (Eigen::Index i = 0; i < l; ++i) it.sl[i] = g[i] > 1e-3 ? g[i] : 1.0;
    }
    it.zl = Eigen::VectorXd::Ones(l);
    it.nu = Eigen::VectorXd::Zero(p_.eq_rhs.size());
    return it;
}

inline SdpSolver::Residuals SdpSolver::residuals(const Iterate& it) const
{
    Residuals r;
    r.dual = c_;
    for (std::size_t b = 0; b < p_.lmis.size(); ++b) {
        const MatrixSlack* sl = slack_of(b);
        r.primal.push_back(block_value(b, it.y, sl ? &it.ys[*structure_[b].slack] : nullptr) - it.s[b]);
        Eigen::VectorXd adj = Eigen::VectorXd::Zero(m_);
        add_adjoint(b, it.z[b], adj);
        r.dual -= adj;
    }
    for (std::size_t s = 0; s < p_.slacks.size(); ++s) {
        const MatrixSlack& sl = p_.slacks[s];
        r.dual_slack.push_back(sl.objective - it.z[sl.block].block(sl.offset, sl.offset, sl.size, sl.size));
    }
    if (p_.ineq_offset.size() > 0) {
        r.primal_lp = p_.ineq_matrix * it.y + p_.ineq_offset - it.sl;
        r.dual -= p_.ineq_matrix.transpose() * it.zl;
    }
    if (p_.eq_rhs.size() > 0) {
        r.eq = p_.eq_rhs - p_.eq_matrix * it.y;
        r.dual -= p_.eq_matrix.transpose() * it.nu;
    }
    return r;
}

inline double SdpSolver::primal_objective(const Iterate& it) const
{
    double v = c_.size() > 0 ? c_.dot(it.y) : 0.0;
    for (std::size_t s = 0; s < p_.slacks.size(); ++s) v += detail::frob_inner(p_.slacks[s].objective, it.ys[s]);
    return v;
}

inline double SdpSolver::dual_objective(const Iterate& it) const
{
    double v = 0.0;
    for (std::size_t b = 0; b < p_.lmis.size(); ++b) v -= detail::frob_inner(it.z[b], p_.lmis[b].constant);
    if (p_.ineq_offset.size() > 0) v -= it.zl.dot(p_.ineq_offset);
    if (p_.eq_rhs.size() > 0) v += it.nu.dot(p_.eq_rhs);
    return v;
}

inline SdpSolution SdpSolver::solve()
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t nb = p_.lmis.size();
    const Eigen::Index l = p_.ineq_offset.size();
    const Eigen::Index q = p_.eq_rhs.size();

    Iterate it = initial_point();

    double data_norm = 1.0;
    for (const auto& blk : p_.lmis) data_norm = std::max(data_norm, blk.constant.norm());
    if (l > 0) data_norm = std::max(data_norm, p_.ineq_offset.norm());
    if (q > 0) data_norm = std::max(data_norm, p_.eq_rhs.norm());
    double cost_norm = 1.0 + (c_.size() > 0 ? c_.norm() : 0.0);
    for (const auto& s : p_.slacks) cost_norm = std::max(cost_norm, 1.0 + s.objective.norm());

    Eigen::Index cone_dim = l;
    for (const auto& blk : p_.lmis) cone_dim += blk.size();

    SdpSolution sol;
    int iter = 0;
    int small_steps = 0;
    double pres = 0.0, dres = 0.0, rel_gap = 0.0;
    bool converged = false;
    bool breakdown = false;
    std::optional<Iterate> best;
    double best_merit = 0.0, best_dres = 0.0;

    for (;; ++iter) {
        const Residuals r = residuals(it);
        double pnorm = 0.0;
        for (const auto& m : r.primal) pnorm = std::max(pnorm, m.norm());
        if (l > 0) pnorm = std::max(pnorm, r.primal_lp.norm());
        if (q > 0) pnorm = std::max(pnorm, r.eq.norm());
        double dnorm = r.dual.size() > 0 ? r.dual.norm() : 0.0;
        for (const auto& m : r.dual_slack) dnorm = std::max(dnorm, m.norm());
        pres = pnorm / data_norm;
        dres = dnorm / cost_norm;

        double complementarity = l > 0 ? it.sl.dot(it.zl) : 0.0;
        for (std::size_t b = 0; b < nb; ++b) complementarity += detail::frob_inner(it.s[b], it.z[b]);
        const double mu = complementarity / static_cast<double>(std::max<Eigen::Index>(cone_dim, 1));
        const double pobj = primal_objective(it);
        const double dobj = dual_objective(it);
        rel_gap = std::max(std::abs(pobj - dobj), complementarity) / std::max(1.0, std::abs(pobj));

        if (opt_.verbose) {
            char line[160];
            std::snprintf(line, sizeof line, "sdp %3d  pobj %+.10e  dobj %+.10e  gap %.2e  pres %.2e  dres %.2e", iter,
                          sign_ * pobj, sign_ * dobj, rel_gap, pres, dres);
            warn(line);
        }

        // The gap test stops at half the tolerance so the final certificate,
        // recomputed from scratch, still meets it.
        const double merit = std::max({rel_gap / opt_.gap_tol, pres / opt_.feas_tol, dres / opt_.feas_tol});
        if (!best || merit < best_merit) {
            best = it;
            best_merit = merit;
            best_dres = dres;
        }
        if (rel_gap <= 0.5 * opt_.gap_tol && pres <= opt_.feas_tol && dres <= opt_.feas_tol) {
            converged = true;
            break;
        }
        if (iter >= opt_.max_iter) break;
        if (small_steps >= 5) break;

        // Scaling.
        std::vector<detail::NtScaling> nt;
        nt.reserve(nb);
        try {
            for (std::size_t b = 0; b < nb; ++b) nt.push_back(detail::nt_scaling(it.s[b], it.z[b]));
        } catch (const NumericalError&) {
            breakdown = true;
            break;
        }
        Eigen::VectorXd lp_w, lp_lambda, lp_v;
        if (l > 0) {
            lp_w = (it.sl.array() / it.zl.array()).sqrt();
            lp_lambda = (it.sl.array() * it.zl.array()).sqrt();
            lp_v = it.zl.array() / it.sl.array();
        }

        // Reduced Schur complement over the scalar decisions.
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m_, m_);
        std::vector<Eigen::MatrixXd> slack_inv(nb), slack_g(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            const auto& st = structure_[b];
            const MatrixSlack* sl = slack_of(b);
            Eigen::MatrixXd vu;
            if (st.factors.cols() > 0) vu = nt[b].v * st.factors;
            if (sl) {
                const Eigen::MatrixXd vjj = nt[b].v.block(sl->offset, sl->offset, sl->size, sl->size);
                Eigen::LLT<Eigen::MatrixXd> llt(vjj);
                slack_inv[b] = detail::symmetric_part(llt.solve(Eigen::MatrixXd::Identity(sl->size, sl->size)));
                if (st.factors.cols() > 0) slack_g[b] = vu.middleRows(sl->offset, sl->size);
            }
            if (st.factors.cols() == 0) continue;
            const Eigen::MatrixXd qm = st.factors.transpose() * vu;
            Eigen::MatrixXd qsq;
            if (sl) {
                // Q o Q - P o P = (Q - P) o (Q + P). The two terms nearly cancel
                // close to the optimum, so Q - P = U_I^T (W_II)^{-1} U_I is formed
                // directly from the rows of R outside the slack (W = R R^T).
                const Eigen::MatrixXd diff = detail::schur_outside(nt[b].r, st.factors, sl->offset, sl->size);
                qsq = diff.cwiseProduct(2.0 * qm - diff);
            } else {
                qsq = qm.cwiseAbs2();
            }
            const Eigen::Index rk = st.factors.cols();
            for (Eigen::Index a = 0; a < rk; ++a)
                for (Eigen::Index c = 0; c < rk; ++c)
                    h(st.owner[static_cast<std::size_t>(a)], st.owner[static_cast<std::size_t>(c)]) +=
                        st.scales[a] * st.scales[c] * qsq(a, c);
        }
        if (l > 0) h.noalias() += p_.ineq_matrix.transpose() * lp_v.asDiagonal() * p_.ineq_matrix;
        h = detail::symmetric_part(h);

        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m_ + q, m_ + q);
        kkt.topLeftCorner(m_, m_) = h;
        if (q > 0) {
            kkt.topRightCorner(m_, q) = p_.eq_matrix.transpose();
            kkt.bottomLeftCorner(q, m_) = p_.eq_matrix;
        }
        // Tiny diagonal regularisation keeps free variables without curvature solvable.
        const double reg = 1e-14 * std::max(1.0, m_ > 0 ? h.diagonal().cwiseAbs().maxCoeff() : 0.0);
        kkt.topLeftCorner(m_, m_).diagonal().array() += reg;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;
        if (m_ + q > 0) lu.compute(kkt);

        // Solves the Newton system for a scaled complementarity target.
        auto solve_newton = [&](const std::vector<Eigen::MatrixXd>& target, const Eigen::VectorXd& target_lp,
                                const Residuals& res) {
            Direction d;
            std::vector<Eigen::MatrixXd> zhat(nb);
            Eigen::VectorXd g = -res.dual;
            std::vector<Eigen::MatrixXd> u_blocks(nb);
            for (std::size_t b = 0; b < nb; ++b) {
                const Eigen::VectorXd& lam = nt[b].lambda;
                Eigen::MatrixXd u = target[b];
                for (Eigen::Index i = 0; i < u.rows(); ++i)
                    for (Eigen::Index j = 0; j < u.cols(); ++j) u(i, j) *= 2.0 / (lam[i] + lam[j]);
                u_blocks[b] = u;
                zhat[b] = nt[b].rinv.transpose() * u * nt[b].rinv - nt[b].v * res.primal[b] * nt[b].v;
                zhat[b] = detail::symmetric_part(zhat[b]);
                add_adjoint(b, zhat[b], g);
            }
            Eigen::VectorXd u_lp;
            if (l > 0) {
                u_lp = target_lp.array() / lp_lambda.array();
                g += p_.ineq_matrix.transpose() *
                     (u_lp.array() / lp_w.array() - lp_v.array() * res.primal_lp.array()).matrix();
            }
            // Eliminate matrix slacks.
            std::vector<Eigen::MatrixXd> dy0(p_.slacks.size());
            for (std::size_t s = 0; s < p_.slacks.size(); ++s) {
                const MatrixSlack& sl = p_.slacks[s];
                const std::size_t b = sl.block;
                const Eigen::MatrixXd gy =
                    zhat[b].block(sl.offset, sl.offset, sl.size, sl.size) - res.dual_slack[s];
                dy0[s] = detail::symmetric_part(slack_inv[b] * gy * slack_inv[b]);
                const auto& st = structure_[b];
                if (st.factors.cols() > 0) {
                    const Eigen::MatrixXd tmp = dy0[s] * slack_g[b];
                    for (Eigen::Index a = 0; a < st.factors.cols(); ++a)
                        g[st.owner[static_cast<std::size_t>(a)]] -=
                            st.scales[a] * slack_g[b].col(a).dot(tmp.col(a));
                }
            }
            Eigen::VectorXd rhs(m_ + q);
            rhs.head(m_) = g;
            if (q > 0) rhs.tail(q) = res.eq;
            Eigen::VectorXd sol_vec = Eigen::VectorXd::Zero(m_ + q);
            if (m_ + q > 0) {
                sol_vec = lu.solve(rhs);
                // One step of iterative refinement.
                sol_vec += lu.solve(rhs - kkt * sol_vec);
            }
            d.dy = sol_vec.head(m_);
            d.dnu = q > 0 ? Eigen::VectorXd(-sol_vec.tail(q)) : Eigen::VectorXd();

            d.dys.resize(p_.slacks.size());
            for (std::size_t s = 0; s < p_.slacks.size(); ++s) {
                const MatrixSlack& sl = p_.slacks[s];
                const std::size_t b = sl.block;
                const auto& st = structure_[b];
                Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(sl.size, sl.size);
                if (st.factors.cols() > 0) {
                    Eigen::VectorXd coef(st.factors.cols());
                    for (Eigen::Index a = 0; a < coef.size(); ++a)
                        coef[a] = st.scales[a] * d.dy[st.owner[static_cast<std::size_t>(a)]];
                    coupling = slack_g[b] * coef.asDiagonal() * slack_g[b].transpose();
                }
                d.dys[s] = detail::symmetric_part(dy0[s] - slack_inv[b] * coupling * slack_inv[b]);
            }
            d.ds.resize(nb);
            d.dz.resize(nb);
            d.ds_scaled.resize(nb);
            d.dz_scaled.resize(nb);
            for (std::size_t b = 0; b < nb; ++b) {
                Eigen::MatrixXd ds = res.primal[b];
                add_linear(b, d.dy, ds);
                if (const MatrixSlack* sl = slack_of(b))
                    ds.block(sl->offset, sl->offset, sl->size, sl->size) += d.dys[*structure_[b].slack];
                d.ds[b] = detail::symmetric_part(ds);
                d.dz[b] = detail::symmetric_part(nt[b].rinv.transpose() * u_blocks[b] * nt[b].rinv -
                                                 nt[b].v * d.ds[b] * nt[b].v);
                d.ds_scaled[b] = detail::symmetric_part(nt[b].rinv * d.ds[b] * nt[b].rinv.transpose());
                d.dz_scaled[b] = detail::symmetric_part(nt[b].r.transpose() * d.dz[b] * nt[b].r);
            }
            if (l > 0) {
                d.dsl = p_.ineq_matrix * d.dy + res.primal_lp;
                d.dzl = (u_lp.array() / lp_w.array() - lp_v.array() * d.dsl.array()).matrix();
                d.dsl_scaled = d.dsl.array() / lp_w.array();
                d.dzl_scaled = d.dzl.array() * lp_w.array();
            }
            return d;
        };

        // One round of refinement on the full Newton system: the dual-side
        // equations lose accuracy through the ill-conditioned scaling near the
        // optimum, and the defect is fed back as a homogeneous correction.
        auto newton = [&](const std::vector<Eigen::MatrixXd>& target, const Eigen::VectorXd& target_lp) {
            Direction d = solve_newton(target, target_lp, r);
            Residuals e;
            e.dual = r.dual;
            for (std::size_t b = 0; b < nb; ++b) {
                Eigen::VectorXd adj = Eigen::VectorXd::Zero(m_);
                add_adjoint(b, d.dz[b], adj);
                e.dual -= adj;
                e.primal.push_back(Eigen::MatrixXd::Zero(p_.lmis[b].size(), p_.lmis[b].size()));
            }
            for (std::size_t s = 0; s < p_.slacks.size(); ++s) {
                const MatrixSlack& sl = p_.slacks[s];
                e.dual_slack.push_back(r.dual_slack[s] - d.dz[sl.block].block(sl.offset, sl.offset, sl.size, sl.size));
            }
            if (l > 0) {
                e.dual -= p_.ineq_matrix.transpose() * d.dzl;
                e.primal_lp = Eigen::VectorXd::Zero(l);
            }
            if (q > 0) {
                e.dual -= p_.eq_matrix.transpose() * d.dnu;
                e.eq = r.eq - p_.eq_matrix * d.dy;
            }
            std::vector<Eigen::MatrixXd> zero(nb);
            for (std::size_t b = 0; b < nb; ++b) zero[b] = Eigen::MatrixXd::Zero(p_.lmis[b].size(), p_.lmis[b].size());
            const Direction c = solve_newton(zero, Eigen::VectorXd::Zero(l), e);
            d.dy += c.dy;
            if (q > 0) d.dnu += c.dnu;
            for (std::size_t s = 0; s < d.dys.size(); ++s) d.dys[s] += c.dys[s];
            for (std::size_t b = 0; b < nb; ++b) {
                d.ds[b] += c.ds[b];
                d.dz[b] += c.dz[b];
                d.ds_scaled[b] += c.ds_scaled[b];
                d.dz_scaled[b] += c.dz_scaled[b];
            }
            if (l > 0) {
                d.dsl += c.dsl;
                d.dzl += c.dzl;
                d.dsl_scaled += c.dsl_scaled;
                d.dzl_scaled += c.dzl_scaled;
            }
            return d;
        };

        auto step_to_boundary = [&](const Direction& d) {
            double a = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < nb; ++b) {
                a = std::min(a, detail::max_step(nt[b].lambda, d.ds_scaled[b]));
                a = std::min(a, detail::max_step(nt[b].lambda, d.dz_scaled[b]));
            }
            if (l > 0) {
                a = std::min(a, detail::max_step_lp(lp_lambda, d.dsl_scaled));
                a = std::min(a, detail::max_step_lp(lp_lambda, d.dzl_scaled));
            }
            return a;
        };

        // Predictor.
        std::vector<Eigen::MatrixXd> target(nb);
        for (std::size_t b = 0; b < nb; ++b) target[b] = -Eigen::MatrixXd(nt[b].lambda.array().square().matrix().asDiagonal());
        Eigen::VectorXd target_lp = l > 0 ? Eigen::VectorXd(-lp_lambda.array().square().matrix()) : Eigen::VectorXd();
        const Direction aff = newton(target, target_lp);
        const double a_aff = std::min(1.0, step_to_boundary(aff));
        const double sigma = std::pow(1.0 - a_aff, 3.0);

        // Corrector.
        for (std::size_t b = 0; b < nb; ++b) {
            const Eigen::MatrixXd cross = detail::symmetric_part(aff.ds_scaled[b] * aff.dz_scaled[b]);
            target[b] = -Eigen::MatrixXd(nt[b].lambda.array().square().matrix().asDiagonal()) - cross;
            target[b].diagonal().array() += sigma * mu;
        }
        if (l > 0)
            target_lp = (-lp_lambda.array().square() - aff.dsl_scaled.array() * aff.dzl_scaled.array() + sigma * mu)
                            .matrix();
        const Direction dir = newton(target, target_lp);
        const double a_max = step_to_boundary(dir);
        const double alpha = std::min(1.0, opt_.step_fraction * a_max);
        small_steps = alpha < 1e-8 ? small_steps + 1 : 0;
        if (opt_.verbose) {
            char line[96];
            std::snprintf(line, sizeof line, "    step %.3f  affine %.3f  sigma %.2e", alpha, a_aff, sigma);
            warn(line);
        }

        it.y += alpha * dir.dy;
        for (std::size_t s = 0; s < it.ys.size(); ++s) it.ys[s] += alpha * dir.dys[s];
        for (std::size_t b = 0; b < nb; ++b) {
            it.s[b] = detail::symmetric_part(it.s[b] + alpha * dir.ds[b]);
            it.z[b] = detail::symmetric_part(it.z[b] + alpha * dir.dz[b]);
        }
        if (l > 0) {
            it.sl += alpha * dir.dsl;
            it.zl += alpha * dir.dzl;
        }
        if (q > 0) it.nu += alpha * dir.dnu;
    }

    // Certificate from the best iterate seen.
    sol.iterations = iter;
    if (best && !converged) {
        it = *best;
        dres = best_dres;
    }
    sol.scalars = it.y;
    sol.slacks = it.ys;
    sol.dual_blocks = it.z;
    sol.dual_ineq = it.zl;
    sol.dual_eq = it.nu;
    const double pobj = primal_objective(it);
    const double dobj = dual_objective(it);
    sol.primal_objective = sign_ * pobj;
    sol.dual_objective = sign_ * dobj;
    sol.duality_gap = std::abs(pobj - dobj);
    sol.relative_gap = sol.duality_gap / std::max(1.0, std::abs(pobj));
    double min_eig = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < nb; ++b) {
        const MatrixSlack* sl = slack_of(b);
        const Eigen::MatrixXd f = block_value(b, it.y, sl ? &it.ys[*structure_[b].slack] : nullptr);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::symmetric_part(f), Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    if (l > 0) min_eig = std::min(min_eig, (p_.ineq_matrix * it.y + p_.ineq_offset).minCoeff());
    sol.min_eigenvalue = std::isfinite(min_eig) ? min_eig : 0.0;
    sol.psd_violation = std::min(0.0, sol.min_eigenvalue);
    sol.equality_residual = q > 0 ? (p_.eq_rhs - p_.eq_matrix * it.y).cwiseAbs().maxCoeff() : 0.0;
    sol.dual_residual = dres;

    const bool certified = sol.relative_gap <= opt_.gap_tol && sol.psd_violation >= -opt_.feas_tol &&
                           sol.equality_residual <= opt_.feas_tol * data_norm && dres <= opt_.feas_tol;
    if (certified) sol.status = SdpStatus::optimal;
    else if (converged) sol.status = SdpStatus::inaccurate;
    else if (small_steps >= 5 || breakdown) sol.status = SdpStatus::stalled;
    else sol.status = SdpStatus::max_iterations;
    sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

inline SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& options = {})
{
    return SdpSolver(problem, options).solve();
}

} // namespace hodgeopt
