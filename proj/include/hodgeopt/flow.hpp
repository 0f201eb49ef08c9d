/**
 * Hodge Laplacian flows dx/dt = -L_k x, evaluated exactly through the
 * eigendecomposition of the symmetric form:
 *
 *   x(t) = W_k^{-1/2} V exp(-Lambda t) V^T W_k^{1/2} x(0).
 */
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hodgeopt/decomposition.hpp"
#include "hodgeopt/laplacian.hpp"

namespace hodgeopt {

struct FlowTrajectory {
    int order = 0;
    Eigen::VectorXd times;
    Eigen::MatrixXd states; ///< one row per time
    Eigen::VectorXd harmonic_limit;
};

/// Caches the spectral data of one Laplacian and propagates chains under its flow.
class FlowPropagator {
public:
    explicit FlowPropagator(const HodgeLaplacian& lap)
        : order_(lap.order()), sqrt_w_(lap.weights().array().sqrt()), spectral_(spectrum(lap))
    {
        rates_ = spectral_.eigenvalues;
        // Kernel modes are exactly stationary.
        for (Eigen::Index i = 0; i < rates_.size(); ++i)
            if (i < spectral_.kernel_dim) rates_[i] = 0.0;
    }

    int order() const { return order_; }
    const SpectralData& spectral() const { return spectral_; }

    /// Modal coordinates V^T W^{1/2} x.
    Eigen::VectorXd modes(const Eigen::VectorXd& x) const
    {
        check(x);
        return spectral_.symmetric_eigenvectors.transpose() * (sqrt_w_ * x.array()).matrix();
    }

    Eigen::VectorXd at(const Eigen::VectorXd& x0, double t) const
    {
        const Eigen::VectorXd decay = (-rates_.array() * t).exp();
        return from_modes(modes(x0).cwiseProduct(decay));
    }

    /// W_k-orthogonal projection of x onto ker L_k, the t -> infinity limit.
    Eigen::VectorXd harmonic_projection(const Eigen::VectorXd& x) const
    {
        Eigen::VectorXd m = modes(x);
        m.tail(m.size() - spectral_.kernel_dim).setZero();
        return from_modes(m);
    }

    FlowTrajectory trajectory(const Eigen::VectorXd& x0, const Eigen::VectorXd& times) const
    {
        if (times.size() == 0 || times[0] != 0.0) throw ValidationError("flow times must start at 0");
        for (Eigen::Index i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1])) throw ValidationError("flow times must be strictly increasing");
        if (!times.allFinite()) throw ValidationError("flow times must be finite");

        FlowTrajectory out;
        out.order = order_;
        out.times = times;
        out.states.resize(times.size(), x0.size());
        const Eigen::VectorXd m0 = modes(x0);
        out.states.row(0) = x0.transpose();
        for (Eigen::Index i = 1; i < times.size(); ++i) {
            const Eigen::VectorXd decay = (-rates_.array() * times[i]).exp();
            out.states.row(i) = from_modes(m0.cwiseProduct(decay)).transpose();
        }
        out.harmonic_limit = harmonic_projection(x0);
        return out;
    }

private:
    void check(const Eigen::VectorXd& x) const
    {
        if (x.size() != sqrt_w_.size())
            throw ValidationError("initial condition has length " + std::to_string(x.size()) + ", expected " +
                                  std::to_string(sqrt_w_.size()));
        if (!x.allFinite()) throw ValidationError("initial condition has non-finite entries");
    }

    Eigen::VectorXd from_modes(const Eigen::VectorXd& m) const
    {
        return ((spectral_.symmetric_eigenvectors * m).array() / sqrt_w_).matrix();
    }

    int order_;
    Eigen::ArrayXd sqrt_w_;
    SpectralData spectral_;
    Eigen::VectorXd rates_;
};

inline FlowTrajectory simulate_flow(const HodgeLaplacian& lap, const ChainSignal& x0, const Eigen::VectorXd& times)
{
    if (x0.order != lap.order())
        throw ValidationError("initial condition of order " + std::to_string(x0.order) + " for L_" +
                              std::to_string(lap.order()));
    return FlowPropagator(lap).trajectory(x0.values, times);
}

/// 0 followed by `samples - 1` log-spaced times ending at t_end, the first at t_end * 1e-3.
inline Eigen::VectorXd default_flow_times(double t_end, Eigen::Index samples = 200)
{
    if (!(t_end > 0.0) || samples < 2) throw ValidationError("flow grid needs t_end > 0 and >= 2 samples");
    Eigen::VectorXd t(samples);
    t[0] = 0.0;
    const double lo = std::log10(t_end * 1e-3);
    const double hi = std::log10(t_end);
    for (Eigen::Index i = 1; i < samples; ++i)
        t[i] = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i - 1) / static_cast<double>(samples - 2));
    t[samples - 1] = t_end;
    return t;
}

struct FlowComponentTrace {
    FlowTrajectory trajectory;
    Eigen::MatrixXd gradient; ///< rows aligned with trajectory.times
    Eigen::MatrixXd harmonic;
    Eigen::MatrixXd curl;
    Eigen::VectorXd gradient_norm; ///< W_k norms
    Eigen::VectorXd harmonic_norm;
    Eigen::VectorXd curl_norm;
};

/// Decomposes the flow state at every sample time.
inline FlowComponentTrace flow_decomposition_trace(const SimplicialComplex& complex, const WeightAssignment& weights,
                                                   const ChainSignal& x0, const Eigen::VectorXd& times)
{
    const HodgeLaplacian lap = assemble_laplacian(complex, weights, x0.order);
    const HodgeDecomposer decompose(complex, weights, x0.order);

    FlowComponentTrace out;
    out.trajectory = FlowPropagator(lap).trajectory(x0.values, times);
    const Eigen::Index rows = times.size();
    const Eigen::Index n = x0.values.size();
    out.gradient.resize(rows, n);
    out.harmonic.resize(rows, n);
    out.curl.resize(rows, n);
    out.gradient_norm.resize(rows);
    out.harmonic_norm.resize(rows);
    out.curl_norm.resize(rows);
    const Eigen::VectorXd& wk = lap.weights();
    for (Eigen::Index i = 0; i < rows; ++i) {
        const HodgeComponents parts = decompose(out.trajectory.states.row(i).transpose());
        out.gradient.row(i) = parts.gradient.transpose();
        out.harmonic.row(i) = parts.harmonic.transpose();
        out.curl.row(i) = parts.curl.transpose();
        out.gradient_norm[i] = weighted_norm(parts.gradient, wk);
        out.harmonic_norm[i] = weighted_norm(parts.harmonic, wk);
        out.curl_norm[i] = weighted_norm(parts.curl, wk);
    }
    return out;
}

} // namespace hodgeopt
