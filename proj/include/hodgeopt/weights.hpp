/**
 * Positive per-simplex weights, one vector per order.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hodgeopt/complex.hpp"

namespace hodgeopt {

/// Smallest weight admitted into Laplacian assembly.
inline constexpr double kWeightFloor = 1e-8;

class WeightAssignment {
public:
    WeightAssignment() = default;
    explicit WeightAssignment(std::vector<Eigen::VectorXd> per_order) : w_(std::move(per_order)) {}

    static WeightAssignment uniform(const SimplicialComplex& complex, double value = 1.0)
    {
        std::vector<Eigen::VectorXd> w;
        for (int k = 0; k <= complex.dimension(); ++k)
            w.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(complex.count(k)), value));
        return WeightAssignment(std::move(w));
    }

    int max_order() const { return static_cast<int>(w_.size()) - 1; }

    /// w_k; an empty vector outside the stored range (B_k = 0 there).
    const Eigen::VectorXd& order(int k) const
    {
        static const Eigen::VectorXd empty;
        if (k < 0 || k > max_order()) return empty;
        return w_[static_cast<std::size_t>(k)];
    }

    void set_order(int k, Eigen::VectorXd w)
    {
        if (k < 0) throw ValidationError("negative weight order");
        if (k > max_order()) w_.resize(static_cast<std::size_t>(k) + 1);
        w_[static_cast<std::size_t>(k)] = std::move(w);
    }

    WeightAssignment with_order(int k, Eigen::VectorXd w) const
    {
        WeightAssignment copy = *this;
        copy.set_order(k, std::move(w));
        return copy;
    }

private:
    std::vector<Eigen::VectorXd> w_;
};

/// Checks lengths against the complex and rejects non-positive or non-finite
/// entries. Entries in (0, kWeightFloor) are raised to the floor with a warning.
inline WeightAssignment validated_weights(const SimplicialComplex& complex, const WeightAssignment& weights)
{
    WeightAssignment out;
    for (int k = 0; k <= complex.dimension(); ++k) {
        Eigen::VectorXd w = weights.order(k);
        if (static_cast<std::size_t>(w.size()) != complex.count(k))
            throw ValidationError("weight vector for order " + std::to_string(k) + " has length " +
                                  std::to_string(w.size()) + ", expected " + std::to_string(complex.count(k)));
        std::size_t clamped = 0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (!std::isfinite(w[i]) || w[i] <= 0.0)
                throw ValidationError("weight " + std::to_string(i) + " of order " + std::to_string(k) +
                                      " is not positive");
            if (w[i] < kWeightFloor) {
                w[i] = kWeightFloor;
                ++clamped;
            }
        }
        if (clamped > 0)
            warn(std::to_string(clamped) + " weight(s) of order " + std::to_string(k) + " raised to the floor 1e-8");
        out.set_order(k, std::move(w));
    }
    return out;
}

} // namespace hodgeopt
