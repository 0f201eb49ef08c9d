#include <gtest/gtest.h>

#include "support.hpp"

using namespace hodgeopt;
using namespace testing_support;

namespace {

struct Projected {
    Eigen::VectorXd gradient, harmonic, curl;
};

/// Orthogonal projections in W_k^{1/2} coordinates, where im(B_k^T) and
/// im(W_k^{-1} B_{k+1}) become Euclidean-orthogonal ranges.
Projected projector_oracle(const SimplicialComplex& c, const WeightAssignment& w, int k, const Eigen::VectorXd& s)
{
    const Eigen::VectorXd sw = w.order(k).array().sqrt();
    const Eigen::MatrixXd grad_range = range_basis(sw.asDiagonal() * boundary_dense(c, k).transpose());
    const Eigen::MatrixXd curl_range = range_basis(sw.cwiseInverse().asDiagonal() * boundary_dense(c, k + 1));
    const Eigen::VectorXd hat = sw.cwiseProduct(s);
    Projected p;
    p.gradient = (grad_range * (grad_range.transpose() * hat)).cwiseQuotient(sw);
    p.curl = (curl_range * (curl_range.transpose() * hat)).cwiseQuotient(sw);
    p.harmonic = s - p.gradient - p.curl;
    return p;
}

} // namespace

TEST(Decompose, HarmonicInputIsUnchanged)
{
    const SimplicialComplex c = hollow_triangle();
    Eigen::VectorXd s(3);
    s << 1, -1, 1;
    s /= std::sqrt(3.0);
    const HodgeComponents parts = hodge_decompose(c, WeightAssignment::uniform(c), {1, s});
    EXPECT_LE(parts.gradient.norm(), 1e-12);
    EXPECT_LE(parts.curl.norm(), 1e-12);
    EXPECT_LE((parts.harmonic - s).norm(), 1e-12);
    EXPECT_EQ(parts.upper_potential.size(), 0);
}

TEST(Decompose, GradientInputOnFilledTriangle)
{
    const SimplicialComplex c = filled_triangle();
    Rng rng(1);
    const Eigen::VectorXd s = boundary_dense(c, 1).transpose() * random_vector(3, rng);
    const HodgeComponents parts = hodge_decompose(c, WeightAssignment::uniform(c), {1, s});
    EXPECT_LE(parts.harmonic.norm(), 1e-10 * s.norm());
    EXPECT_LE(parts.curl.norm(), 1e-10 * s.norm());
    EXPECT_LE((parts.gradient - s).norm(), 1e-10 * s.norm());
}

TEST(Decompose, OrderZeroAndTopOrderBoundaries)
{
    Rng rng(2);
    const SimplicialComplex c = filled_triangle();
    const WeightAssignment w = random_weights(c, rng);
    const HodgeComponents p0 = hodge_decompose(c, w, {0, random_vector(3, rng)});
    EXPECT_EQ(p0.lower_potential.size(), 0);
    EXPECT_EQ(p0.gradient.norm(), 0.0);
    const HodgeComponents p2 = hodge_decompose(c, w, {2, random_vector(1, rng)});
    EXPECT_EQ(p2.upper_potential.size(), 0);
    EXPECT_EQ(p2.curl.norm(), 0.0);
}

TEST(Decompose, RejectsBadInput)
{
    const SimplicialComplex c = filled_triangle();
    const WeightAssignment w = WeightAssignment::uniform(c);
    EXPECT_THROW(hodge_decompose(c, w, {1, Eigen::VectorXd::Ones(2)}), ValidationError);
    EXPECT_THROW(hodge_decompose(c, w, {3, Eigen::VectorXd::Ones(1)}), ValidationError);
    Eigen::VectorXd bad = Eigen::VectorXd::Ones(3);
    bad[1] = NAN;
    EXPECT_THROW(hodge_decompose(c, w, {1, bad}), ValidationError);
}

TEST(Verify, ExactDecompositionPasses)
{
    Rng rng(3);
    const SimplicialComplex c = random_instance(rng);
    const WeightAssignment w = random_weights(c, rng);
    const ChainSignal s{1, random_vector(static_cast<Eigen::Index>(c.count(1)), rng)};
    const DecompositionReport r = verify_decomposition(hodge_decompose(c, w, s), c, w, s);
    EXPECT_TRUE(r.within(1e-8));
}

TEST(Verify, PerturbedHarmonicPartShowsInResidual)
{
    const SimplicialComplex c = hollow_triangle();
    const WeightAssignment w = WeightAssignment::uniform(c);
    Rng rng(4);
    const ChainSignal s{1, random_vector(3, rng)};
    HodgeComponents parts = hodge_decompose(c, w, s);
    parts.harmonic[0] += 0.1;
    EXPECT_NEAR(verify_decomposition(parts, c, w, s).reconstruction_residual, 0.1, 1e-12);
}

TEST(Verify, ZeroSignal)
{
    const SimplicialComplex c = filled_triangle();
    const WeightAssignment w = WeightAssignment::uniform(c);
    const ChainSignal s{1, Eigen::VectorXd::Zero(3)};
    const HodgeComponents parts = hodge_decompose(c, w, s);
    EXPECT_EQ(parts.gradient.norm() + parts.harmonic.norm() + parts.curl.norm(), 0.0);
    const DecompositionReport r = verify_decomposition(parts, c, w, s);
    EXPECT_EQ(r.reconstruction_residual, 0.0);
    EXPECT_EQ(r.harmonic_residual, 0.0);
    EXPECT_EQ(r.max_orthogonality, 0.0);
}

TEST(Routes, AgreeOverManyWeightedInstances)
{
    // Seed 206 once exposed a rank-revealing failure in the normal-equation route.
    double worst = 0.0;
    for (std::uint64_t seed = 200; seed < 300; ++seed) {
        Rng rng(seed);
        const SimplicialComplex c = random_instance(rng, 10, 20);
        const WeightAssignment w = random_weights(c, rng);
        for (int k = 0; k <= c.dimension(); ++k) {
            const ChainSignal s{k, random_vector(static_cast<Eigen::Index>(c.count(k)), rng)};
            const HodgeComponents ne = hodge_decompose(c, w, s);
            const HodgeComponents ls = hodge_decompose(c, w, s, DecompositionRoute::least_squares);
            const DecompositionReport r = verify_decomposition(ne, c, w, s);
            const double n = s.values.norm();
            worst = std::max({worst, r.relative_harmonic_residual, r.max_orthogonality,
                              (ls.gradient - ne.gradient).norm() / n, (ls.curl - ne.curl).norm() / n});
        }
    }
    EXPECT_LE(worst, 1e-8);
}

class DecomposeRandom : public ::testing::TestWithParam<int> {};

TEST_P(DecomposeRandom, MatchesProjectorOracle)
{
    Rng rng(2000 + static_cast<std::uint64_t>(GetParam()));
    const SimplicialComplex c = random_instance(rng, 10, 20);
    const WeightAssignment w = random_weights(c, rng);
    for (int k = 0; k <= c.dimension(); ++k) {
        const ChainSignal s{k, random_vector(static_cast<Eigen::Index>(c.count(k)), rng)};
        const HodgeComponents parts = hodge_decompose(c, w, s);
        const DecompositionReport r = verify_decomposition(parts, c, w, s);
        EXPECT_LE(r.relative_reconstruction, 1e-8);
        EXPECT_LE(r.relative_harmonic_residual, 1e-8);
        EXPECT_LE(r.max_orthogonality, 1e-8);

        const Projected oracle = projector_oracle(c, w, k, s.values);
        const double n = s.values.norm();
        EXPECT_LE((parts.gradient - oracle.gradient).norm(), 1e-8 * n);
        EXPECT_LE((parts.curl - oracle.curl).norm(), 1e-8 * n);
        EXPECT_LE((parts.harmonic - oracle.harmonic).norm(), 1e-8 * n);

        // Least-squares and normal-equation routes give the same parts.
        const HodgeComponents ls = hodge_decompose(c, w, s, DecompositionRoute::least_squares);
        EXPECT_LE((ls.gradient - parts.gradient).norm(), 1e-8 * n);
        EXPECT_LE((ls.curl - parts.curl).norm(), 1e-8 * n);
    }
}

TEST_P(DecomposeRandom, GradientPartIsIdempotent)
{
    Rng rng(3000 + static_cast<std::uint64_t>(GetParam()));
    const SimplicialComplex c = random_instance(rng);
    const WeightAssignment w = random_weights(c, rng);
    const ChainSignal s{1, random_vector(static_cast<Eigen::Index>(c.count(1)), rng)};
    const HodgeComponents first = hodge_decompose(c, w, s);
    const HodgeComponents again = hodge_decompose(c, w, {1, first.gradient});
    const double n = s.values.norm();
    EXPECT_LE((again.gradient - first.gradient).norm(), 1e-8 * n);
    EXPECT_LE(again.harmonic.norm(), 1e-8 * n);
    EXPECT_LE(again.curl.norm(), 1e-8 * n);
}

TEST_P(DecomposeRandom, DimensionCount)
{
    Rng rng(4000 + static_cast<std::uint64_t>(GetParam()));
    const SimplicialComplex c = random_vr(rng, 18, rng.uniform(0.3, 0.5));
    for (int k = 0; k <= c.dimension(); ++k) {
        const Eigen::Index total = numerical_rank(boundary_dense(c, k).transpose()) + kernel_basis(c, k).betti() +
                                   numerical_rank(boundary_dense(c, k + 1));
        EXPECT_EQ(total, static_cast<Eigen::Index>(c.count(k)));
    }
}

INSTANTIATE_TEST_SUITE_P(Weighted, DecomposeRandom, ::testing::Range(0, 20));
