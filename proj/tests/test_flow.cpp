#include <gtest/gtest.h>

#include "support.hpp"

using namespace hodgeopt;
using namespace testing_support;

namespace {

Eigen::VectorXd linspace(double t_end, Eigen::Index n) { return Eigen::VectorXd::LinSpaced(n, 0.0, t_end); }

struct Instance {
    SimplicialComplex complex;
    WeightAssignment weights;
};

Instance weighted_instance(std::uint64_t seed)
{
    Rng rng(seed);
    Instance in{random_instance(rng, 10, 18), {}};
    in.weights = random_weights(in.complex, rng);
    return in;
}

} // namespace

TEST(Flow, HarmonicInitialConditionIsFixed)
{
    const SimplicialComplex c = hollow_triangle();
    Eigen::VectorXd x0(3);
    x0 << 1, -1, 1;
    const HodgeLaplacian lap = assemble_laplacian(c, WeightAssignment::uniform(c), 1);
    const FlowTrajectory t = simulate_flow(lap, {1, x0}, linspace(10.0, 101));
    for (Eigen::Index i = 0; i < t.times.size(); ++i) EXPECT_LE((t.states.row(i).transpose() - x0).norm(), 1e-10);
}

TEST(Flow, TriangleConsensus)
{
    const SimplicialComplex c = filled_triangle();
    const HodgeLaplacian lap = assemble_laplacian(c, WeightAssignment::uniform(c), 0);
    Eigen::VectorXd x0(3);
    x0 << 1, 0, 0;
    const FlowTrajectory t = simulate_flow(lap, {0, x0}, linspace(3.0, 31));
    const Eigen::VectorXd limit = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    EXPECT_LE((t.harmonic_limit - limit).norm(), 1e-14);
    const double c0 = (x0 - limit).norm();
    for (Eigen::Index i = 0; i < t.times.size(); ++i)
        EXPECT_NEAR((t.states.row(i).transpose() - limit).norm(), std::exp(-3.0 * t.times[i]) * c0, 1e-12);
}

TEST(Flow, DecayRateFromLogSlope)
{
    const SimplicialComplex c = filled_triangle();
    const HodgeLaplacian lap = assemble_laplacian(c, WeightAssignment::uniform(c), 0);
    Eigen::VectorXd x0(3);
    x0 << 1, 0, 0;
    const FlowTrajectory t = simulate_flow(lap, {0, x0}, linspace(2.0, 21));
    // Least-squares slope of log ||x(t) - x_inf|| against t.
    Eigen::MatrixXd a(t.times.size(), 2);
    Eigen::VectorXd y(t.times.size());
    for (Eigen::Index i = 0; i < t.times.size(); ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = t.times[i];
        y[i] = std::log((t.states.row(i).transpose() - t.harmonic_limit).norm());
    }
    const Eigen::Vector2d fit = a.colPivHouseholderQr().solve(y);
    EXPECT_NEAR(-fit[1], lambda_min_nonzero(lap), 0.02 * lambda_min_nonzero(lap));
}

TEST(Flow, RowZeroIsInitialCondition)
{
    const Instance in = weighted_instance(1);
    Rng rng(1);
    const Eigen::VectorXd x0 = random_vector(static_cast<Eigen::Index>(in.complex.count(1)), rng);
    const FlowTrajectory t = simulate_flow(assemble_laplacian(in.complex, in.weights, 1), {1, x0}, linspace(1.0, 5));
    EXPECT_EQ(Eigen::VectorXd(t.states.row(0).transpose()), x0);
    EXPECT_TRUE(t.states.allFinite());
}

TEST(Flow, RejectsBadInput)
{
    const SimplicialComplex c = filled_triangle();
    const HodgeLaplacian lap = assemble_laplacian(c, WeightAssignment::uniform(c), 1);
    Eigen::VectorXd x0 = Eigen::VectorXd::Ones(3);
    Eigen::VectorXd times(3);
    times << 0.0, 1.0, 1.0;
    EXPECT_THROW(simulate_flow(lap, {1, x0}, times), ValidationError);
    times << 0.5, 1.0, 2.0;
    EXPECT_THROW(simulate_flow(lap, {1, x0}, times), ValidationError);
    x0[0] = INFINITY;
    EXPECT_THROW(simulate_flow(lap, {1, x0}, linspace(1.0, 3)), ValidationError);
    EXPECT_THROW(simulate_flow(lap, {0, Eigen::VectorXd::Ones(3)}, linspace(1.0, 3)), ValidationError);
}

TEST(Flow, DefaultGrid)
{
    const Eigen::VectorXd t = default_flow_times(10.0);
    ASSERT_EQ(t.size(), 200);
    EXPECT_EQ(t[0], 0.0);
    EXPECT_NEAR(t[1], 1e-2, 1e-15);
    EXPECT_EQ(t[199], 10.0);
    for (Eigen::Index i = 1; i < t.size(); ++i) EXPECT_GT(t[i], t[i - 1]);
    EXPECT_THROW(default_flow_times(0.0), ValidationError);
}

class FlowRandom : public ::testing::TestWithParam<int> {};

TEST_P(FlowRandom, MatchesRungeKutta)
{
    const Instance in = weighted_instance(5000 + static_cast<std::uint64_t>(GetParam()));
    Rng rng(static_cast<std::uint64_t>(GetParam()));
    const HodgeLaplacian lap = assemble_laplacian(in.complex, in.weights, 1);
    const Eigen::VectorXd x0 = random_vector(lap.size(), rng);
    const double t = 0.5 / std::max(1.0, spectral_norm(lap.full())) * 20.0;
    const FlowPropagator prop(lap);
    const Eigen::VectorXd ref = rk4(lap.full(), x0, t, 4000);
    EXPECT_LE((prop.at(x0, t) - ref).norm(), 1e-8 * x0.norm());
}

TEST_P(FlowRandom, SpectralDecayBound)
{
    const Instance in = weighted_instance(6000 + static_cast<std::uint64_t>(GetParam()));
    Rng rng(static_cast<std::uint64_t>(GetParam()));
    const HodgeLaplacian lap = assemble_laplacian(in.complex, in.weights, 1);
    const FlowPropagator prop(lap);
    const double lam = lambda_min_nonzero(prop.spectral());
    const Eigen::VectorXd x0 = random_vector(lap.size(), rng);
    const Eigen::VectorXd h = prop.harmonic_projection(x0);
    const double c0 = weighted_norm(x0 - h, lap.weights());
    const Eigen::VectorXd times = default_flow_times(10.0 / lam, 50);
    const FlowTrajectory traj = prop.trajectory(x0, times);
    double previous = INFINITY;
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        const double r = weighted_norm(traj.states.row(i).transpose() - h, lap.weights());
        EXPECT_LE(r, std::exp(-lam * times[i]) * c0 * (1.0 + 1e-10) + 1e-14);
        EXPECT_LE(r, previous + 1e-12);
        previous = r;
    }
}

TEST_P(FlowRandom, Semigroup)
{
    const Instance in = weighted_instance(7000 + static_cast<std::uint64_t>(GetParam()));
    Rng rng(static_cast<std::uint64_t>(GetParam()));
    const HodgeLaplacian lap = assemble_laplacian(in.complex, in.weights, 1);
    const FlowPropagator prop(lap);
    const Eigen::VectorXd x0 = random_vector(lap.size(), rng);
    const double t1 = rng.uniform(0.01, 0.5), t2 = rng.uniform(0.01, 0.5);
    const Eigen::VectorXd direct = prop.at(x0, t1 + t2);
    const Eigen::VectorXd restarted = prop.at(prop.at(x0, t1), t2);
    EXPECT_LE((direct - restarted).norm(), 1e-8 * std::max(1e-300, direct.norm()));
}

TEST_P(FlowRandom, ComponentTraces)
{
    const Instance in = weighted_instance(8000 + static_cast<std::uint64_t>(GetParam()));
    Rng rng(static_cast<std::uint64_t>(GetParam()));
    const int k = 1;
    const SimplicialComplex& c = in.complex;
    const HodgeLaplacian lap = assemble_laplacian(c, in.weights, k);
    const Eigen::VectorXd times = default_flow_times(10.0 / lambda_min_nonzero(lap), 40);

    const Eigen::VectorXd x0 = random_vector(lap.size(), rng);
    const FlowComponentTrace tr = flow_decomposition_trace(c, in.weights, {k, x0}, times);
    const double n0 = x0.norm();
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        const Eigen::VectorXd sum = (tr.gradient.row(i) + tr.harmonic.row(i) + tr.curl.row(i)).transpose();
        EXPECT_LE((sum - tr.trajectory.states.row(i).transpose()).norm(), 1e-8 * n0);
        EXPECT_LE((tr.harmonic.row(i) - tr.harmonic.row(0)).norm(), 1e-8 * n0);
        if (i > 0) {
            EXPECT_LE(tr.gradient_norm[i], tr.gradient_norm[i - 1] + 1e-10);
            EXPECT_LE(tr.curl_norm[i], tr.curl_norm[i - 1] + 1e-10);
        }
    }

    // A gradient-space start never develops curl, and vice versa.
    const Eigen::VectorXd g0 = boundary_dense(c, k).transpose() * random_vector(static_cast<Eigen::Index>(c.count(0)), rng);
    const FlowComponentTrace gtr = flow_decomposition_trace(c, in.weights, {k, g0}, times);
    EXPECT_LE(gtr.curl.cwiseAbs().maxCoeff(), 1e-8 * g0.norm());
    EXPECT_LE(gtr.harmonic.cwiseAbs().maxCoeff(), 1e-8 * g0.norm());

    const Eigen::VectorXd& wk = in.weights.order(k);
    const Eigen::VectorXd c0 = wk.cwiseInverse().asDiagonal() * boundary_dense(c, k + 1) *
                               in.weights.order(k + 1).asDiagonal() *
                               random_vector(static_cast<Eigen::Index>(c.count(k + 1)), rng);
    const FlowComponentTrace ctr = flow_decomposition_trace(c, in.weights, {k, c0}, times);
    EXPECT_LE(ctr.gradient.cwiseAbs().maxCoeff(), 1e-8 * c0.norm());
    EXPECT_LE(ctr.harmonic.cwiseAbs().maxCoeff(), 1e-8 * c0.norm());
}

INSTANTIATE_TEST_SUITE_P(Weighted, FlowRandom, ::testing::Range(0, 10));

TEST(Flow, HarmonicStartHasNoMovingComponents)
{
    Rng rng(kReferenceSeed);
    const SimplicialComplex c = random_vr(rng, 30, 0.5);
    const WeightAssignment w = WeightAssignment::uniform(c);
    const Eigen::VectorXd h = kernel_basis(c, 1).basis.col(0);
    const FlowComponentTrace tr = flow_decomposition_trace(c, w, {1, h}, default_flow_times(10.0, 20));
    EXPECT_LE(tr.gradient.cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(tr.curl.cwiseAbs().maxCoeff(), 1e-10);
}
