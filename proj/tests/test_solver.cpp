#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fraclap/blowup.hpp"
#include "fraclap/solver.hpp"
#include "oracles.hpp"

using namespace fraclap;

namespace {

const DomainSpec unit = DomainSpec::interval(-1.0, 1.0);

GridFunction ones_on(const DiscreteOperator& a) {
    GridFunction f(a.grid());
    for (std::size_t node : a.nodes()) f[node] = 1.0;
    return f;
}

double max_diff(const GridFunction& a, const GridFunction& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

SolutionRecord half_order_p2(double h) {
    const FracParams params(1, 0.5);
    const Grid g = domain_grid(unit, h);
    const DiscreteOperator a = domain_operator(unit, g, params);
    SolveConfig cfg;
    cfg.p = 2.0;
    return solve_semilinear(unit, cfg, a, params, initial_guess(unit, a, cfg.p, params));
}

}  // namespace

TEST(Domain, DistanceAndShape) {
    EXPECT_DOUBLE_EQ(unit.distance({0.25, 0.0}), 0.75);
    EXPECT_EQ(unit.distance({1.5, 0.0}), 0.0);
    EXPECT_FALSE(unit.contains({1.0, 0.0}));
    const DomainSpec sq = DomainSpec::square({0.0, 0.0}, 1.0);
    EXPECT_DOUBLE_EQ(sq.distance({0.5, -0.8}), 0.2);
    const DomainSpec disc = DomainSpec::disc({1.0, 0.0}, 2.0);
    EXPECT_DOUBLE_EQ(disc.distance({0.0, 0.0}), 1.0);
    EXPECT_THROW(DomainSpec::interval(1.0, -1.0), ParameterError);
    EXPECT_THROW(DomainSpec::disc({}, 0.0), ParameterError);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const Point x{u(rng), u(rng)}, y{u(rng), u(rng)};
        EXPECT_LE(std::abs(sq.distance(x) - sq.distance(y)), norm(x - y) + 1e-15);
        EXPECT_LE(std::abs(disc.distance(x) - disc.distance(y)), norm(x - y) + 1e-15);
    }
}

TEST(SolveLinear, TorsionProfile) {
    const FracParams params(1, 1.0);
    const Grid g = domain_grid(unit, 1.0 / 200.0);
    const DiscreteOperator a = domain_operator(unit, g, params);
    // (-Delta)^{alpha/2} (1-x^2)^{alpha/2} = kappa, so u = (1-x^2)^{alpha/2} / kappa
    const GridFunction u = solve_linear(a, ones_on(a));
    EXPECT_NEAR(u.at({0.0, 0.0}), 1.0 / oracle::kappa_1_1, 0.01);
    for (std::size_t node : a.nodes()) {
        const double x = g.coordinate(node).x;
        if (std::abs(x) <= 0.9) {
            EXPECT_NEAR(u[node], std::sqrt(1.0 - x * x), 0.01) << x;
        }
    }
}

TEST(SolveLinear, ZeroAndLinearity) {
    const FracParams params(1, 0.7);
    const Grid g = domain_grid(unit, 1.0 / 100.0);
    const DiscreteOperator a = domain_operator(unit, g, params);
    EXPECT_EQ(solve_linear(a, GridFunction(g)).max_abs(), 0.0);
    GridFunction f(g), f2(g);
    for (std::size_t node : a.nodes()) {
        f[node] = std::cos(3.0 * g.coordinate(node).x);
        f2[node] = 2.0 * f[node];
    }
    const GridFunction u = solve_linear(a, f), u2 = solve_linear(a, f2);
    for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(u2[k], 2.0 * u[k], 1e-12 * u.max_abs());
    EXPECT_THROW(solve_linear(unit, f, domain_grid(unit, 0.02), params), ParameterError);
}

TEST(SolveLinear, DiscreteMaximumPrinciple) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (double alpha : {0.5, 1.5}) {
        const FracParams params(1, alpha);
        const Grid g = domain_grid(unit, 1.0 / 64.0);
        const DiscreteOperator a = domain_operator(unit, g, params);
        for (int trial = 0; trial < 25; ++trial) {
            GridFunction f(g);
            for (std::size_t node : a.nodes()) f[node] = u01(rng) < 0.3 ? 0.0 : u01(rng);
            const GridFunction u = solve_linear(a, f);
            for (std::size_t k = 0; k < u.size(); ++k) EXPECT_GE(u[k], 0.0);
        }
    }
}

TEST(SolveLinear, MaximumPrincipleInTwoDimensions) {
    const FracParams params(2, 1.0);
    const DomainSpec sq = DomainSpec::square({}, 1.0);
    const Grid g = domain_grid(sq, 0.125);
    const DiscreteOperator a = domain_operator(sq, g, params);
    const GridFunction u = solve_linear(a, ones_on(a));
    for (std::size_t node : a.nodes()) EXPECT_GT(u[node], 0.0);
}

TEST(SolveSemilinear, MatchesFixedPointAndIsSymmetric) {
    const FracParams params(1, 0.5);
    const SolutionRecord rec = half_order_p2(1.0 / 200.0);
    const Grid& g = rec.u.grid();
    const DiscreteOperator a = domain_operator(unit, g, params);
    EXPECT_LE(rec.residual_norm, 1e-8);
    EXPECT_EQ(rec.x_star.x, 0.0);
    EXPECT_DOUBLE_EQ(rec.d, 1.0);
    EXPECT_DOUBLE_EQ(rec.m, rec.u.at({0.0, 0.0}));
    const Eigen::VectorXd ref = oracle::fixed_point_solution(a.matrix(), 2.0);
    EXPECT_LE((a.gather(rec.u) - ref).lpNorm<Eigen::Infinity>(), 1e-6);
    for (std::size_t node : a.nodes()) {
        const Point x = g.coordinate(node);
        EXPECT_NEAR(rec.u[node], rec.u.at({-x.x, 0.0}), 1e-6);
        EXPECT_GT(rec.u[node], 0.0);
        EXPECT_LE(rec.u[node], rec.m);
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!unit.contains(g.coordinate(k))) {
            EXPECT_EQ(rec.u[k], 0.0);
        }
    }
    for (std::size_t i = 1; i < rec.history.size(); ++i) EXPECT_LT(rec.history[i], rec.history[i - 1]);
}

TEST(SolveSemilinear, MeshRefinement) {
    const double m1 = half_order_p2(1.0 / 200.0).m, m2 = half_order_p2(1.0 / 400.0).m;
    EXPECT_LT(std::abs(m1 - m2), 0.01 * m2);
}

TEST(SolveSemilinear, TwoDimensionalDisc) {
    const FracParams params(2, 1.0);
    const DomainSpec disc = DomainSpec::disc({}, 1.0);
    const Grid g = domain_grid(disc, 0.1);
    const DiscreteOperator a = domain_operator(disc, g, params);
    SolveConfig cfg;
    cfg.p = 2.0;
    const SolutionRecord rec = solve_semilinear(disc, cfg, a, params, initial_guess(disc, a, cfg.p, params));
    EXPECT_LE(rec.residual_norm, cfg.newton_tol);
    EXPECT_EQ(norm(rec.x_star), 0.0);
    const Eigen::VectorXd ref = oracle::fixed_point_solution(a.matrix(), 2.0);
    EXPECT_LE((a.gather(rec.u) - ref).lpNorm<Eigen::Infinity>(), 1e-6 * rec.m);
    for (std::size_t node : a.nodes()) {
        const Point x = g.coordinate(node);
        EXPECT_NEAR(rec.u[node], rec.u.at({x.y, -x.x}), 1e-8 * rec.m);
    }
}

TEST(SolveSemilinear, RejectsTrivialAndSupercriticalInput) {
    const FracParams params(1, 0.5);
    const Grid g = domain_grid(unit, 0.02);
    const DiscreteOperator a = domain_operator(unit, g, params);
    SolveConfig cfg;
    EXPECT_THROW(solve_semilinear(unit, cfg, a, params, GridFunction(g)), SolveError);
    GridFunction neg = initial_guess(unit, a, 2.0, params);
    neg[a.nodes()[3]] = -1.0;
    EXPECT_THROW(solve_semilinear(unit, cfg, a, params, neg), ParameterError);
    cfg.p = 3.0;
    EXPECT_THROW(solve_semilinear(unit, cfg, a, params, initial_guess(unit, a, 2.0, params)), ParameterError);
    cfg.p = 1.0;
    EXPECT_THROW(cfg.validate(params), ParameterError);
    cfg.p = 50.0;
    EXPECT_NO_THROW(cfg.validate(FracParams(1, 1.0)));
}

TEST(Continuation, MatchesIndependentSolvesOnTheSchedule) {
    const FracParams params(1, 0.5);
    const Grid g = domain_grid(unit, 1.0 / 1600.0);
    const DiscreteOperator a = domain_operator(unit, g, params);
    const std::vector<double> schedule{1.5, 2.0, 2.5, 2.8};
    const ContinuationResult run = continuation_run(unit, schedule, a, params);
    ASSERT_FALSE(run.aborted) << run.failure;
    ASSERT_EQ(run.records.size(), schedule.size());
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const SolutionRecord& rec = run.records[i];
        EXPECT_EQ(rec.p, schedule[i]);
        if (i > 0) {
            EXPECT_GT(rec.m, run.records[i - 1].m);
        }
        const Eigen::VectorXd ref = oracle::fixed_point_solution(a.matrix(), schedule[i], 1e-13);
        EXPECT_NEAR(rec.m, ref.maxCoeff(), 1e-4 * ref.maxCoeff()) << schedule[i];
    }
}

TEST(Continuation, FullScheduleOnAFineGrid) {
    const FracParams params(1, 0.5);
    const Grid g = domain_grid(unit, 1.0 / 12800.0);
    const DiscreteOperator a = domain_operator(unit, g, params);
    ASSERT_TRUE(a.iterative());
    const std::vector<double> schedule{1.5, 2.0, 2.5, 2.8, 2.9};
    const ContinuationResult run = continuation_run(unit, schedule, a, params);
    ASSERT_FALSE(run.aborted) << run.failure;
    ASSERT_EQ(run.records.size(), schedule.size());
    for (std::size_t i = 1; i < schedule.size(); ++i) EXPECT_GT(run.records[i].m, run.records[i - 1].m);
    const Eigen::VectorXd ref =
        oracle::fixed_point_solution_cg([&](const Eigen::VectorXd& v) { return a.multiply(v); },
                                        static_cast<Eigen::Index>(a.rows()), 2.9, 1e-9);
    EXPECT_NEAR(run.records.back().m, ref.maxCoeff(), 1e-4 * ref.maxCoeff());
}

TEST(Continuation, DegenerateSchedules) {
    const FracParams params(1, 0.5);
    const Grid g = domain_grid(unit, 0.01);
    const DiscreteOperator a = domain_operator(unit, g, params);
    EXPECT_TRUE(continuation_run(unit, std::vector<double>{}, a, params).records.empty());
    const ContinuationResult one = continuation_run(unit, std::vector<double>{2.0}, a, params);
    ASSERT_EQ(one.records.size(), 1u);
    SolveConfig cfg;
    const SolutionRecord direct = solve_semilinear(unit, cfg, a, params, initial_guess(unit, a, 2.0, params));
    EXPECT_EQ(max_diff(one.records[0].u, direct.u), 0.0);
    EXPECT_THROW(continuation_run(unit, std::vector<double>{2.0, 1.8}, a, params), ParameterError);
    EXPECT_THROW(continuation_run(unit, std::vector<double>{2.0, 3.2}, a, params), ParameterError);
}

TEST(Comparison, IdenticalFieldsHoldWithZeroSlack) {
    const FracParams params(1, 1.0);
    const Grid g = domain_grid(unit, 0.05);
    const DiscreteOperator a = domain_operator(unit, g, params);
    const GridFunction f = solve_linear(a, ones_on(a));
    const ComparisonResult r = comparison_check(f, f, a.nodes(), a, 0.0);
    EXPECT_TRUE(r.holds());
    EXPECT_EQ(r.min_margin, 0.0);
}

TEST(Comparison, CaseIiiBarrierDominatesTheProfile) {
    for (double alpha : {0.5, 1.0, 1.5}) {
        const ComparisonFixture fx = case_iii_fixture(FracParams(1, alpha));
        ASSERT_FALSE(fx.region.empty());
        const ComparisonResult r = comparison_check(fx.upper, fx.lower, fx.region, fx.op, fx.slack);
        EXPECT_TRUE(r.holds()) << alpha << ": " << r.reason;
        EXPECT_GE(r.min_margin, 0.0);
        EXPECT_EQ(classify_case(fx.ratios), BlowupCase::case_iii);
    }
}

TEST(Comparison, ViolatedHypothesesAreReportedAsSuch) {
    const ComparisonFixture fx = case_iii_fixture(FracParams(1, 0.5));
    // b = a + 1 at one region node: A(a - b) is negative there
    GridFunction bumped = fx.upper;
    const std::size_t node = fx.region[fx.region.size() / 2];
    bumped[node] += 1.0;
    ComparisonResult r = comparison_check(fx.upper, bumped, fx.region, fx.op, 0.0);
    EXPECT_EQ(r.status, ComparisonStatus::hypotheses_not_met);
    EXPECT_EQ(r.witness, node);

    // lower pokes above the barrier outside the region
    GridFunction high = fx.lower;
    std::size_t outside = 0;
    for (std::size_t k = 0; k < high.size(); ++k)
        if (std::find(fx.region.begin(), fx.region.end(), k) == fx.region.end() && fx.upper[k] < 0.5) outside = k;
    high[outside] = fx.upper[outside] + 0.5;
    r = comparison_check(fx.upper, high, fx.region, fx.op, fx.slack);
    EXPECT_EQ(r.status, ComparisonStatus::hypotheses_not_met);
    EXPECT_EQ(r.witness, outside);
    EXPECT_NE(r.status, ComparisonStatus::conclusion_failed);
}
