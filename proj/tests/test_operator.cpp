#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <fraclap/barriers.hpp>
#include <fraclap/operator.hpp>

#include "oracles.hpp"

using namespace fraclap;

namespace {

QuadConfig tight() {
    QuadConfig q;
    q.tol = 1e-9;
    return q;
}

// (1-x^2)_+^s P_n^{(s,s)}(x)
FieldFn weighted_jacobi(unsigned n, double s) {
    return FieldFn(
        [n, s](const Point& p) {
            if (std::abs(p.x) >= 1.0) return 0.0;
            return std::pow(1.0 - p.x * p.x, s) * boost::math::jacobi(n, s, s, p.x);
        },
        Growth::compact(1.0, 10.0), {Kink{{0.0, 0.0}, 1.0}});
}

}  // namespace

TEST(EvalPointPv, AnnihilatesConstants) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> pos(-50.0, 50.0);
    const QuadConfig q;
    for (double alpha : {0.3, 1.0, 1.7}) {
        const FracParams params(1, alpha);
        for (int i = 0; i < 50; ++i) {
            const PvValue v = eval_point_pv(fields::constant(7.0), {pos(rng), 0.0}, params, q);
            EXPECT_LE(std::abs(v.value), q.tol);
        }
    }
}

TEST(EvalPointPv, CosineAtUnitFrequency) {
    for (double alpha : {0.5, 1.0, 1.5}) {
        const FracParams params(1, alpha);
        const PvValue v = eval_point_pv(fields::cosine({1.0, 0.0}), {0.3, 0.0}, params, QuadConfig{});
        EXPECT_NEAR(v.value, std::cos(0.3), 1e-4 * std::cos(0.3)) << alpha;
        EXPECT_LE(std::abs(v.value - std::cos(0.3)), v.error) << alpha;
    }
}

TEST(EvalPointPv, SymbolCalibrationGrid) {
    for (double alpha : {0.3, 1.0, 1.7})
        for (double xi : {0.5, 1.0, 2.0})
            for (double x : {0.0, 0.2, 0.7}) {
                const FracParams params(1, alpha);
                const double expect = oracle::cos_symbol(xi, x, alpha);
                const double got = eval_point_pv(fields::cosine({xi, 0.0}), {x, 0.0}, params, QuadConfig{}).value;
                EXPECT_NEAR(got, expect, 1e-4 * std::abs(expect)) << alpha << " " << xi << " " << x;
            }
}

TEST(EvalPointPv, Psi1InteriorValueIsKappaPerUnitAmplitude) {
    const FracParams params(1, 1.0);
    const PvValue v = eval_point_pv(psi1_field({0.0, 0.0}, params), {0.4, 0.0}, params, tight());
    EXPECT_NEAR(v.value / params.c_norm(), oracle::kappa_1_1, 1e-7);
}

TEST(EvalPointPv, WeightedJacobiEigenfunctions) {
    for (double alpha : {0.5, 1.0, 1.5}) {
        const double s = 0.5 * alpha;
        const FracParams params(1, alpha);
        for (unsigned n : {0u, 2u, 3u}) {
            const double eig = std::exp(std::lgamma(2.0 * s + n + 1.0) - std::lgamma(n + 1.0));
            for (double x : {-0.6, 0.1, 0.45}) {
                const double expect = eig * boost::math::jacobi(n, s, s, x);
                const double got = eval_point_pv(weighted_jacobi(n, s), {x, 0.0}, params, tight()).value;
                EXPECT_NEAR(got, expect, 1e-6 * std::max(1.0, std::abs(expect))) << alpha << " n=" << n << " x=" << x;
            }
        }
    }
}

TEST(EvalPointPv, AgreesWithDirectQuadratureOnBump) {
    for (double alpha : {0.4, 1.2, 1.8}) {
        const FracParams params(1, alpha);
        const FieldFn bump = fields::smooth_bump(1.0);
        auto u = [&](double t) { return bump({t, 0.0}); };
        for (double x : {0.0, 0.5, 2.0}) {
            const double expect = oracle::pv_1d_compact(u, x, alpha, params.c_norm(), 1.0);
            QuadConfig q;
            q.tol = 1e-8;
            const double got = eval_point_pv(bump, {x, 0.0}, params, q).value;
            EXPECT_NEAR(got, expect, 1e-7 * std::max(1.0, std::abs(expect))) << alpha << " " << x;
        }
    }
}

TEST(EvalPointPv, GaussianAtOriginInTwoDimensions) {
    for (double alpha : {0.5, 1.0, 1.5}) {
        const FracParams params(2, alpha);
        const double got = eval_point_pv(fields::gaussian(1.0), {0.0, 0.0}, params, QuadConfig{}).value;
        const double expect = oracle::gaussian_2d_at_origin(alpha);
        EXPECT_NEAR(got, expect, 1e-5 * expect) << alpha;
    }
}

TEST(EvalPointPv, RejectsNonFiniteInput) {
    const FracParams params(1, 1.0);
    EXPECT_THROW(eval_point_pv(fields::constant(1.0), {std::nan(""), 0.0}, params, QuadConfig{}), InputError);
    const FieldFn bad([](const Point&) { return std::nan(""); }, Growth::power_law(1.0, 0.0));
    EXPECT_THROW(eval_point_pv(bad, {0.0, 0.0}, params, QuadConfig{}), InputError);
}

TEST(EvalPointPv, ReportsUnreachableTolerance) {
    const FracParams params(1, 1.0);
    QuadConfig q;
    q.tol = 1e-15;
    q.max_subdivisions = 2;
    EXPECT_THROW(eval_point_pv(fields::cosine({30.0, 0.0}), {0.1, 0.0}, params, q), AccuracyError);
}

TEST(QuadConfig, Validation) {
    QuadConfig q;
    q.delta = 0.0;
    EXPECT_THROW(q.validate(), ParameterError);
    q = QuadConfig{};
    q.r_far = q.delta;
    EXPECT_THROW(q.validate(), ParameterError);
    q = QuadConfig{};
    q.tol = 0.0;
    EXPECT_THROW(q.validate(), ParameterError);
}

TEST(TailWeight, ClosedForm) {
    const FracParams p1(1, 1.0);
    EXPECT_NEAR(tail_weight(1.0, p1), 2.0 / std::numbers::pi, 1e-15);
    EXPECT_NEAR(tail_weight(2.0, p1), 1.0 / std::numbers::pi, 1e-15);
    EXPECT_NEAR(tail_weight(1.0, FracParams(1, 0.5)), 4.0 * oracle::c_norm_1_05, 1e-14);
    EXPECT_THROW(tail_weight(0.0, p1), ParameterError);
}

TEST(ScalingPushforward, IdentityAndDefinition) {
    const FieldFn c = fields::cosine({1.0, 0.0});
    const FieldFn same = scaling_pushforward(c, 1.0);
    const FieldFn twice = scaling_pushforward(c, 2.0);
    for (double x : {-1.3, 0.0, 0.4, 2.2}) {
        EXPECT_EQ(same({x, 0.0}), c({x, 0.0}));
        EXPECT_DOUBLE_EQ(twice({x, 0.0}), std::cos(2.0 * x));
    }
    EXPECT_THROW(scaling_pushforward(c, 0.0), ParameterError);
}

TEST(ScalingPushforward, OperatorIdentity) {
    for (double alpha : {0.5, 1.0, 1.5}) {
        const FracParams params(1, alpha);
        for (const FieldFn& u : {fields::gaussian(1.0), fields::lorentzian()})
            for (double lambda : {0.5, 2.0, 10.0})
                for (double x : {0.0, 0.13}) {
                    const double lhs = eval_point_pv(scaling_pushforward(u, lambda), {x, 0.0}, params, tight()).value;
                    const double rhs = std::pow(lambda, alpha) * eval_point_pv(u, {lambda * x, 0.0}, params, tight()).value;
                    EXPECT_NEAR(lhs, rhs, 1e-4 * std::abs(rhs)) << alpha << " " << lambda << " " << x;
                }
    }
    const FracParams params(1, 0.7);
    const double v = eval_point_pv(scaling_pushforward(fields::cosine({1.0, 0.0}), 2.0), {0.1, 0.0}, params, tight()).value;
    EXPECT_NEAR(v, std::pow(2.0, 0.7) * std::cos(0.2), 1e-6);
}

TEST(AssembleDiscrete, StructureIn1D) {
    for (double alpha : {0.3, 1.0, 1.7}) {
        const FracParams params(1, alpha);
        const Grid g(1, 0.02, 1.0);
        const DiscreteOperator a = assemble_discrete(g, params);
        const Eigen::MatrixXd& m = a.matrix();
        std::mt19937 rng(3);
        std::uniform_int_distribution<Eigen::Index> pick(0, m.rows() - 1);
        for (int t = 0; t < 20; ++t) {
            const Eigen::Index i = pick(rng), j = pick(rng);
            EXPECT_EQ(m(i, j), m(j, i));
        }
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            EXPECT_GT(m(i, i), 0.0);
            double off = 0.0;
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                if (j != i) {
                    EXPECT_LE(m(i, j), 0.0);
                    off += std::abs(m(i, j));
                }
            EXPECT_GT(m(i, i), off);
        }
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.rows());
        const Eigen::VectorXd row = m * ones;
        for (std::size_t k = 0; k < a.nodes().size(); ++k) {
            const double x = g.coordinate(a.nodes()[k]).x;
            // exterior mass seen from x: one half-line on each side
            const double outside = 0.5 * (tail_weight(g.extent() - x, params) + tail_weight(g.extent() + x, params));
            EXPECT_GE(row(static_cast<Eigen::Index>(k)), outside);
        }
    }
}

TEST(AssembleDiscrete, StructureIn2D) {
    const FracParams params(2, 1.2);
    const Grid g(2, 0.1, 1.0);
    const DiscreteOperator op = assemble_discrete(g, params);
    const Eigen::MatrixXd& m = op.matrix();
    EXPECT_EQ(m.rows(), 19 * 19);
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12 * m.diagonal().maxCoeff());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double off = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (j != i) {
                EXPECT_LE(m(i, j), 0.0);
                off -= m(i, j);
            }
        EXPECT_GT(m(i, i), off);
    }
}

TEST(AssembleDiscrete, RejectsDegenerateGrids) {
    EXPECT_THROW(assemble_discrete(Grid(1, 1.0, 1.0), FracParams(1, 1.0)), ParameterError);
    EXPECT_THROW(assemble_discrete(Grid(2, 0.1, 1.0), FracParams(1, 1.0)), ParameterError);
}

TEST(AssembleDiscrete, Psi1WithinOnePercentOfKappa) {
    const FracParams params(1, 1.0);
    const Grid g(1, 1.0 / 200.0, 2.0);
    const GridFunction u = GridFunction::sample(g, psi1_field({0.0, 0.0}, params));
    const GridFunction au = assemble_discrete(g, params).apply(u);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double x = g.coordinate(k).x;
        if (std::abs(x) > 0.9) continue;
        EXPECT_NEAR(au[k] / params.c_norm(), oracle::kappa_1_1, 0.01) << x;
    }
}

TEST(AssembleDiscrete, ConsistencyOrderOnSmoothCompactField) {
    for (double alpha : {0.5, 1.0, 1.5}) {
        const FracParams params(1, alpha);
        const FieldFn u = fields::smooth_bump(0.6);
        const Point x{0.2, 0.0};
        const double exact = eval_point_pv(u, x, params, tight()).value;
        std::vector<double> err;
        for (double h : {1.0 / 40, 1.0 / 80, 1.0 / 160}) {
            const Grid g(1, h, 1.0);
            const GridFunction au = assemble_discrete(g, params).apply(GridFunction::sample(g, u));
            err.push_back(std::abs(au[g.index(x)] - exact));
        }
        EXPECT_GE(std::log2(err[0] / err[1]), 1.5) << alpha;
        EXPECT_GE(std::log2(err[1] / err[2]), 1.5) << alpha;
    }
}

TEST(AssembleDiscrete, FftProductMatchesDenseMatrix) {
    const FracParams params(1, 0.8);
    const Grid g(1, 1.0 / 1300.0, 1.0);
    const DiscreteOperator a = assemble_discrete(g, params);
    ASSERT_TRUE(a.iterative());
    std::mt19937 rng(11);
    std::normal_distribution<double> nd;
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.rows()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
    const Eigen::VectorXd fast = a.multiply(v);
    const Eigen::VectorXd dense = a.matrix() * v;
    EXPECT_LT((fast - dense).lpNorm<Eigen::Infinity>(), 1e-11 * dense.lpNorm<Eigen::Infinity>());
}

TEST(DiscreteOperator, RestrictionIsPrincipalSubmatrix) {
    const FracParams params(1, 1.0);
    const Grid g(1, 0.1, 1.0);
    const DiscreteOperator a = assemble_discrete(g, params);
    std::vector<std::size_t> sub{a.nodes()[2], a.nodes()[5], a.nodes()[6]};
    const DiscreteOperator r = a.restrict_to(sub);
    EXPECT_EQ(r.matrix()(0, 1), a.matrix()(2, 5));
    EXPECT_EQ(r.matrix()(2, 2), a.matrix()(6, 6));
    EXPECT_THROW(a.restrict_to(std::vector<std::size_t>{0}), ParameterError);
}
