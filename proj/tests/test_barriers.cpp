#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fraclap/barriers.hpp"
#include "oracles.hpp"

using namespace fraclap;

TEST(Psi1, ClosedFormValues) {
    const FracParams p1(1, 1.0);
    EXPECT_EQ(psi1({1.0, 0.0}, {0.0, 0.0}, p1), 0.0);
    EXPECT_EQ(psi1({3.5, 0.0}, {2.0, 0.0}, p1), 0.0);
    EXPECT_DOUBLE_EQ(psi1({0.3, 0.0}, {0.3, 0.0}, p1), oracle::c_norm_1_1);
    EXPECT_NEAR(psi1({0.6, 0.0}, {0.0, 0.0}, p1), 0.8 * oracle::c_norm_1_1, 1e-15);
    const FracParams p2(2, 1.0);
    EXPECT_DOUBLE_EQ(psi1({0.0, 0.0}, {0.0, 0.0}, p2), oracle::c_norm_2_1);
}

TEST(Psi1, ContinuousAcrossTheUnitSphere) {
    const FracParams p(1, 0.5);
    EXPECT_NEAR(psi1({1.0 - 1e-12, 0.0}, {}, p), p.c_norm() * std::pow(2e-12, 0.25), 1e-3 * p.c_norm() * std::pow(2e-12, 0.25));
    for (int i = 0; i <= 100; ++i) EXPECT_LE(psi1({-1.0 + 0.02 * i, 0.0}, {}, p), p.c_norm());
}

TEST(Kelvin, FixesTheUnitSphere) {
    const FracParams p(2, 1.2);
    const FieldFn f = fields::gaussian();
    const FieldFn kf = kelvin_transform(f, p);
    for (int i = 0; i < 16; ++i) {
        const double th = 0.4 * i;
        const Point x{std::cos(th), std::sin(th)};
        EXPECT_NEAR(kf(x), f(x), 1e-15);
    }
}

TEST(Kelvin, IsAnInvolution) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int n : {1, 2}) {
        const FracParams p(n, 0.7);
        const FieldFn f = fields::lorentzian();
        const FieldFn kkf = kelvin_transform(kelvin_transform(f, p), p);
        for (int i = 0; i < 20; ++i) {
            Point x{u(rng), n == 2 ? u(rng) : 0.0};
            if (norm(x) < 1e-3) x.x += 1.0;
            EXPECT_NEAR(kkf(x), f(x), 1e-12 * std::abs(f(x))) << x.x << "," << x.y;
        }
    }
}

TEST(Kelvin, UndefinedAtTheOrigin) {
    const FieldFn kf = kelvin_transform(fields::constant(1.0), FracParams(1, 0.5));
    EXPECT_THROW(kf({0.0, 0.0}), DomainError);
}

TEST(Kelvin, Psi1ExampleValue) {
    const FracParams p(1, 0.5);
    EXPECT_NEAR(psi2_field(p)({2.0, 0.0}), oracle::kelvin_example, 1e-15);
    EXPECT_EQ(psi2_field(p)({0.9, 0.0}), 0.0);
}

TEST(Psi2Identity, MatchesKappaAtStandardProbes) {
    std::vector<Point> probes;
    for (double r : {1.2, 1.5, 2.0, 2.5, 3.0}) probes.push_back({r, 0.0});
    const double kappa[] = {oracle::kappa_1_05, oracle::kappa_1_1, oracle::kappa_1_15};
    int i = 0;
    for (double alpha : {0.5, 1.0, 1.5}) {
        const FracParams p(1, alpha);
        const Psi2Report rep = verify_psi2_identity(p, probes);
        ASSERT_EQ(rep.probes.size(), probes.size());
        EXPECT_LE(rep.worst, 1e-3) << alpha;
        for (const Psi2Probe& pr : rep.probes) {
            EXPECT_NEAR(pr.rhs, kappa[i] * std::pow(pr.x.x, -1.0 - alpha), 1e-14);
            EXPECT_LE(pr.rel_err, 1e-3) << alpha << " " << pr.x.x;
        }
        ++i;
    }
}

TEST(Psi2Identity, UnitOrderExamples) {
    const FracParams p(1, 1.0);
    const std::vector<Point> probes{{2.0, 0.0}, {-1.2, 0.0}};
    const Psi2Report rep = verify_psi2_identity(p, probes);
    EXPECT_NEAR(rep.probes[0].lhs, 0.25, 2.5e-4);
    EXPECT_NEAR(rep.probes[1].lhs, 1.0 / 1.44, 1e-3 / 1.44);
}

TEST(Psi2Identity, TwoDimensions) {
    const FracParams p(2, 1.0);
    const std::vector<Point> probes{{1.5, 0.0}, {1.2, 1.2}};
    const Psi2Report rep = verify_psi2_identity(p, probes);
    const double kappa = 2.0 * std::tgamma(1.5) * std::tgamma(1.5);
    EXPECT_NEAR(rep.probes[0].rhs, kappa * std::pow(1.5, -3.0), 1e-14);
    EXPECT_LE(rep.worst, 1e-3);
}

TEST(Psi2Identity, EdgeCases) {
    const FracParams p(1, 1.0);
    EXPECT_TRUE(verify_psi2_identity(p, std::vector<Point>{}).probes.empty());
    EXPECT_THROW(verify_psi2_identity(p, std::vector<Point>{{1.0, 0.0}}), ParameterError);
    EXPECT_THROW(verify_psi2_identity(p, std::vector<Point>{{0.3, 0.0}}), ParameterError);
}

TEST(SmoothCutoff, ValuesAndMonotonicity) {
    EXPECT_EQ(smooth_cutoff({0.5, 0.0}), 0.0);
    EXPECT_EQ(smooth_cutoff({1.0, 0.0}), 0.0);
    EXPECT_EQ(smooth_cutoff({4.0, 0.0}), 1.0);
    EXPECT_EQ(smooth_cutoff({0.0, -3.0}), 1.0);
    const double mid = smooth_cutoff({2.0, 0.0});
    EXPECT_GT(mid, 0.0);
    EXPECT_LT(mid, 1.0);
    EXPECT_NEAR(mid, 0.5, 1e-15);
    double prev = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double v = smooth_cutoff({1.0 + 0.005 * i, 0.0});
        EXPECT_GE(v, prev);
        EXPECT_LE(v, 1.0);
        prev = v;
    }
}

namespace {

const BarrierSpec& half_order_barrier() {
    static const BarrierSpec spec = composite_barrier({1.0, 0.0}, FracParams(1, 0.5));
    return spec;
}

}  // namespace

TEST(CompositeBarrier, VerifiesOnTheLattice) {
    const BarrierSpec& spec = half_order_barrier();
    EXPECT_NEAR(norm(spec.z - spec.touch), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(spec.z.x, 2.0);
    EXPECT_GT(spec.k, 0.0);
    EXPECT_GE(spec.min_verified, 1.0);
    // independent sweep on a lattice offset from the construction lattice
    for (int i = 0; i < 50; ++i) {
        const double r = 1.0 + 2.0 * (i + 0.25) / 50.0;
        for (double side : {-1.0, 1.0}) {
            const Point x{spec.z.x + side * r, 0.0};
            EXPECT_GE(eval_point_pv(spec.phi, x, spec.params, QuadConfig{}).value, 1.0) << x.x;
        }
    }
}

TEST(CompositeBarrier, ShapeOfPhi) {
    const BarrierSpec& spec = half_order_barrier();
    const FieldFn psi2 = translate(psi2_field(spec.params), spec.z);
    for (double t : {1.0, 1.05, 1.2, 2.0}) {
        const Point x{spec.z.x - t, 0.0};
        EXPECT_NEAR(spec(x), spec.k * psi2(x) + smooth_cutoff(x - spec.z), 1e-14 * spec.k);
        if (t <= 1.05) {
            EXPECT_NEAR(spec(x), spec.k * psi2(x), 1e-14 * spec.k);
        }
    }
    for (int i = 0; i <= 200; ++i) {
        const Point x{spec.z.x - 10.0 + 0.1 * i, 0.0};
        EXPECT_GE(spec(x), 0.0);
        if (norm(x - spec.z) >= 3.0) {
            EXPECT_GE(spec(x), 1.0);
        }
    }
    EXPECT_EQ(spec(spec.z), 0.0);
    // bounded far away
    EXPECT_LT(spec({1e6, 0.0}), 1.0 + spec.k * psi2({1e3, 0.0}));
}

TEST(CompositeBarrier, RejectsBadPlacement) {
    const FracParams p(1, 0.5);
    EXPECT_THROW(composite_barrier({std::nan(""), 0.0}, p), ParameterError);
    EXPECT_THROW(composite_barrier({0.0, 0.0}, p), ParameterError);
    EXPECT_THROW(composite_barrier({1.0, 0.0}, {0.0, 0.0}, p), ParameterError);
}

TEST(HolderBound, ExamplesAndMonotonicity) {
    const BarrierSpec& spec = half_order_barrier();
    const Point t = spec.touch;
    EXPECT_EQ(holder_halfpower_bound(t, spec), 0.0);
    EXPECT_NEAR(holder_halfpower_bound({t.x - 0.04, 0.0}, spec), spec.holder_constant * std::pow(0.04, 0.25), 1e-14 * spec.holder_constant);
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double b = holder_halfpower_bound({t.x - 0.02 * i, 0.0}, spec);
        EXPECT_GT(b, prev);
        prev = b;
    }
    EXPECT_THROW(holder_halfpower_bound({spec.z.x, 0.0}, spec), ParameterError);
    EXPECT_THROW(holder_halfpower_bound({spec.z.x + 3.5, 0.0}, spec), ParameterError);

    const FracParams p1(1, 1.0);
    BarrierSpec unit;
    unit.params = p1;
    unit.z = {2.0, 0.0};
    unit.touch = {1.0, 0.0};
    unit.holder_constant = 3.0;
    EXPECT_NEAR(holder_halfpower_bound({0.96, 0.0}, unit), 3.0 * 0.2, 1e-15);
}

TEST(HolderBound, BoundsBarrierIncrements) {
    for (double alpha : {0.5, 1.0, 1.5}) {
        const FracParams p(1, alpha);
        const FieldFn psi2 = psi2_field(p);
        const double c = psi2_halfpower_constant(p);
        for (int i = 0; i <= 400; ++i) {
            const double r = 1.0 + 2.0 * i / 400.0;
            EXPECT_LE(psi2({r, 0.0}) - psi2({1.0, 0.0}), c * std::pow(r - 1.0, 0.5 * alpha) * (1.0 + 1e-12)) << r;
        }
    }
    const BarrierSpec& spec = half_order_barrier();
    for (int i = 0; i <= 400; ++i) {
        const Point x{spec.touch.x - 2.0 * i / 400.0, 0.0};
        EXPECT_LE(spec(x) - spec(spec.touch), holder_halfpower_bound(x, spec) * (1.0 + 1e-12)) << x.x;
    }
}
