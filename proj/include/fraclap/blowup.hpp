#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <math.h>

#include <boost/math/interpolators/pchip.hpp>

#include "errors.hpp"
#include "barriers.hpp"
#include "grid.hpp"
#include "operator.hpp"
#include "params.hpp"
#include "solver.hpp"

namespace fraclap {

enum class BlowupCase { case_i, case_ii, case_iii, inconclusive };

inline std::string to_string(BlowupCase c) {
    switch (c) {
        case BlowupCase::case_i: return "case_i";
        case BlowupCase::case_ii: return "case_ii";
        case BlowupCase::case_iii: return "case_iii";
        case BlowupCase::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

/// lambda = m^{(1-p)/alpha}
inline double rescaling_length(double m, double p, double alpha) {
    if (!(m > 0.0)) throw ParameterError("maximum must be positive");
    return std::pow(m, (1.0 - p) / alpha);
}

/// Last-three-terms rule on r_k = d_k / lambda_k.
inline BlowupCase classify_case(std::span<const double> r) {
    if (r.size() < 3) throw ParameterError("classification needs at least 3 ratios");
    const double a = r[r.size() - 3], b = r[r.size() - 2], c = r[r.size() - 1];
    if (a > 10.0 && b > 10.0 && c > 10.0 && a < b && b < c) return BlowupCase::case_i;
    if (a < 0.1 && b < 0.1 && c < 0.1 && a > b && b > c) return BlowupCase::case_iii;
    const double mean = (a + b + c) / 3.0;
    if (mean >= 0.1 && mean <= 10.0 && std::abs(a - mean) <= 0.2 * mean && std::abs(b - mean) <= 0.2 * mean &&
        std::abs(c - mean) <= 0.2 * mean)
        return BlowupCase::case_ii;
    return BlowupCase::inconclusive;
}

struct BlowupSequence {
    std::vector<SolutionRecord> records;
    std::vector<double> lambdas;
    std::vector<double> ratios;
    BlowupCase classification = BlowupCase::inconclusive;
    bool aborted = false;
    std::string failure;
};

/// Continuation along the schedule, then lambda_k, r_k and the classification.
inline BlowupSequence run_sequence(const DomainSpec& domain, std::span<const double> schedule,
                                   const DiscreteOperator& a, const FracParams& params, SolveConfig cfg = {}) {
    ContinuationResult run = continuation_run(domain, schedule, a, params, std::move(cfg));
    BlowupSequence seq;
    seq.aborted = run.aborted;
    seq.failure = run.failure;
    seq.records = std::move(run.records);
    for (const SolutionRecord& rec : seq.records) {
        const double lambda = rescaling_length(rec.m, rec.p, params.alpha());
        seq.lambdas.push_back(lambda);
        seq.ratios.push_back(rec.d / lambda);
    }
    if (seq.ratios.size() >= 3) seq.classification = classify_case(seq.ratios);
    return seq;
}

inline BlowupSequence run_sequence(const DomainSpec& domain, std::span<const double> schedule, const Grid& grid,
                                   const FracParams& params, SolveConfig cfg = {}) {
    return run_sequence(domain, schedule, domain_operator(domain, grid, params), params, std::move(cfg));
}

/// v(x) = u(lambda x + x*) / m on a frame grid.
struct RescaledProfile {
    GridFunction v;
    DomainSpec omega;      ///< the rescaled domain (y - x*) / lambda
    std::size_t source = 0;
    double lambda = 0.0;
    double m = 0.0;
    double p = 0.0;
    double source_residual = 0.0;
};

namespace detail {

inline DomainSpec rescaled_domain(const DomainSpec& d, Point x_star, double lambda) {
    switch (d.shape) {
        case DomainSpec::Shape::interval:
            return DomainSpec::interval((d.a - x_star.x) / lambda, (d.b - x_star.x) / lambda);
        case DomainSpec::Shape::square:
            return DomainSpec::square((1.0 / lambda) * (d.center - x_star), d.half_width / lambda);
        case DomainSpec::Shape::disc: return DomainSpec::disc((1.0 / lambda) * (d.center - x_star), d.half_width / lambda);
    }
    return d;
}

}  // namespace detail

/// Largest origin-centered frame with the given spacing whose image lies in the solution grid.
/// It covers the rescaled domain whenever the grid covers the domain.
inline Grid covering_frame(const SolutionRecord& rec, const FracParams& params, double spacing) {
    if (!(spacing > 0.0)) throw ParameterError("frame spacing must be positive");
    const double lambda = rescaling_length(rec.m, rec.p, params.alpha());
    const Grid& g = rec.u.grid();
    const double room = g.extent() - std::max(std::abs(rec.x_star.x), std::abs(rec.x_star.y));
    const double cells = std::floor(room / (lambda * spacing) * (1.0 + 1e-12));
    if (cells < 1.0) throw ParameterError("frame spacing exceeds the rescaled grid extent");
    return Grid(g.dim(), spacing, cells * spacing);
}

inline RescaledProfile rescale_profile(const SolutionRecord& rec, const DomainSpec& domain, const FracParams& params,
                                       const Grid& frame, std::size_t source = 0) {
    const Grid& g = rec.u.grid();
    if (frame.dim() != g.dim()) throw ParameterError("frame and solution dimensions differ");
    if (!(rec.m > 0.0)) throw ParameterError("record has no positive maximum");
    const double lambda = rescaling_length(rec.m, rec.p, params.alpha());
    const DomainSpec omega = detail::rescaled_domain(domain, rec.x_star, lambda);
    auto source_point = [&](Point x) { return Point{lambda * x.x + rec.x_star.x, lambda * x.y + rec.x_star.y}; };

    const double reach = frame.extent() * lambda;
    const double slack = 1e-9 * g.h();
    if (std::abs(rec.x_star.x) + reach > g.extent() + slack ||
        (g.dim() == 2 && std::abs(rec.x_star.y) + reach > g.extent() + slack))
        throw ParameterError("frame extends beyond the interpolable data of the solution grid");

    GridFunction v(frame);
    const double h = g.h();
    if (g.dim() == 1) {
        const long lo = std::max(-g.half_count(), static_cast<long>(std::floor((rec.x_star.x - reach) / h)) - 2);
        const long hi = std::min(g.half_count(), static_cast<long>(std::ceil((rec.x_star.x + reach) / h)) + 2);
        std::vector<double> xs, ys;
        xs.reserve(static_cast<std::size_t>(hi - lo + 1));
        ys.reserve(xs.capacity());
        for (long i = lo; i <= hi; ++i) {
            xs.push_back(static_cast<double>(i) * h);
            ys.push_back(rec.u[g.linear(i)]);
        }
        boost::math::interpolators::pchip<std::vector<double>> spline(std::move(xs), std::move(ys));
        for (std::size_t k = 0; k < frame.size(); ++k) {
            const Point x = frame.coordinate(k);
            if (!omega.contains(x)) continue;
            const double y = source_point(x).x;
            const double s = y / h;
            const double node = std::round(s);
            const double val = std::abs(s - node) <= 1e-9 ? rec.u[g.linear(static_cast<long>(node))] : spline(y);
            v[k] = val / rec.m;
        }
    } else {
        for (std::size_t k = 0; k < frame.size(); ++k) {
            const Point x = frame.coordinate(k);
            if (omega.contains(x)) v[k] = rec.u.at(source_point(x)) / rec.m;
        }
    }
    v[frame.index({0.0, 0.0})] = 1.0;
    for (double& val : v.values()) {
        if (val > 1.0 + 1e-9) throw NumericalError("rescaled profile exceeds 1 beyond the interpolation tolerance");
        val = std::clamp(val, 0.0, 1.0);
    }
    return RescaledProfile{std::move(v), omega, source, lambda, rec.m, rec.p, rec.residual_norm};
}

/// max over frame nodes in the rescaled domain of |A v - v^p|.
inline double rescaled_residual(const RescaledProfile& prof, const FracParams& params) {
    const DiscreteOperator a = domain_operator(prof.omega, prof.v.grid(), params);
    const Eigen::VectorXd v = a.gather(prof.v);
    return (a.multiply(v) - detail::positive_power(v, prof.p)).lpNorm<Eigen::Infinity>();
}

/// 10 * residual / m^p of the source solve plus the interpolation allowance 1e-3 m.
inline double rescaled_residual_budget(const RescaledProfile& prof) {
    return 10.0 * prof.source_residual / std::pow(prof.m, prof.p) + 1e-3 * prof.m;
}

/// A v on the profile's own frame, zero off the rescaled domain.
inline GridFunction rescaled_operator(const RescaledProfile& prof, const FracParams& params) {
    return domain_operator(prof.omega, prof.v.grid(), params).apply(prof.v);
}

struct ConvergenceReport {
    std::vector<double> value_diffs;     ///< sup |v_{k+1} - v_k| over common nodes
    std::vector<double> operator_diffs;  ///< sup |A v_{k+1} - A v_k| over common nodes
};

inline ConvergenceReport convergence_metric(std::span<const RescaledProfile> profiles, const FracParams& params) {
    if (profiles.size() < 2) throw ParameterError("convergence metric needs at least 2 profiles");
    const double hf = profiles.front().v.grid().h();
    const int dim = profiles.front().v.grid().dim();
    for (const RescaledProfile& p : profiles)
        if (p.v.grid().h() != hf || p.v.grid().dim() != dim) throw ParameterError("profiles use different frames");
    std::vector<GridFunction> ops;
    ops.reserve(profiles.size());
    for (const RescaledProfile& p : profiles) ops.push_back(rescaled_operator(p, params));

    ConvergenceReport out;
    for (std::size_t k = 0; k + 1 < profiles.size(); ++k) {
        const Grid& g0 = profiles[k].v.grid();
        const Grid& g1 = profiles[k + 1].v.grid();
        const long n = std::min(g0.half_count(), g1.half_count());
        if (n < 1) throw ParameterError("profiles have no common frame nodes");
        double dv = 0.0, dw = 0.0;
        const long jn = dim == 2 ? n : 0;
        for (long j = -jn; j <= jn; ++j)
            for (long i = -n; i <= n; ++i) {
                const std::size_t a = g0.linear(i, j), b = g1.linear(i, j);
                dv = std::max(dv, std::abs(profiles[k + 1].v[b] - profiles[k].v[a]));
                dw = std::max(dw, std::abs(ops[k + 1][b] - ops[k][a]));
            }
        out.value_diffs.push_back(dv);
        out.operator_diffs.push_back(dw);
    }
    return out;
}

struct HolderReport {
    double sigma = 0.0;
    double seminorm = 0.0;
    double ratio = 0.0;  ///< seminorm / (|u|_inf + |w|_inf)
};

/// Discrete C^{0,sigma} seminorm over node pairs at distance at most 1.
inline HolderReport holder_seminorm(const GridFunction& u, double sigma, const GridFunction& w,
                                    const FracParams& params) {
    if (!(sigma > 0.0) || !(sigma < std::min(params.alpha(), 1.0)))
        throw ParameterError("Hoelder exponent must lie in (0, min(alpha, 1))");
    if (!(u.grid() == w.grid())) throw ParameterError("u and w live on different grids");
    const Grid& g = u.grid();
    const double h = g.h();
    const long reach = std::min(static_cast<long>(std::floor(1.0 / h + 1e-9)), 2 * g.half_count());
    std::vector<double> weight(static_cast<std::size_t>(reach + 1));
    double semi = 0.0;
    if (g.dim() == 1) {
        for (long s = 1; s <= reach; ++s) weight[static_cast<std::size_t>(s)] = std::pow(static_cast<double>(s) * h, -sigma);
        const long n = g.half_count();
        for (long i = -n; i <= n; ++i) {
            const double ui = u[g.linear(i)];
            const long top = std::min(n, i + reach);
            for (long j = i + 1; j <= top; ++j)
                semi = std::max(semi, std::abs(u[g.linear(j)] - ui) * weight[static_cast<std::size_t>(j - i)]);
        }
    } else {
        const long n = g.half_count();
        for (long j0 = -n; j0 <= n; ++j0)
            for (long i0 = -n; i0 <= n; ++i0) {
                const double u0 = u[g.linear(i0, j0)];
                for (long dj = 0; dj <= reach && j0 + dj <= n; ++dj)
                    for (long di = (dj == 0 ? 1 : -reach); di <= reach; ++di) {
                        const long i1 = i0 + di, j1 = j0 + dj;
                        if (i1 < -n || i1 > n) continue;
                        const double dist = h * std::hypot(static_cast<double>(di), static_cast<double>(dj));
                        if (dist > 1.0 + 1e-12) continue;
                        semi = std::max(semi, std::abs(u[g.linear(i1, j1)] - u0) * std::pow(dist, -sigma));
                    }
            }
    }
    HolderReport rep{sigma, semi, 0.0};
    const double denom = u.max_abs() + w.max_abs();
    rep.ratio = denom > 0.0 ? semi / denom : 0.0;
    return rep;
}

struct ExponentFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  ///< rms misfit of the log-log regression
    std::size_t nodes = 0;
};

/// Least-squares slope of log u against log d over nodes with d in [2h, 0.1 diam].
inline ExponentFit boundary_exponent_fit(const GridFunction& u, const DomainSpec& domain) {
    const Grid& g = u.grid();
    const double lo = 2.0 * g.h() * (1.0 - 1e-9), hi = 0.1 * domain.diameter() * (1.0 + 1e-9);
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double d = domain.distance(g.coordinate(k));
        if (d < lo || d > hi) continue;
        if (!(u[k] > 0.0)) throw DomainError("solution is not positive in the fit window (log of zero)");
        xs.push_back(std::log(d));
        ys.push_back(std::log(u[k]));
    }
    if (xs.size() < 5) throw ParameterError("fewer than 5 nodes in the boundary fit window");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw NumericalError("degenerate boundary fit window");
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - fit.intercept - fit.slope * xs[i];
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    fit.nodes = xs.size();
    return fit;
}

/// Comparison data in the rescaled frame of a maximizer at distance `gap` from the boundary,
/// Omega = (-gap, length). upper = phi, the composite barrier touching at -gap from outside;
/// lower = T / max T with T the discrete torsion function of Omega, so A lower <= 1 in Omega.
/// region = the annulus nodes 1 < |x - z| < 3 inside Omega. The operator acts on every
/// interior node of a grid that holds B3(z) and Omega.
struct ComparisonFixture {
    BarrierSpec barrier;
    DiscreteOperator op;
    GridFunction upper;
    GridFunction lower;
    std::vector<std::size_t> region;
    std::vector<double> ratios;  ///< a decaying d_k / lambda_k sequence
    double slack = 0.0;
};

inline ComparisonFixture case_iii_fixture(const FracParams& params, double h = 1.0 / 100.0, double gap = 0.05,
                                          double length = 4.0, const BarrierConfig& cfg = {}) {
    if (params.n() != 1) throw ParameterError("the comparison fixture is one-dimensional");
    if (!(gap > 2.0 * h) || !(length > 1.0)) throw ParameterError("fixture gap must exceed 2h and length 1");
    BarrierSpec barrier = composite_barrier({-gap, 0.0}, {-1.0, 0.0}, params, cfg);
    const double reach = std::max(length, std::abs(barrier.z.x) + 3.0) + 1.0;
    const Grid g(1, h, std::ceil(reach / h) * h);
    const DomainSpec omega = DomainSpec::interval(-gap, length);

    const DiscreteOperator inner = domain_operator(omega, g, params);
    const Eigen::VectorXd torsion = detail::solve_spd(inner, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(inner.rows())));
    GridFunction lower = inner.scatter(torsion / torsion.maxCoeff());

    GridFunction upper(g);
    for (std::size_t k = 0; k < g.size(); ++k) upper[k] = barrier(g.coordinate(k));

    DiscreteOperator op = assemble_discrete(g, params).restrict_to(g.interior_nodes());
    std::vector<std::size_t> region;
    for (std::size_t node : inner.nodes()) {
        const double r = std::abs(g.coordinate(node).x - barrier.z.x);
        if (r > 1.0 && r < 3.0) region.push_back(node);
    }
    return ComparisonFixture{std::move(barrier),  std::move(op), std::move(upper), std::move(lower),
                             std::move(region), {0.5, 0.08, 0.01, 0.002}, 1e-10};
}

}  // namespace fraclap
