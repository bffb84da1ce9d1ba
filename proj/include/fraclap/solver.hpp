#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <unsupported/Eigen/IterativeSolvers>

#include "errors.hpp"
#include "grid.hpp"
#include "operator.hpp"
#include "params.hpp"

namespace fraclap {

/// Bounded domain: an interval (n=1), or an axis-aligned square or a disc centered at `center` (n=2).
struct DomainSpec {
    enum class Shape { interval, square, disc };

    Shape shape = Shape::interval;
    double a = -1.0, b = 1.0;  ///< interval end points
    Point center{};
    double half_width = 1.0;   ///< square half side or disc radius

    static DomainSpec interval(double a, double b) {
        if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw ParameterError("interval needs a < b");
        DomainSpec d;
        d.shape = Shape::interval;
        d.a = a;
        d.b = b;
        return d;
    }
    static DomainSpec square(Point center, double half_width) {
        if (!(half_width > 0.0)) throw ParameterError("square needs a positive half width");
        return DomainSpec{Shape::square, 0.0, 0.0, center, half_width};
    }
    static DomainSpec disc(Point center, double radius) {
        if (!(radius > 0.0)) throw ParameterError("disc needs a positive radius");
        return DomainSpec{Shape::disc, 0.0, 0.0, center, radius};
    }

    int dim() const noexcept { return shape == Shape::interval ? 1 : 2; }

    /// Distance to the complement; positive exactly on the open domain.
    double distance(Point x) const {
        switch (shape) {
            case Shape::interval: return std::max(0.0, std::min(x.x - a, b - x.x));
            case Shape::square:
                return std::max(0.0, std::min(half_width - std::abs(x.x - center.x), half_width - std::abs(x.y - center.y)));
            case Shape::disc: return std::max(0.0, half_width - norm(x - center));
        }
        return 0.0;
    }

    bool contains(Point x) const { return distance(x) > 0.0; }

    double diameter() const noexcept {
        switch (shape) {
            case Shape::interval: return b - a;
            case Shape::square: return 2.0 * std::sqrt(2.0) * half_width;
            case Shape::disc: return 2.0 * half_width;
        }
        return 0.0;
    }

    /// Largest coordinate magnitude of the closure.
    double reach() const noexcept {
        if (shape == Shape::interval) return std::max(std::abs(a), std::abs(b));
        return std::max(std::abs(center.x), std::abs(center.y)) + half_width;
    }

    /// The ball-shaped comparison profile (1 - (|x-c|/rho)^2)_+^{alpha/2} of the inscribed ball.
    double torsion_profile(Point x, double alpha) const {
        Point c = center;
        double rho = half_width;
        if (shape == Shape::interval) {
            c = {0.5 * (a + b), 0.0};
            rho = 0.5 * (b - a);
            x.y = 0.0;
        }
        const double t = 1.0 - norm2(x - c) / (rho * rho);
        return t > 0.0 ? std::pow(t, 0.5 * alpha) : 0.0;
    }
};

/// Smallest origin-centered grid with spacing h covering the domain.
inline Grid domain_grid(const DomainSpec& domain, double h) {
    if (!(h > 0.0)) throw ParameterError("grid spacing must be positive");
    const double cells = std::ceil(domain.reach() / h - 1e-9);
    return Grid(domain.dim(), h, cells * h);
}

/// Grid nodes inside the open domain, in increasing linear index.
inline std::vector<std::size_t> domain_nodes(const DomainSpec& domain, const Grid& grid) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid.is_interior(k) && domain.contains(grid.coordinate(k))) out.push_back(k);
    return out;
}

/// assemble_discrete restricted to the nodes of the domain.
inline DiscreteOperator domain_operator(const DomainSpec& domain, const Grid& grid, const FracParams& params) {
    if (domain.dim() != grid.dim()) throw ParameterError("domain and grid dimensions differ");
    const std::vector<std::size_t> nodes = domain_nodes(domain, grid);
    if (nodes.size() < 3) throw ParameterError("degenerate grid: fewer than 3 nodes inside the domain");
    return assemble_discrete(grid, params).restrict_to(nodes);
}

struct SolveConfig {
    double p = 2.0;
    double newton_tol = 1e-10;
    int max_iters = 100;
    int max_halvings = 30;
    std::vector<double> continuation;
    double max_step = 0.05;    ///< largest p increment between solves inside continuation_run
    double min_step = 1e-4;


    void validate(const FracParams& params) const {
        const double pc = critical_exponent(params.n(), params.alpha());
        if (!(p > 1.0)) throw ParameterError("exponent must exceed 1, got p = " + std::to_string(p));
        if (!(p < pc))
            throw ParameterError("supercritical exponent p = " + std::to_string(p) + " (critical value " +
                                 std::to_string(pc) + ")");
        if (!(newton_tol > 0.0) || max_iters < 1 || max_halvings < 0)
            throw ParameterError("invalid Newton settings");
        if (!(min_step > 0.0) || !(max_step >= min_step)) throw ParameterError("invalid continuation step bounds");
    }
};

struct SolutionRecord {
    GridFunction u;
    double p = 0.0;
    double residual_norm = 0.0;
    double m = 0.0;
    Point x_star{};
    std::size_t x_star_index = 0;
    double d = 0.0;
    std::vector<double> history;  ///< residual max-norm per Newton iterate, starting with the initial guess
};

namespace detail {

inline Eigen::VectorXd positive_power(const Eigen::VectorXd& u, double p) {
    return u.unaryExpr([p](double v) { return v > 0.0 ? std::pow(v, p) : 0.0; });
}

struct CirculantPreconditioner {
    const ToeplitzOperator* t = nullptr;
    Eigen::VectorXd solve(const Eigen::VectorXd& r) const { return t->precondition(r); }
};

// T - diag(shift), applied matrix-free
struct ShiftedToeplitz {
    const ToeplitzOperator* t = nullptr;
    const Eigen::VectorXd* shift = nullptr;
    Eigen::Index cols() const noexcept { return t->size(); }
    Eigen::Index rows() const noexcept { return t->size(); }
    friend Eigen::VectorXd operator*(const ShiftedToeplitz& m, const Eigen::VectorXd& x) {
        Eigen::VectorXd y = m.t->apply(x);
        if (m.shift) y -= m.shift->cwiseProduct(x);
        return y;
    }
};

struct KrylovSettings {
    double tol = 1e-13;
    Eigen::Index max_iters = 4000;
};

/// Solves A x = b for the SPD operator: Cholesky, or preconditioned CG on Toeplitz operators.
inline Eigen::VectorXd solve_spd(const DiscreteOperator& a, const Eigen::VectorXd& b, KrylovSettings ks = {}) {
    if (!a.iterative()) {
        Eigen::LLT<Eigen::MatrixXd> llt(a.matrix());
        if (llt.info() != Eigen::Success) throw NumericalError("operator matrix is not positive definite");
        return llt.solve(b);
    }
    ShiftedToeplitz m{a.toeplitz(), nullptr};
    CirculantPreconditioner pc{a.toeplitz()};
    Eigen::VectorXd x = pc.solve(b);
    Eigen::Index iters = ks.max_iters;
    double err = ks.tol;
    Eigen::internal::conjugate_gradient(m, b, x, pc, iters, err);
    if (!(err <= 100.0 * ks.tol)) throw NumericalError("conjugate gradients did not converge");
    return x;
}

/// Solves (A - diag(shift)) x = b: LU, or preconditioned MINRES on Toeplitz operators.
inline Eigen::VectorXd solve_shifted(const DiscreteOperator& a, const Eigen::VectorXd& shift,
                                     const Eigen::VectorXd& b, KrylovSettings ks = {}) {
    if (!a.iterative()) {
        Eigen::MatrixXd jac = a.matrix();
        jac.diagonal() -= shift;
        return jac.partialPivLu().solve(b);
    }
    ShiftedToeplitz m{a.toeplitz(), &shift};
    CirculantPreconditioner pc{a.toeplitz()};
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::Index iters = ks.max_iters;
    double err = ks.tol;
    Eigen::internal::minres(m, b, x, pc, iters, err);
    return x;
}

inline double residual_norm(const DiscreteOperator& a, const Eigen::VectorXd& u, double p) {
    return (a.multiply(u) - positive_power(u, p)).lpNorm<Eigen::Infinity>();
}

}  // namespace detail

/// Solves A u = f on the domain nodes with u = 0 elsewhere.
inline GridFunction solve_linear(const DiscreteOperator& a, const GridFunction& f) {
    const Eigen::VectorXd u = detail::solve_spd(a, a.gather(f));
    if (!u.allFinite()) throw NumericalError("linear solve produced non-finite values");
    return a.scatter(u);
}

inline GridFunction solve_linear(const DomainSpec& domain, const GridFunction& f, const Grid& grid,
                                 const FracParams& params) {
    if (!(f.grid() == grid)) throw ParameterError("right-hand side lives on a different grid");
    return solve_linear(domain_operator(domain, grid, params), f);
}

/// t * profile with t^{p-1} = <phi, A phi> / sum phi^{p+1}, the amplitude at which the
/// projection of A u - u^p onto the profile vanishes.
inline GridFunction initial_guess(const DomainSpec& domain, const DiscreteOperator& a, double p,
                                  const FracParams& params) {
    GridFunction phi(a.grid());
    for (std::size_t node : a.nodes()) phi[node] = domain.torsion_profile(a.grid().coordinate(node), params.alpha());
    const Eigen::VectorXd v = a.gather(phi);
    const double num = v.dot(a.multiply(v));
    const double den = detail::positive_power(v, p + 1.0).sum();
    if (!(num > 0.0) || !(den > 0.0)) throw NumericalError("initial amplitude is undefined");
    const double t = std::pow(num / den, 1.0 / (p - 1.0));
    for (std::size_t node : a.nodes()) phi[node] *= t;
    return phi;
}

/// Damped Newton for A u = max(u,0)^p on the operator's nodes.
inline SolutionRecord solve_semilinear(const DomainSpec& domain, const SolveConfig& cfg, const DiscreteOperator& a,
                                       const FracParams& params, const GridFunction& init) {
    cfg.validate(params);
    const double p = cfg.p;
    Eigen::VectorXd u = a.gather(init);
    std::vector<double> history;
    if (u.lpNorm<Eigen::Infinity>() == 0.0) throw SolveError("initial guess is identically zero (trivial root)", history);
    if (u.minCoeff() < 0.0) throw ParameterError("initial guess must be nonnegative");

    double res = detail::residual_norm(a, u, p);
    history.push_back(res);
    const double a_norm = 2.0 * a.max_diagonal();
    // residuals below this are rounding in A u
    const auto tolerance = [&] {
        return std::max(cfg.newton_tol, 16.0 * std::numeric_limits<double>::epsilon() * a_norm * u.lpNorm<Eigen::Infinity>());
    };
    int iter = 0;
    while (!(res <= tolerance())) {
        if (iter++ >= cfg.max_iters)
            throw SolveError("Newton did not converge in " + std::to_string(cfg.max_iters) + " iterations", history);
        const Eigen::VectorXd f = a.multiply(u) - detail::positive_power(u, p);
        const Eigen::VectorXd shift = u.unaryExpr([p](double v) { return v > 0.0 ? p * std::pow(v, p - 1.0) : 0.0; });
        const Eigen::VectorXd step = detail::solve_shifted(a, shift, -f);
        if (!step.allFinite()) throw SolveError("singular Newton system", history);
        double t = 1.0;
        bool accepted = false;
        for (int k = 0; k <= cfg.max_halvings; ++k, t *= 0.5) {
            const Eigen::VectorXd trial = u + t * step;
            const double r = detail::residual_norm(a, trial, p);
            if (r < res) {
                u = trial;
                res = r;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw SolveError("line search failed to reduce the residual", history);
        history.push_back(res);
    }

    Eigen::Index imax = 0;
    const double m = u.maxCoeff(&imax);
    if (!(m > 1e3 * cfg.newton_tol) || !(m > 1e-8))
        throw SolveError("iteration collapsed to the trivial solution", history);
    if (!(u.minCoeff() > 0.0)) throw SolveError("converged iterate is not positive in the domain", history);

    SolutionRecord rec{a.scatter(u), p, res, m, {}, 0, 0.0, std::move(history)};
    rec.x_star_index = a.nodes()[static_cast<std::size_t>(imax)];
    rec.x_star = a.grid().coordinate(rec.x_star_index);
    rec.d = domain.distance(rec.x_star);
    return rec;
}

inline SolutionRecord solve_semilinear(const DomainSpec& domain, const SolveConfig& cfg, const Grid& grid,
                                       const FracParams& params, const GridFunction& init) {
    return solve_semilinear(domain, cfg, domain_operator(domain, grid, params), params, init);
}

struct ContinuationResult {
    std::vector<SolutionRecord> records;
    bool aborted = false;
    std::string failure;  ///< message of the solve error that stopped the run
};

namespace detail {

/// du/dp along the solution branch: (A - p u^{p-1}) du/dp = u^p log u.
inline Eigen::VectorXd branch_tangent(const DiscreteOperator& a, const Eigen::VectorXd& u, double p) {
    const Eigen::VectorXd rhs = u.unaryExpr([p](double v) { return v > 0.0 ? std::pow(v, p) * std::log(v) : 0.0; });
    const Eigen::VectorXd shift = u.unaryExpr([p](double v) { return v > 0.0 ? p * std::pow(v, p - 1.0) : 0.0; });
    return solve_shifted(a, shift, rhs);
}

}  // namespace detail

/// Solves along an increasing p schedule. Between scheduled exponents the branch is
/// followed in sub-steps of at most cfg.max_step with a tangent predictor; a failed
/// sub-step is halved down to cfg.min_step. Only scheduled exponents are recorded.
inline ContinuationResult continuation_run(const DomainSpec& domain, std::span<const double> schedule,
                                           const DiscreteOperator& a, const FracParams& params,
                                           SolveConfig base = {}) {
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        base.p = schedule[i];
        base.validate(params);
        if (i > 0 && !(schedule[i] > schedule[i - 1])) throw ParameterError("continuation schedule must increase");
    }
    ContinuationResult out;
    if (schedule.empty()) return out;
    base.p = schedule[0];
    try {
        out.records.push_back(solve_semilinear(domain, base, a, params, initial_guess(domain, a, base.p, params)));
    } catch (const SolveError& e) {
        out.aborted = true;
        out.failure = e.what();
        return out;
    }
    SolutionRecord cur = out.records.back();
    double step = base.max_step;
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        const double target = schedule[i];
        while (cur.p < target) {
            const double next = std::min(target, cur.p + step);
            const Eigen::VectorXd u = a.gather(cur.u);
            const Eigen::VectorXd guess =
                (u + (next - cur.p) * detail::branch_tangent(a, u, cur.p)).cwiseMax(0.0);
            base.p = next;
            try {
                cur = solve_semilinear(domain, base, a, params, a.scatter(guess));
                if (cur.history.size() <= 6) step = std::min(base.max_step, 1.5 * step);
            } catch (const SolveError& e) {
                step *= 0.5;
                if (step < base.min_step) {
                    out.aborted = true;
                    out.failure = std::string(e.what()) + " (continuation step below minimum near p = " +
                                  std::to_string(next) + ")";
                    return out;
                }
            }
        }
        out.records.push_back(cur);
    }
    return out;
}

inline ContinuationResult continuation_run(const DomainSpec& domain, std::span<const double> schedule,
                                           const Grid& grid, const FracParams& params, SolveConfig base = {}) {
    return continuation_run(domain, schedule, domain_operator(domain, grid, params), params, std::move(base));
}

enum class ComparisonStatus { holds, hypotheses_not_met, conclusion_failed };

struct ComparisonResult {
    ComparisonStatus status = ComparisonStatus::holds;
    std::optional<std::size_t> witness;  ///< first violating grid node
    std::string reason;
    double conclusion_slack = 0.0;       ///< slack * ||A_DD^{-1}||_inf
    double min_margin = 0.0;             ///< min over the region of a - b

    bool holds() const noexcept { return status == ComparisonStatus::holds; }
};

/// Discrete maximum principle on `region` (grid nodes, all unknowns of A):
/// hypotheses A(a-b) >= -slack on the region and a >= b at every other grid node,
/// conclusion a >= b - slack ||A_DD^{-1}||_inf on the region.
inline ComparisonResult comparison_check(const GridFunction& a, const GridFunction& b,
                                         std::span<const std::size_t> region, const DiscreteOperator& op,
                                         double slack) {
    if (!(a.grid() == op.grid()) || !(b.grid() == op.grid())) throw ParameterError("fields live on different grids");
    if (!(slack >= 0.0)) throw ParameterError("slack must be nonnegative");
    if (region.empty()) throw ParameterError("comparison region is empty");
    std::vector<char> in_region(op.grid().size(), 0);
    for (std::size_t node : region) {
        if (op.row_of(node) < 0) throw ParameterError("region node is not an unknown of the operator");
        in_region[node] = 1;
    }
    ComparisonResult res;
    GridFunction diff(op.grid());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = a[k] - b[k];

    for (std::size_t node = 0; node < diff.size(); ++node) {
        if (!in_region[node] && diff[node] < 0.0) {
            res.status = ComparisonStatus::hypotheses_not_met;
            res.witness = node;
            res.reason = "a < b outside the region";
            return res;
        }
    }
    const GridFunction lhs = op.apply(diff);
    for (std::size_t node : region) {
        if (lhs[node] < -slack) {
            res.status = ComparisonStatus::hypotheses_not_met;
            res.witness = node;
            res.reason = "A(a-b) < -slack in the region";
            return res;
        }
    }
    const DiscreteOperator sub = op.restrict_to(region);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(region.size()));
    const Eigen::VectorXd inv_row = detail::solve_spd(sub, ones);
    res.conclusion_slack = slack * inv_row.maxCoeff();
    res.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t node : region) {
        res.min_margin = std::min(res.min_margin, diff[node]);
        if (diff[node] < -res.conclusion_slack && !res.witness) {
            res.status = ComparisonStatus::conclusion_failed;
            res.witness = node;
            res.reason = "a < b - slack' in the region";
        }
    }
    return res;
}

}  // namespace fraclap
