#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "params.hpp"
#include "quadrature.hpp"
#include "toeplitz.hpp"

namespace fraclap {

/// Three-zone quadrature settings for the pointwise evaluator.
struct QuadConfig {
    double delta = 1e-3;  ///< inner (Taylor-regularized) zone radius
    double r_far = 1e3;   ///< start of the far field
    double tol = 1e-8;    ///< absolute error target on the returned value
    std::size_t max_subdivisions = 20000;

    void validate() const {
        if (!(delta > 0.0) || !(r_far > delta)) throw ParameterError("quadrature needs 0 < delta < r_far");
        if (!(tol > 0.0)) throw ParameterError("quadrature tolerance must be positive");
    }
};

struct PvValue {
    double value = 0.0;
    double error = 0.0;       ///< quadrature estimate plus far-field estimate
    double tail_error = 0.0;  ///< far-field part of `error`
    std::size_t subdivisions = 0;
};

/// c_norm * integral over |y| > r of |y|^{-n-alpha} = c_norm s_n r^{-alpha} / alpha.
inline double tail_weight(double r, const FracParams& params) {
    if (!(r > 0.0)) throw ParameterError("tail_weight needs r > 0");
    return params.c_norm() * unit_sphere_measure(params.n()) * std::pow(r, -params.alpha()) / params.alpha();
}

/// x -> u(lambda x).
inline FieldFn scaling_pushforward(const FieldFn& u, double lambda) {
    if (!(lambda > 0.0)) throw ParameterError("scaling factor must be positive");
    Growth g = u.growth();
    switch (g.kind) {
        case Growth::Kind::compact: g.radius /= lambda; break;
        case Growth::Kind::power_law:
            g.bound *= g.rate >= 0.0 ? std::pow(std::min(1.0, lambda), -g.rate)
                                     : std::pow(std::max(1.0, lambda), -g.rate);
            break;
        case Growth::Kind::oscillatory: break;
    }
    std::vector<Kink> kinks = u.kinks();
    for (auto& k : kinks) {
        k.center = (1.0 / lambda) * k.center;
        k.radius /= lambda;
    }
    return FieldFn([u, lambda](const Point& p) { return u(lambda * p); }, g, std::move(kinks));
}

namespace detail {

// Evaluates the radial profiles the evaluator integrates. With e the unit vector,
//   second(r)   = 2u(x) - u(x+r e) - u(x-r e)            (n = 1)
//               = int_0^pi of the same over e(theta)       (n = 2)
//   neighbors(r) = u(x+r e) + u(x-r e), same convention.
// Then (-Delta)^{alpha/2}u(x) = c_norm int_0^inf r^{-1-alpha} second(r) dr.
class RadialSampler {
public:
    RadialSampler(const FieldFn& u, Point x, const FracParams& params, double tol)
        : u_(u), x_(x), n_(params.n()), alpha_(params.alpha()), scale_(0.01 * tol / params.c_norm()) {
        u0_ = sample(x);
    }

    double center_value() const noexcept { return u0_; }

    double second(double r, double eps_scale) const {
        if (n_ == 1) return 2.0 * u0_ - sample({x_.x + r, x_.y}) - sample({x_.x - r, x_.y});
        auto f = [&](double th) {
            const Point e{r * std::cos(th), r * std::sin(th)};
            return 2.0 * u0_ - sample(x_ + e) - sample(x_ - e);
        };
        return angular(f, r, eps_scale);
    }

    double neighbors(double r) const {
        if (n_ == 1) return sample({x_.x + r, x_.y}) + sample({x_.x - r, x_.y});
        auto f = [&](double th) {
            const Point e{r * std::cos(th), r * std::sin(th)};
            return sample(x_ + e) + sample(x_ - e);
        };
        return angular(f, r, 1.0);
    }

    /// Radii at which u(x +- r e) crosses a kink sphere.
    std::vector<double> radial_breaks() const {
        std::vector<double> out;
        for (const Kink& k : u_.kinks()) {
            if (n_ == 1) {
                for (double b : {k.center.x - k.radius, k.center.x + k.radius}) out.push_back(std::abs(b - x_.x));
            } else {
                const double d = norm(x_ - k.center);
                out.push_back(std::abs(d - k.radius));
                out.push_back(d + k.radius);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    double sample(Point p) const {
        const double v = u_(p);
        if (!std::isfinite(v)) throw InputError("non-finite field sample");
        return v;
    }

    template <class F>
    double angular(F& f, double r, double eps_scale) const {
        const double eps = std::max(scale_ * std::pow(r, alpha_) * eps_scale, 1e-300);
        const quad::Result res = quad::integrate(f, 0.0, std::numbers::pi, eps, 200);
        return res.value;
    }

    const FieldFn& u_;
    Point x_;
    int n_;
    double alpha_;
    double scale_;
    double u0_ = 0.0;
};

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline std::vector<double> geometric_breaks(double from, double to, double ratio) {
    std::vector<double> out{from};
    double r = from;
    while (r * ratio < to) {
        r *= ratio;
        out.push_back(r);
    }
    out.push_back(to);
    return out;
}

}  // namespace detail

/// Pointwise (-Delta)^{alpha/2}u(x) from the symmetric second-difference integral
///   c_norm/2 * int (2u(x) - u(x+y) - u(x-y)) / |y|^{n+alpha} dy.
/// Three zones: |y| < delta with a Gauss-Jacobi rule in the variable (r/delta)^2 applied
/// to second(r)/r^2 (bounded for C^{1,1} fields); adaptive Gauss-Kronrod up to r_far;
/// beyond r_far the 2u(x) term is integrated in closed form and the neighbor term is
/// handled according to the declared growth class.
inline PvValue eval_point_pv(const FieldFn& u, Point x, const FracParams& params, const QuadConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(x.x) || !std::isfinite(x.y)) throw InputError("evaluation point is not finite");
    if (params.n() == 1) x.y = 0.0;
    const double alpha = params.alpha();
    const double c = params.c_norm();
    const int n = params.n();
    detail::RadialSampler s(u, x, params, cfg.tol);

    PvValue out;
    const std::vector<double> kinks = s.radial_breaks();
    double delta = cfg.delta;
    for (double b : kinks) {
        if (b == 0.0) {
            delta = 0.0;
            break;
        }
        delta = std::min(delta, 0.5 * b);
    }

    // inner zone: with s = (r/delta)^2 the integral is
    //   delta^{-alpha}/2 int_0^1 s^{-alpha/2} [second(delta sqrt(s)) / s] ds
    // and the bracket is smooth for C^{1,1} fields.
    double inner = 0.0, inner_err = 0.0;
    if (delta > 0.0) {
        const double b = -0.5 * alpha;
        auto rule_sum = [&](int m) {
            const quad::Rule rule = quad::gauss_jacobi(m, 0.0, b);
            double acc = 0.0;
            for (int k = 0; k < m; ++k) {
                const double sk = 0.5 * (1.0 + rule.nodes[k]);
                acc += rule.weights[k] * s.second(delta * std::sqrt(sk), sk) / sk;
            }
            return acc * std::pow(2.0, -b - 1.0) * 0.5 * std::pow(delta, -alpha);
        };
        inner = rule_sum(6);
        inner_err = std::abs(inner - rule_sum(4));
    }

    // middle zone
    double r_far = std::max(cfg.r_far, 2.0 * delta);
    const Growth& g = u.growth();
    if (g.kind == Growth::Kind::compact) r_far = std::max(r_far, norm(x) + g.radius);
    std::vector<double> breaks;
    {
        const double start = delta > 0.0 ? delta : 0.0;
        const double first = delta > 0.0 ? delta : std::min(cfg.delta, 1.0);
        if (delta == 0.0) breaks.push_back(0.0);
        for (double b : detail::geometric_breaks(first, std::max(1.0, 2.0 * first), 2.0)) breaks.push_back(b);
        for (double b : detail::geometric_breaks(breaks.back(), r_far, 1.25)) breaks.push_back(b);
        for (double b : kinks)
            if (b > start && b < r_far) breaks.push_back(b);
        std::sort(breaks.begin(), breaks.end());
        breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
        while (breaks.size() > 1 && breaks.back() > r_far) breaks.pop_back();
    }
    auto mid_integrand = [&](double r) { return std::pow(r, -1.0 - alpha) * s.second(r, 1.0); };
    const quad::Result mid =
        quad::integrate(mid_integrand, std::span<const double>(breaks), 0.5 * cfg.tol / c, cfg.max_subdivisions);
    out.subdivisions = mid.subdivisions;

    // far field
    const double tail_mass = std::pow(r_far, -alpha) / alpha;  // int_{r_far}^inf r^{-1-alpha} dr
    const double sphere_half = 0.5 * unit_sphere_measure(n);    // 1 (n=1) or pi (n=2)
    double neighbor_tail = 0.0, tail_err = 0.0, gated_tail_err = 0.0;
    switch (g.kind) {
        case Growth::Kind::compact: break;
        case Growth::Kind::power_law: {
            // substitute r = r_far t^{-1/alpha}: int_{r_far}^inf r^{-1-alpha} f(r) dr = tail_mass * int_0^1 f dt
            std::vector<double> tb{0.0};
            for (int k = 40; k >= 1; --k) tb.push_back(std::ldexp(1.0, -k));
            for (double b : kinks)
                if (b > r_far) tb.push_back(std::pow(r_far / b, alpha));
            tb.push_back(1.0);
            std::sort(tb.begin(), tb.end());
            tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
            auto f = [&](double t) { return s.neighbors(r_far * std::pow(t, -1.0 / alpha)); };
            const quad::Result tr =
                quad::integrate(f, std::span<const double>(tb), 0.25 * cfg.tol / (c * tail_mass), cfg.max_subdivisions);
            neighbor_tail = tail_mass * tr.value;
            tail_err = c * tail_mass * tr.error;
            gated_tail_err = tail_err;
            break;
        }
        case Growth::Kind::oscillatory: {
            const double mean_sum = 2.0 * sphere_half * g.far_mean;
            neighbor_tail = tail_mass * mean_sum;
            // Cesaro mean of the partial tail integrals over [r_far, r_far + L]:
            // (1/L) int (r_far + L - r) f(r) dr, compared against the L/2 mean for the error
            auto f = [&](double r) { return std::pow(r, -1.0 - alpha) * (s.neighbors(r) - mean_sum); };
            auto cesaro = [&](double len) {
                auto wf = [&](double r) { return (r_far + len - r) / len * f(r); };
                const std::vector<double> shell = detail::geometric_breaks(r_far, r_far + len, 1.01);
                return quad::integrate(wf, std::span<const double>(shell), 1e-3 * cfg.tol / c, 4000).value;
            };
            const double full = cesaro(0.125 * r_far);
            neighbor_tail += full;
            tail_err = 4.0 * c * std::abs(full - cesaro(0.0625 * r_far));
            break;
        }
    }

    const double u0 = s.center_value();
    out.value = c * (inner + mid.value) + u0 * tail_weight(r_far, params) - c * neighbor_tail;
    const double quad_err = c * (inner_err + mid.error) + gated_tail_err;
    out.tail_error = tail_err;
    out.error = c * (inner_err + mid.error) + tail_err;
    if (!(quad_err <= cfg.tol))
        throw AccuracyError("principal-value quadrature did not reach tol " + detail::sci(cfg.tol) + " (estimate " +
                                detail::sci(quad_err) + ")",
                            quad_err);
    return out;
}

/// Discrete operator on a set of grid nodes (the unknowns); every other node and
/// everything outside the grid extent is held at zero. One-dimensional operators on
/// consecutive nodes keep a Toeplitz representation and build the dense matrix on demand.
class DiscreteOperator {
public:
    /// Above this many unknowns, Toeplitz operators are applied by FFT and solved iteratively.
    static constexpr std::size_t dense_limit = 2500;

    DiscreteOperator(Grid grid, std::vector<std::size_t> nodes, Eigen::MatrixXd matrix)
        : grid_(grid), nodes_(std::move(nodes)), row_of_(grid.size(), -1),
          dense_(std::make_shared<DenseCache>()) {
        if (matrix.rows() != static_cast<Eigen::Index>(nodes_.size()) || matrix.cols() != matrix.rows())
            throw ParameterError("operator matrix does not match the node count");
        std::call_once(dense_->once, [&] { dense_->matrix = std::move(matrix); });
        index_rows();
    }

    DiscreteOperator(Grid grid, std::vector<std::size_t> nodes, ToeplitzOperator toeplitz)
        : grid_(grid), nodes_(std::move(nodes)), row_of_(grid.size(), -1),
          toeplitz_(std::make_shared<ToeplitzOperator>(std::move(toeplitz))),
          dense_(std::make_shared<DenseCache>()) {
        if (toeplitz_->size() != static_cast<Eigen::Index>(nodes_.size()))
            throw ParameterError("Toeplitz operator does not match the node count");
        index_rows();
    }

    const Grid& grid() const noexcept { return grid_; }
    const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }
    std::size_t rows() const noexcept { return nodes_.size(); }
    long row_of(std::size_t node) const noexcept { return node < row_of_.size() ? row_of_[node] : -1; }

    /// Toeplitz form, or nullptr when the operator is stored densely only.
    const ToeplitzOperator* toeplitz() const noexcept { return toeplitz_.get(); }

    /// True when products and solves should avoid the dense matrix.
    bool iterative() const noexcept { return toeplitz_ && nodes_.size() > dense_limit; }

    const Eigen::MatrixXd& matrix() const {
        std::call_once(dense_->once, [&] { dense_->matrix = toeplitz_->dense(); });
        return dense_->matrix;
    }

    /// Largest diagonal entry; the row-sum norm is at most twice this for the Z-matrix.
    double max_diagonal() const {
        if (toeplitz_) return toeplitz_->column().front();
        return matrix().diagonal().maxCoeff();
    }

    Eigen::VectorXd multiply(const Eigen::VectorXd& v) const {
        if (iterative()) return toeplitz_->apply(v);
        return matrix() * v;
    }

    Eigen::VectorXd gather(const GridFunction& f) const {
        Eigen::VectorXd v(static_cast<Eigen::Index>(nodes_.size()));
        for (std::size_t k = 0; k < nodes_.size(); ++k) v(static_cast<Eigen::Index>(k)) = f[nodes_[k]];
        return v;
    }

    GridFunction scatter(const Eigen::VectorXd& v) const {
        GridFunction f(grid_);
        for (std::size_t k = 0; k < nodes_.size(); ++k) f[nodes_[k]] = v(static_cast<Eigen::Index>(k));
        return f;
    }

    /// (A f) on the unknown nodes; zero elsewhere. Values of f off the node set are ignored.
    GridFunction apply(const GridFunction& f) const {
        if (!(f.grid() == grid_)) throw ParameterError("grid function lives on a different grid");
        return scatter(multiply(gather(f)));
    }

    /// Principal submatrix on a subset of the current nodes.
    DiscreteOperator restrict_to(std::span<const std::size_t> subset) const {
        std::vector<Eigen::Index> rows;
        rows.reserve(subset.size());
        for (std::size_t node : subset) {
            const long r = row_of(node);
            if (r < 0) throw ParameterError("restriction node is not an unknown of the operator");
            rows.push_back(r);
        }
        if (rows.empty()) throw ParameterError("restriction to an empty node set");
        std::vector<std::size_t> kept(subset.begin(), subset.end());
        bool consecutive = true;
        for (std::size_t i = 1; i < rows.size(); ++i) consecutive = consecutive && rows[i] == rows[i - 1] + 1;
        if (toeplitz_ && consecutive) return DiscreteOperator(grid_, std::move(kept), toeplitz_->leading(rows.size()));
        const Eigen::MatrixXd& full = matrix();
        const auto m = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd sub(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) sub(i, j) = full(rows[i], rows[j]);
        return DiscreteOperator(grid_, std::move(kept), std::move(sub));
    }

private:
    struct DenseCache {
        std::once_flag once;
        Eigen::MatrixXd matrix;
    };

    void index_rows() {
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            if (nodes_[k] >= row_of_.size()) throw ParameterError("operator node outside the grid");
            row_of_[nodes_[k]] = static_cast<long>(k);
        }
    }

    Grid grid_;
    std::vector<std::size_t> nodes_;
    std::vector<long> row_of_;
    std::shared_ptr<ToeplitzOperator> toeplitz_;
    std::shared_ptr<DenseCache> dense_;
};

namespace detail {

/// J(alpha) = int_1^inf s(1-s) t^{-1-alpha} dt with s = frac(t): the defect of the
/// piecewise-linear far field on a quadratic, per unit h^{2-alpha} u''/2.
inline double linear_interpolation_defect(double alpha) {
    static const quad::Rule gl = quad::gauss_legendre(10);
    const int cells = 2048;
    double acc = 0.0;
    for (int k = 1; k <= cells; ++k) {
        double cell = 0.0;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double sq = 0.5 * (1.0 + gl.nodes[q]);
            cell += 0.5 * gl.weights[q] * sq * (1.0 - sq) * std::pow(k + sq, -1.0 - alpha);
        }
        acc += cell;
    }
    const double t0 = cells + 1.0;
    acc += (std::pow(t0, -alpha) / alpha - (1.0 + alpha) * std::pow(t0, -2.0 - alpha) / 24.0) / 6.0;
    return acc;
}

/// Two-dimensional analogue: int over |t|_inf > 1 of s(1-s) |t|^{-2-alpha} with s = frac(t_1).
inline double bilinear_interpolation_defect(double alpha, double outer_mass) {
    static const quad::Rule gl = quad::gauss_legendre(6);
    const long cells = 128;
    double acc = 0.0;
    for (long i = 0; i < cells; ++i) {
        for (long j = 0; j < cells; ++j) {
            if (i == 0 && j == 0) continue;
            double cell = 0.0;
            for (std::size_t a = 0; a < gl.nodes.size(); ++a) {
                const double sa = 0.5 * (1.0 + gl.nodes[a]);
                const double tx = static_cast<double>(i) + sa;
                for (std::size_t b = 0; b < gl.nodes.size(); ++b) {
                    const double ty = static_cast<double>(j) + 0.5 * (1.0 + gl.nodes[b]);
                    cell += 0.25 * gl.weights[a] * gl.weights[b] * sa * (1.0 - sa) *
                            std::pow(tx * tx + ty * ty, -1.0 - 0.5 * alpha);
                }
            }
            acc += cell;
        }
    }
    return 4.0 * acc + outer_mass * std::pow(static_cast<double>(cells), -alpha) / 6.0;
}

/// Weight of the hat function centered at offset m >= 1 against t^{-1-alpha} on t >= 1.
inline double hat_moment_1d(long m, double alpha) {
    static const quad::Rule gl = quad::gauss_legendre(12);
    auto cell = [&](double a, double b) {
        double acc = 0.0;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double t = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[q];
            acc += 0.5 * (b - a) * gl.weights[q] * (1.0 - std::abs(t - static_cast<double>(m))) *
                   std::pow(t, -1.0 - alpha);
        }
        return acc;
    };
    const double md = static_cast<double>(m);
    if (m == 1) return cell(1.0, 2.0);
    return cell(md - 1.0, md) + cell(md, md + 1.0);
}

/// Weight of the bilinear hat centered at (m1, m2) against |t|^{-2-alpha} outside [-1,1]^2.
inline double hat_moment_2d(long m1, long m2, double alpha) {
    static const quad::Rule gl = quad::gauss_legendre(10);
    double acc = 0.0;
    for (long cx = m1 - 1; cx <= m1; ++cx) {
        for (long cy = m2 - 1; cy <= m2; ++cy) {
            if (cx >= -1 && cx <= 0 && cy >= -1 && cy <= 0) continue;  // cell inside the near square
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
                const double tx = cx + 0.5 * (1.0 + gl.nodes[i]);
                for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
                    const double ty = cy + 0.5 * (1.0 + gl.nodes[j]);
                    const double hat = (1.0 - std::abs(tx - m1)) * (1.0 - std::abs(ty - m2));
                    acc += 0.25 * gl.weights[i] * gl.weights[j] * hat * std::pow(tx * tx + ty * ty, -1.0 - 0.5 * alpha);
                }
            }
        }
    }
    return acc;
}

}  // namespace detail

/// Coefficient of -h^{-alpha} (u_{i+1} - 2u_i + u_{i-1}) in the 1-D near field.
/// The plain Taylor value 1/(2-alpha) is reduced by the interpolation defect so the
/// scheme is exact on quadratics, but never below -hat_moment_1d(1) (Z-matrix sign).
inline double near_field_coefficient(double alpha) {
    const double ideal = 1.0 / (2.0 - alpha) - detail::linear_interpolation_defect(alpha);
    return std::max(ideal, -detail::hat_moment_1d(1, alpha));
}

/// Assembles the discrete fractional Laplacian on the interior nodes of `grid`,
/// for grid functions extended by zero outside the extent. Far-field weights are
/// kernel moments against the piecewise-(bi)linear interpolant; the cell around the
/// node is handled by the second difference. The diagonal carries the full kernel
/// mass, so each row sum equals the exterior mass seen by that node.
inline DiscreteOperator assemble_discrete(const Grid& grid, const FracParams& params) {
    if (grid.dim() != params.n()) throw ParameterError("grid and operator dimensions differ");
    std::vector<std::size_t> nodes = grid.interior_nodes();
    if (nodes.size() < 3) throw ParameterError("degenerate grid: fewer than 3 interior nodes");
    const double alpha = params.alpha();
    const double scale = params.c_norm() * std::pow(grid.h(), -alpha);
    const long span_max = 2 * grid.half_count();

    if (grid.dim() == 1) {
        const double kn = near_field_coefficient(alpha);
        std::vector<double> column(nodes.size());
        column[0] = scale * (2.0 / alpha + 2.0 * kn);
        for (std::size_t d = 1; d < column.size(); ++d)
            column[d] = -scale * (detail::hat_moment_1d(static_cast<long>(d), alpha) + (d == 1 ? kn : 0.0));
        return DiscreteOperator(grid, std::move(nodes), ToeplitzOperator(std::move(column)));
    } else {
        // near square [-h,h]^2 with the 5-point Laplacian; int_Q t1^2 |t|^{-2-alpha} = kq,
        // less the bilinear interpolation defect of the far field
        const quad::Rule gl = quad::gauss_legendre(40);
        double kq = 0.0, mass = 0.0;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double th = std::numbers::pi / 8.0 * (1.0 + gl.nodes[q]);
            const double wq = std::numbers::pi / 8.0 * gl.weights[q];
            kq += wq * 4.0 * std::pow(std::cos(th), alpha - 2.0) / (2.0 - alpha);
            mass += wq * 8.0 * std::pow(std::cos(th), alpha) / alpha;
        }
        const double defect = detail::bilinear_interpolation_defect(alpha, mass);
        const double kn = std::max(0.5 * (kq - defect), -detail::hat_moment_2d(1, 0, alpha));
        const auto side = static_cast<std::size_t>(span_max + 1);
        std::vector<double> w(side * side, 0.0);
        for (long i = 0; i <= span_max; ++i)
            for (long j = 0; j <= i; ++j) {
                const double v = (i == 0 && j == 0) ? 0.0 : detail::hat_moment_2d(i, j, alpha);
                w[static_cast<std::size_t>(i) * side + static_cast<std::size_t>(j)] = v;
                w[static_cast<std::size_t>(j) * side + static_cast<std::size_t>(i)] = v;
            }
        w[1] += kn;
        w[side] += kn;
        const double diag = mass + 4.0 * kn;
        const auto m = static_cast<Eigen::Index>(nodes.size());
        Eigen::MatrixXd a(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const long xi = grid.offset_x(nodes[static_cast<std::size_t>(i)]);
            const long yi = grid.offset_y(nodes[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < m; ++j) {
                if (i == j) {
                    a(i, j) = scale * diag;
                    continue;
                }
                const auto dx = static_cast<std::size_t>(std::abs(xi - grid.offset_x(nodes[static_cast<std::size_t>(j)])));
                const auto dy = static_cast<std::size_t>(std::abs(yi - grid.offset_y(nodes[static_cast<std::size_t>(j)])));
                a(i, j) = -scale * w[dx * side + dy];
            }
        }
        return DiscreteOperator(grid, std::move(nodes), std::move(a));
    }
}

}  // namespace fraclap
