#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "errors.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "operator.hpp"
#include "params.hpp"

namespace fraclap {

/// Lateral and top boundary data of the truncated half-space.
enum class FarField {
    zero,      ///< homogeneous Dirichlet
    monopole,  ///< total mass of u times the extension's Poisson kernel
};

struct ExtensionConfig {
    double y_max = 10.0;
    int nx = 48;          ///< graded x cells on each side between the data extent and the lateral wall
    int ny = 200;
    double grading = 2.0; ///< layer tops at y_max (j/ny)^grading
    bool calibrate = false;
    FarField far_field = FarField::monopole;
    double x_growth = 1.15;  ///< cell growth factor of the lateral grading

    void validate() const {
        if (!(y_max > 0.0)) throw ParameterError("y_max must be positive");
        if (ny < 16) throw ParameterError("ny = " + std::to_string(ny) + " is too coarse to resolve y^(1-alpha); need ny >= 16");
        if (!(grading >= 1.0)) throw ParameterError("grading exponent must be at least 1");
        if (nx < 1) throw ParameterError("nx must be positive");
        if (!(x_growth >= 1.0)) throw ParameterError("x_growth must be at least 1");
    }
};

/// U on the tensor mesh x_nodes x y_centers; row j = layer j (cell center y_centers[j]).
struct ExtensionField {
    GridFunction trace;              ///< the boundary data u, U(., 0) = u
    std::vector<double> x_nodes;     ///< includes the two lateral walls
    std::vector<double> y_faces;     ///< 0 = y_faces[0] < ... < y_faces[ny] = y_max
    std::vector<double> y_centers;
    Eigen::MatrixXd values;          ///< ny x x_nodes.size(), walls hold the boundary data
    std::vector<double> bottom;      ///< data at y = 0 per x node
    std::vector<double> top;         ///< data at y = y_max per x node
    long data_offset = 0;            ///< x_nodes index of the first grid node of `trace`
    double alpha = 1.0;

    double at(std::size_t ix, std::size_t jy) const { return values(static_cast<Eigen::Index>(jy), static_cast<Eigen::Index>(ix)); }
};

/// Poisson kernel of the weighted extension in one dimension: p y^alpha / (x^2 + y^2)^{(1+alpha)/2}.
inline double extension_poisson_kernel(double x, double y, double alpha) {
    const double p = std::tgamma(0.5 * (1.0 + alpha)) / (std::sqrt(std::numbers::pi) * std::tgamma(0.5 * alpha));
    return p * std::pow(y, alpha) * std::pow(x * x + y * y, -0.5 * (1.0 + alpha));
}

/// d_s with (-Delta)^{alpha/2} u = -d_s lim y^{1-alpha} dU/dy.
inline double extension_trace_constant(double alpha) {
    return std::pow(2.0, alpha - 1.0) * std::tgamma(0.5 * alpha) / std::tgamma(1.0 - 0.5 * alpha);
}

inline ExtensionField solve_extension(const GridFunction& u, const ExtensionConfig& cfg, const FracParams& params) {
    cfg.validate();
    if (u.grid().dim() != 1 || params.n() != 1) throw ParameterError("the extension solver is one-dimensional");
    const double alpha = params.alpha();
    const Grid& g = u.grid();
    const double h = g.h();
    const double r = g.extent();
    const double wall = std::max(cfg.y_max, 2.0 * r);

    // x nodes: the data grid, then nx cells per side growing geometrically out to the wall
    std::vector<double> outer;
    {
        double w = h, x = r;
        for (int k = 0; k < cfg.nx; ++k) {
            x += w;
            outer.push_back(x);
            w *= cfg.x_growth;
        }
        const double scale = (wall - r) / (outer.back() - r);
        if (scale > 1.0)
            for (double& v : outer) v = r + (v - r) * scale;
    }
    std::vector<double> xs;
    for (auto it = outer.rbegin(); it != outer.rend(); ++it) xs.push_back(-*it);
    const long offset = static_cast<long>(xs.size());
    for (long i = -g.half_count(); i <= g.half_count(); ++i) xs.push_back(static_cast<double>(i) * h);
    for (double v : outer) xs.push_back(v);
    const std::size_t nxn = xs.size();

    const int ny = cfg.ny;
    std::vector<double> faces(static_cast<std::size_t>(ny + 1)), centers(static_cast<std::size_t>(ny));
    for (int j = 0; j <= ny; ++j) faces[static_cast<std::size_t>(j)] = cfg.y_max * std::pow(static_cast<double>(j) / ny, cfg.grading);
    for (int j = 0; j < ny; ++j)
        centers[static_cast<std::size_t>(j)] = 0.5 * (faces[static_cast<std::size_t>(j)] + faces[static_cast<std::size_t>(j) + 1]);

    std::vector<double> bottom(nxn, 0.0);
    for (long i = -g.half_count(); i <= g.half_count(); ++i)
        bottom[static_cast<std::size_t>(offset + i + g.half_count())] = u[g.linear(i)];

    double mass = 0.0, moment = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        mass += h * u[k];
        moment += h * u[k] * g.coordinate(k).x;
    }
    const double centroid = mass != 0.0 ? moment / mass : 0.0;
    auto far = [&](double x, double y) {
        if (cfg.far_field == FarField::zero || mass == 0.0) return 0.0;
        return mass * extension_poisson_kernel(x - centroid, y, alpha);
    };

    // unknowns: interior x nodes (1 .. nxn-2) times all layers
    const std::size_t nxi = nxn - 2;
    const auto id = [nxi](std::size_t i, int j) { return static_cast<Eigen::Index>(static_cast<std::size_t>(j) * nxi + (i - 1)); };
    const Eigen::Index unknowns = static_cast<Eigen::Index>(nxi) * ny;

    std::vector<double> layer_weight(static_cast<std::size_t>(ny));  // integral of y^{1-alpha} over the layer
    for (int j = 0; j < ny; ++j) {
        const double a = faces[static_cast<std::size_t>(j)], b = faces[static_cast<std::size_t>(j) + 1];
        layer_weight[static_cast<std::size_t>(j)] = (std::pow(b, 2.0 - alpha) - std::pow(a, 2.0 - alpha)) / (2.0 - alpha);
    }
    // y conductance between centers j and j+1 (j = -1: the boundary y = 0, j = ny-1: the top y = y_max)
    auto y_conductance = [&](int j) {
        const double lo = j < 0 ? 0.0 : centers[static_cast<std::size_t>(j)];
        const double hi = j + 1 >= ny ? cfg.y_max : centers[static_cast<std::size_t>(j) + 1];
        return alpha / (std::pow(hi, alpha) - std::pow(lo, alpha));
    };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(unknowns) * 5);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
    for (int j = 0; j < ny; ++j) {
        const double cy_lo = y_conductance(j - 1), cy_hi = y_conductance(j);
        for (std::size_t i = 1; i + 1 < nxn; ++i) {
            const Eigen::Index row = id(i, j);
            const double width = 0.5 * (xs[i + 1] - xs[i - 1]);
            double diag = 0.0;
            for (int side : {-1, 1}) {
                const std::size_t nb = side < 0 ? i - 1 : i + 1;
                const double c = layer_weight[static_cast<std::size_t>(j)] / std::abs(xs[nb] - xs[i]);
                diag += c;
                if (nb == 0 || nb == nxn - 1)
                    rhs(row) += c * far(xs[nb], centers[static_cast<std::size_t>(j)]);
                else
                    trip.emplace_back(row, id(nb, j), -c);
            }
            const double lo = width * cy_lo, hi = width * cy_hi;
            diag += lo + hi;
            if (j == 0)
                rhs(row) += lo * bottom[i];
            else
                trip.emplace_back(row, id(i, j - 1), -lo);
            if (j + 1 == ny)
                rhs(row) += hi * far(xs[i], cfg.y_max);
            else
                trip.emplace_back(row, id(i, j + 1), -hi);
            trip.emplace_back(row, row, diag);
        }
    }
    Eigen::SparseMatrix<double> k(unknowns, unknowns);
    k.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(k);
    if (ldlt.info() != Eigen::Success) throw NumericalError("extension system factorization failed");
    const Eigen::VectorXd sol = ldlt.solve(rhs);
    if (!sol.allFinite()) throw NumericalError("extension solve produced non-finite values");

    std::vector<double> top(nxn);
    for (std::size_t i = 0; i < nxn; ++i) top[i] = far(xs[i], cfg.y_max);
    ExtensionField out{u,      xs,  faces, centers, Eigen::MatrixXd::Zero(ny, static_cast<Eigen::Index>(nxn)),
                       bottom, top, offset, alpha};
    for (int j = 0; j < ny; ++j) {
        out.values(j, 0) = far(xs.front(), centers[static_cast<std::size_t>(j)]);
        out.values(j, static_cast<Eigen::Index>(nxn) - 1) = far(xs.back(), centers[static_cast<std::size_t>(j)]);
        for (std::size_t i = 1; i + 1 < nxn; ++i) out.values(j, static_cast<Eigen::Index>(i)) = sol(id(i, j));
    }
    return out;
}

/// Discrete weighted Dirichlet energy, half the sum over faces of conductance * jump^2, of
/// a mesh field `values` that shares the boundary data of `f`.
inline double extension_energy(const ExtensionField& f, const Eigen::MatrixXd& values) {
    const double alpha = f.alpha;
    const auto& xs = f.x_nodes;
    const auto& c = f.y_centers;
    const int ny = static_cast<int>(c.size());
    const double y_max = f.y_faces.back();
    auto cond_y = [&](double lo, double hi) { return alpha / (std::pow(hi, alpha) - std::pow(lo, alpha)); };
    double e = 0.0;
    for (int j = 0; j < ny; ++j) {
        const double a = f.y_faces[static_cast<std::size_t>(j)], b = f.y_faces[static_cast<std::size_t>(j) + 1];
        const double w = (std::pow(b, 2.0 - alpha) - std::pow(a, 2.0 - alpha)) / (2.0 - alpha);
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            const double d = values(j, static_cast<Eigen::Index>(i) + 1) - values(j, static_cast<Eigen::Index>(i));
            e += 0.5 * w / (xs[i + 1] - xs[i]) * d * d;
        }
    }
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        const double width = 0.5 * (xs[i + 1] - xs[i - 1]);
        double d = values(0, col) - f.bottom[i];
        e += 0.5 * width * cond_y(0.0, c[0]) * d * d;
        for (int j = 0; j + 1 < ny; ++j) {
            d = values(j + 1, col) - values(j, col);
            e += 0.5 * width * cond_y(c[static_cast<std::size_t>(j)], c[static_cast<std::size_t>(j) + 1]) * d * d;
        }
        d = f.top[i] - values(ny - 1, col);
        e += 0.5 * width * cond_y(c.back(), y_max) * d * d;
    }
    return e;
}

struct TraceCalibration {
    double factor = 1.0;     ///< multiplies raw traces
    double raw_value = 0.0;  ///< raw trace of the cos test at 0
    double raw_error = 0.0;  ///< |raw_value - 1|
};

namespace detail {

/// Raw trace -d_s * alpha * c with U - u = c y^alpha + d y^2 fitted on the first three layers.
inline GridFunction raw_trace(const ExtensionField& f) {
    const double alpha = f.alpha;
    const Grid& g = f.trace.grid();
    if (f.y_centers.size() < 3) throw ParameterError("trace fit needs three layers");
    Eigen::Matrix<double, 3, 2> m;
    for (int j = 0; j < 3; ++j) {
        const double y = f.y_centers[static_cast<std::size_t>(j)];
        m(j, 0) = std::pow(y, alpha);
        m(j, 1) = y * y;
    }
    const Eigen::Matrix2d normal = m.transpose() * m;
    const double cond = normal.norm() * normal.inverse().norm();
    if (!std::isfinite(cond) || cond > 1e14) throw NumericalError("trace fit is ill-conditioned (collinear layers)");
    const Eigen::Matrix<double, 2, 3> pinv = normal.ldlt().solve(m.transpose());
    const double ds = extension_trace_constant(alpha);
    GridFunction out(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const std::size_t ix = static_cast<std::size_t>(f.data_offset + g.offset_x(k) + g.half_count());
        Eigen::Vector3d rhs;
        for (int j = 0; j < 3; ++j) rhs(j) = f.at(ix, static_cast<std::size_t>(j)) - f.trace[k];
        const double c = (pinv * rhs)(0);
        out[k] = -ds * alpha * c;
    }
    return out;
}

}  // namespace detail

/// Fits the trace factor on cos(x) sampled on [-20, 20] at spacing 1/20, probe x = 0, target 1.
inline TraceCalibration calibrate_trace(const FracParams& params, ExtensionConfig cfg) {
    static std::mutex mu;
    static std::map<std::tuple<double, int, double, int>, TraceCalibration> cache;
    cfg.calibrate = false;
    const auto key = std::make_tuple(params.alpha(), cfg.ny, cfg.grading, static_cast<int>(cfg.far_field));
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const Grid g(1, 0.05, 20.0);
    const GridFunction cosine = GridFunction::sample(g, fields::cosine({1.0, 0.0}));
    cfg.y_max = 40.0;
    const GridFunction raw = detail::raw_trace(solve_extension(cosine, cfg, params));
    TraceCalibration cal;
    cal.raw_value = raw[g.index({0.0, 0.0})];
    if (!(cal.raw_value > 0.0)) throw NumericalError("calibration trace is not positive");
    cal.factor = 1.0 / cal.raw_value;
    cal.raw_error = std::abs(cal.raw_value - 1.0);
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, cal);
    return cal;
}

/// Estimate of (-Delta)^{alpha/2} u from the weighted normal derivative of the extension.
inline GridFunction recover_trace(const ExtensionField& f, const FracParams& params, const ExtensionConfig& cfg) {
    GridFunction out = detail::raw_trace(f);
    if (cfg.calibrate) {
        const double factor = calibrate_trace(params, cfg).factor;
        for (double& v : out.values()) v *= factor;
    }
    return out;
}

struct CrossValidation {
    std::vector<double> x;
    std::vector<double> direct;
    std::vector<double> trace;
    std::vector<double> rel_diff;  ///< |trace - direct| / |direct|, 0 where both vanish
    double max = 0.0;
    double median = 0.0;
};

/// Compares recover_trace(solve_extension(u)) with assemble_discrete on the nodes whose distance
/// to the complement of `domain` is at least `min_distance`.
inline CrossValidation cross_validate(const GridFunction& u, const ExtensionConfig& cfg, const FracParams& params,
                                      double domain_half_width = 1.0, double min_distance = 0.1) {
    const GridFunction direct = assemble_discrete(u.grid(), params).apply(u);
    const GridFunction trace = recover_trace(solve_extension(u, cfg, params), params, cfg);
    const Grid& g = u.grid();
    CrossValidation out;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double x = g.coordinate(k).x;
        if (domain_half_width - std::abs(x) < min_distance - 1e-12) continue;
        const double a = direct[k], b = trace[k];
        const double rel = (a == 0.0 && b == 0.0) ? 0.0 : std::abs(b - a) / std::abs(a);
        out.x.push_back(x);
        out.direct.push_back(a);
        out.trace.push_back(b);
        out.rel_diff.push_back(rel);
    }
    if (out.rel_diff.empty()) throw ParameterError("no nodes satisfy the distance requirement");
    std::vector<double> sorted = out.rel_diff;
    std::sort(sorted.begin(), sorted.end());
    out.max = sorted.back();
    const std::size_t n = sorted.size();
    out.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return out;
}

}  // namespace fraclap
