#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace fraclap {

/// A point of R^1 or R^2. One-dimensional code keeps y = 0.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
    bool operator==(const Point&) const = default;
};

inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double norm2(Point p) { return p.x * p.x + p.y * p.y; }

/// Asymptotic class of a field, certifying membership in L_alpha and telling the
/// evaluator how to treat the far field.
struct Growth {
    enum class Kind {
        compact,      ///< u = 0 for |x| > radius
        power_law,    ///< |u(x)| <= bound (1+|x|)^{-rate}, non-oscillatory; rate > -alpha
        oscillatory,  ///< |u| <= bound, oscillating about far_mean
    };

    Kind kind = Kind::power_law;
    double bound = 1.0;
    double rate = 0.0;
    double radius = 0.0;
    double far_mean = 0.0;

    static Growth compact(double radius, double bound) {
        return {Kind::compact, bound, 0.0, radius, 0.0};
    }
    static Growth power_law(double bound, double rate) { return {Kind::power_law, bound, rate, 0.0, 0.0}; }
    static Growth oscillatory(double bound, double far_mean) {
        return {Kind::oscillatory, bound, 0.0, 0.0, far_mean};
    }
};

/// Sphere {|x - center| = radius} across which a field loses smoothness.
/// radius = 0 marks an isolated point.
struct Kink {
    Point center;
    double radius = 0.0;
};

/// Scalar field x -> u(x) with a declared growth class and its non-smooth set.
class FieldFn {
public:
    using Rule = std::function<double(const Point&)>;

    FieldFn() = default;
    FieldFn(Rule rule, Growth growth, std::vector<Kink> kinks = {})
        : rule_(std::move(rule)), growth_(growth), kinks_(std::move(kinks)) {}

    double operator()(const Point& p) const { return rule_(p); }
    const Growth& growth() const noexcept { return growth_; }
    const std::vector<Kink>& kinks() const noexcept { return kinks_; }

private:
    Rule rule_;
    Growth growth_;
    std::vector<Kink> kinks_;
};

/// x -> u(x - shift).
inline FieldFn translate(const FieldFn& u, Point shift) {
    std::vector<Kink> kinks = u.kinks();
    for (auto& k : kinks) k.center = k.center + shift;
    Growth g = u.growth();
    const double s = norm(shift);
    switch (g.kind) {
        case Growth::Kind::compact: g.radius += s; break;
        case Growth::Kind::power_law: g.bound *= std::pow(1.0 + s, std::abs(g.rate)); break;
        case Growth::Kind::oscillatory: break;
    }
    return FieldFn([u, shift](const Point& p) { return u(p - shift); }, g, std::move(kinks));
}

/// a*u + b*v. The growth class is the weaker of the two.
inline FieldFn linear_combination(double a, const FieldFn& u, double b, const FieldFn& v) {
    const Growth& gu = u.growth();
    const Growth& gv = v.growth();
    Growth g;
    using K = Growth::Kind;
    if (gu.kind == K::oscillatory || gv.kind == K::oscillatory) {
        const double mu = gu.kind == K::oscillatory ? gu.far_mean : 0.0;
        const double mv = gv.kind == K::oscillatory ? gv.far_mean : 0.0;
        g = Growth::oscillatory(std::abs(a) * gu.bound + std::abs(b) * gv.bound, a * mu + b * mv);
    } else if (gu.kind == K::compact && gv.kind == K::compact) {
        g = Growth::compact(std::max(gu.radius, gv.radius), std::abs(a) * gu.bound + std::abs(b) * gv.bound);
    } else {
        const double ru = gu.kind == K::compact ? 1e300 : gu.rate;
        const double rv = gv.kind == K::compact ? 1e300 : gv.rate;
        const double rate = std::min(ru, rv);
        // compact parts are bounded by bound*(1+radius)^rate * (1+|x|)^{-rate}
        auto lift = [rate](const Growth& q) {
            if (q.kind == K::compact) return q.bound * std::pow(1.0 + q.radius, std::max(rate, 0.0));
            return q.bound;
        };
        g = Growth::power_law(std::abs(a) * lift(gu) + std::abs(b) * lift(gv), rate);
    }
    std::vector<Kink> kinks = u.kinks();
    kinks.insert(kinks.end(), v.kinks().begin(), v.kinks().end());
    return FieldFn([a, u, b, v](const Point& p) { return a * u(p) + b * v(p); }, g, std::move(kinks));
}

/// Checks the declared growth bound on the given probes (|x| <= 1e3 in practice).
inline bool honors_growth(const FieldFn& u, std::span<const Point> probes) {
    const Growth& g = u.growth();
    const double slack = 1.0 + 1e-12;
    for (const Point& p : probes) {
        const double v = u(p);
        if (!std::isfinite(v)) return false;
        const double r = norm(p);
        switch (g.kind) {
            case Growth::Kind::compact:
                if (r > g.radius && v != 0.0) return false;
                if (std::abs(v) > g.bound * slack) return false;
                break;
            case Growth::Kind::power_law:
                if (std::abs(v) > g.bound * std::pow(1.0 + r, -g.rate) * slack) return false;
                break;
            case Growth::Kind::oscillatory:
                if (std::abs(v) > g.bound * slack) return false;
                break;
        }
    }
    return true;
}

/// Analytic test fields.
namespace fields {

inline FieldFn constant(double value) {
    return FieldFn([value](const Point&) { return value; }, Growth::power_law(std::abs(value), 0.0));
}

/// cos(xi . x)
inline FieldFn cosine(Point xi) {
    return FieldFn([xi](const Point& p) { return std::cos(xi.x * p.x + xi.y * p.y); },
                   Growth::oscillatory(1.0, 0.0));
}

inline FieldFn gaussian(double width = 1.0) {
    const double s2 = width * width;
    // exp(-r^2/w^2) <= (1+r)^{-q} * C with q = 8 and C = max over r
    const double q = 8.0;
    double c = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double r = 0.01 * i * width;
        c = std::max(c, std::exp(-r * r / s2) * std::pow(1.0 + r, q));
    }
    return FieldFn([s2](const Point& p) { return std::exp(-norm2(p) / s2); },
                   Growth::power_law(c * 1.01, q));
}

/// 1/(1+|x|^2)
inline FieldFn lorentzian() {
    return FieldFn([](const Point& p) { return 1.0 / (1.0 + norm2(p)); }, Growth::power_law(2.0, 2.0));
}

/// exp(1 - 1/(1-(|x|/radius)^2)) inside the ball, 0 outside; C-infinity, peak value 1.
inline FieldFn smooth_bump(double radius = 1.0) {
    return FieldFn(
        [radius](const Point& p) {
            const double t = norm2(p) / (radius * radius);
            if (t >= 1.0) return 0.0;
            return std::exp(1.0 - 1.0 / (1.0 - t));
        },
        Growth::compact(radius, 1.0));
}

}  // namespace fields

}  // namespace fraclap
