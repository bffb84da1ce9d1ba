#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "operator.hpp"
#include "params.hpp"

namespace fraclap {

/// c_norm (1 - |x-z|^2)_+^{alpha/2}.
inline double psi1(Point x, Point z, const FracParams& params) {
    const double t = 1.0 - norm2(x - z);
    if (t <= 0.0) return 0.0;
    return params.c_norm() * std::pow(t, 0.5 * params.alpha());
}

inline FieldFn psi1_field(Point z, const FracParams& params) {
    return FieldFn([z, params](const Point& p) { return psi1(p, z, params); },
                   Growth::compact(norm(z) + 1.0, params.c_norm()), {Kink{z, 1.0}});
}

/// x -> |x|^{alpha-n} f(x/|x|^2). Throws DomainError at x = 0.
/// Compactly supported inputs get an exact growth class; other inputs get a nominal
/// rate n - alpha class, valid when the result stays bounded near the origin.
inline FieldFn kelvin_transform(const FieldFn& f, const FracParams& params) {
    const double e = params.alpha() - params.n();
    const double q = -e;
    const Growth& gf = f.growth();
    Growth g;
    if (gf.kind == Growth::Kind::compact) {
        g = Growth::power_law(gf.bound * std::max(1.0, std::pow(1.0 + gf.radius, q)), q);
    } else {
        g = Growth::power_law(gf.bound * std::pow(2.0, std::abs(q) + std::abs(gf.rate)), q);
    }
    std::vector<Kink> kinks{Kink{{0.0, 0.0}, 0.0}};
    for (const Kink& k : f.kinks()) {
        const double den = norm2(k.center) - k.radius * k.radius;
        if (std::abs(den) < 1e-14) continue;  // sphere through the origin maps to a plane
        kinks.push_back(Kink{(1.0 / den) * k.center, k.radius / std::abs(den)});
    }
    return FieldFn(
        [f, e](const Point& x) {
            const double r2 = norm2(x);
            if (r2 == 0.0) throw DomainError("Kelvin transform is undefined at the origin");
            return std::pow(r2, 0.5 * e) * f((1.0 / r2) * x);
        },
        g, std::move(kinks));
}

/// Kelvin transform of psi1 centered at the origin; vanishes on the closed unit ball.
inline FieldFn psi2_field(const FracParams& params) { return kelvin_transform(psi1_field({0.0, 0.0}, params), params); }

/// C with psi2(x) <= C (|x| - 1)^{alpha/2} for 1 <= |x| <= 3.
inline double psi2_halfpower_constant(const FracParams& params) {
    return params.c_norm() * std::pow(2.0, 0.5 * params.alpha());
}

struct Psi2Probe {
    Point x;
    double lhs = 0.0;  ///< operator of psi2 per unit amplitude of psi1
    double rhs = 0.0;  ///< kappa |x|^{-n-alpha}
    double rel_err = 0.0;
};

struct Psi2Report {
    std::vector<Psi2Probe> probes;
    double worst = 0.0;
};

/// Compares (-Delta)^{alpha/2} psi2 / c_norm with kappa |x|^{-n-alpha} at each probe.
inline Psi2Report verify_psi2_identity(const FracParams& params, std::span<const Point> probes,
                                       const QuadConfig& cfg = {}) {
    for (const Point& p : probes)
        if (!(norm(p) > 1.0)) throw ParameterError("psi2 probes must lie outside the closed unit ball");
    Psi2Report report;
    const FieldFn psi2 = psi2_field(params);
    for (const Point& p : probes) {
        Psi2Probe out{p};
        out.lhs = eval_point_pv(psi2, p, params, cfg).value / params.c_norm();
        out.rhs = params.kappa() * std::pow(norm(p), -params.n() - params.alpha());
        out.rel_err = std::abs(out.lhs - out.rhs) / std::abs(out.rhs);
        report.worst = std::max(report.worst, out.rel_err);
        report.probes.push_back(out);
    }
    return report;
}

namespace detail {
inline double bump_edge(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
}  // namespace detail

/// xi(x) = f(s) / (f(s) + f(1-s)), s = (|x|-1)/2, f(t) = exp(-1/t) for t > 0 and 0 otherwise.
/// Exactly 0 on |x| <= 1, exactly 1 on |x| >= 3, C-infinity and nondecreasing in |x|.
inline double smooth_cutoff(Point x) {
    const double s = 0.5 * (norm(x) - 1.0);
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double a = detail::bump_edge(s);
    return a / (a + detail::bump_edge(1.0 - s));
}

inline FieldFn cutoff_field(Point center = {}) {
    return FieldFn([center](const Point& p) { return smooth_cutoff(p - center); }, Growth::power_law(1.0, 0.0));
}

/// Comparison function phi = k psi2(. - z) + xi(. - z) on the annulus 1 <= |x - z| <= 3.
struct BarrierSpec {
    Point z;
    Point touch;          ///< boundary touch point, |touch - z| = 1
    double k = 0.0;
    double c_xi = 0.0;    ///< bound on |(-Delta)^{alpha/2} xi| over the annulus
    double holder_constant = 0.0;
    FracParams params{1, 1.0};
    FieldFn phi;
    double min_verified = 0.0;  ///< smallest operator value seen on the verification lattice

    bool in_annulus(Point x) const {
        const double r = norm(x - z);
        return r >= 1.0 && r <= 3.0;
    }
    /// phi vanishes on the closed ball B1(z), including z where the Kelvin transform is undefined.
    double operator()(Point x) const { return norm2(x - z) <= 1.0 ? 0.0 : phi(x); }
};

struct BarrierConfig {
    QuadConfig quad{};
    int probes_per_side = 40;   ///< lattice for the cutoff bound (n=1: per side; n=2: radial count)
    int verification_points = 100;
    int max_doublings = 5;
};

namespace detail {

/// Points with 1 < |x - z| < 3: for n = 1 split evenly on both sides, for n = 2 a polar lattice.
inline std::vector<Point> annulus_lattice(Point z, int n, int count) {
    std::vector<Point> out;
    if (n == 1) {
        const int half = std::max(1, count / 2);
        for (int side : {-1, 1})
            for (int i = 0; i < half; ++i) out.push_back({z.x + side * (1.0 + 2.0 * (i + 0.5) / half), 0.0});
        return out;
    }
    const int radial = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(count)))));
    const int angular = std::max(1, count / radial);
    for (int i = 0; i < radial; ++i) {
        const double r = 1.0 + 2.0 * (i + 0.5) / radial;
        for (int j = 0; j < angular; ++j) {
            const double th = 2.0 * std::numbers::pi * (j + 0.5) / angular;
            out.push_back({z.x + r * std::cos(th), z.y + r * std::sin(th)});
        }
    }
    return out;
}

// sup over 1 < r <= 3 of xi(r)/(r-1)^{alpha/2}, from a fine sweep
inline double cutoff_halfpower_constant(double alpha) {
    double best = 0.0;
    for (int i = 1; i <= 4000; ++i) {
        const double r = 1.0 + 2.0 * i / 4000.0;
        best = std::max(best, smooth_cutoff({r, 0.0}) / std::pow(r - 1.0, 0.5 * alpha));
    }
    return 1.01 * best;
}

}  // namespace detail

/// Builds phi with B1(z) externally tangent to the domain at `touch`, z = touch + outward.
/// k = (1 + C_xi) 3^{n+alpha} / (c_norm kappa); then (-Delta)^{alpha/2} phi >= 1 is checked
/// on a lattice in the annulus, doubling k on failure.
inline BarrierSpec composite_barrier(Point touch, Point outward, const FracParams& params,
                                     const BarrierConfig& cfg = {}) {
    if (!std::isfinite(touch.x) || !std::isfinite(touch.y)) throw ParameterError("touch point must be finite");
    if (params.n() == 1) {
        touch.y = 0.0;
        outward.y = 0.0;
    }
    const double len = norm(outward);
    if (!(len > 0.0) || !std::isfinite(len)) throw ParameterError("outward direction must be a nonzero vector");
    BarrierSpec spec;
    spec.params = params;
    spec.touch = touch;
    spec.z = touch + (1.0 / len) * outward;

    const FieldFn xi = cutoff_field(spec.z);
    double c_xi = 0.0;
    for (const Point& p : detail::annulus_lattice(spec.z, params.n(), 2 * cfg.probes_per_side))
        c_xi = std::max(c_xi, std::abs(eval_point_pv(xi, p, params, cfg.quad).value));
    spec.c_xi = 1.5 * c_xi;

    const FieldFn psi2 = translate(psi2_field(params), spec.z);
    const std::vector<Point> lattice = detail::annulus_lattice(spec.z, params.n(), cfg.verification_points);
    double k = (1.0 + spec.c_xi) * std::pow(3.0, params.n() + params.alpha()) / (params.c_norm() * params.kappa());
    std::vector<double> op_psi2, op_xi;
    for (const Point& p : lattice) {
        op_psi2.push_back(eval_point_pv(psi2, p, params, cfg.quad).value);
        op_xi.push_back(eval_point_pv(xi, p, params, cfg.quad).value);
    }
    for (int attempt = 0; attempt <= cfg.max_doublings; ++attempt, k *= 2.0) {
        FieldFn phi = linear_combination(k, psi2, 1.0, xi);
        double low = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < lattice.size(); ++i) low = std::min(low, k * op_psi2[i] + op_xi[i]);
        if (low >= 1.0) {
            spec.k = k;
            spec.phi = std::move(phi);
            spec.min_verified = low;
            spec.holder_constant =
                k * psi2_halfpower_constant(params) + detail::cutoff_halfpower_constant(params.alpha());
            return spec;
        }
    }
    throw ConstructionError("barrier verification failed after doubling k " + std::to_string(cfg.max_doublings) +
                            " times");
}

/// Outward direction taken as touch/|touch| (away from the origin).
inline BarrierSpec composite_barrier(Point touch, const FracParams& params, const BarrierConfig& cfg = {}) {
    if (norm(touch) == 0.0) throw ParameterError("outward direction is undefined for a touch point at the origin");
    return composite_barrier(touch, touch, params, cfg);
}

/// B |x - touch|^{alpha/2}, bounding phi(x) - phi(touch) on the annulus.
inline double holder_halfpower_bound(Point x, Point touch, const BarrierSpec& spec) {
    if (spec.params.n() == 1) {
        x.y = 0.0;
        touch.y = 0.0;
    }
    const double r = norm(x - spec.z);
    if (!(r >= 1.0 - 1e-12 && r <= 3.0 + 1e-12)) throw ParameterError("point lies outside the barrier annulus");
    return spec.holder_constant * std::pow(norm(x - touch), 0.5 * spec.params.alpha());
}

inline double holder_halfpower_bound(Point x, const BarrierSpec& spec) {
    return holder_halfpower_bound(x, spec.touch, spec);
}

}  // namespace fraclap
