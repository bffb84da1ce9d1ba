#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace fraclap::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
inline Rule gauss_legendre(int n) {
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

/// n-point Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^a (1+x)^b, by Golub-Welsch.
inline Rule gauss_jacobi(int n, double a, double b) {
    Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + a + b;
        jm(k, k) = k == 0 ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
        if (k + 1 < n) {
            const double j = k + 1.0;
            const double t = 2.0 * j + a + b;
            const double beta = 4.0 * j * (j + a) * (j + b) * (j + a + b) / (t * t * (t + 1.0) * (t - 1.0));
            jm(k, k + 1) = jm(k + 1, k) = std::sqrt(beta);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jm);
    const double mu0 = std::pow(2.0, a + b + 1.0) * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) /
                       std::tgamma(a + b + 2.0);
    Rule r;
    for (int k = 0; k < n; ++k) {
        r.nodes.push_back(es.eigenvalues()(k));
        const double v = es.eigenvectors()(0, k);
        r.weights.push_back(mu0 * v * v);
    }
    return r;
}

namespace detail {

// Kronrod 15-point abscissae/weights with the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace detail

struct Segment {
    double a = 0.0;
    double b = 0.0;
    double value = 0.0;
    double error = 0.0;
};

/// One Gauss-Kronrod 15 panel. Nodes are interior, endpoints are never sampled.
template <class F>
Segment gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    const double fc = f(c);
    double rk = fc * detail::wgk[7];
    double rg = fc * detail::wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = hl * detail::xgk[j];
        const double s = f(c - dx) + f(c + dx);
        rk += detail::wgk[j] * s;
        if (j % 2 == 1) rg += detail::wg[j / 2] * s;
    }
    return {a, b, rk * hl, std::abs((rk - rg) * hl)};
}

struct Result {
    double value = 0.0;
    double error = 0.0;
    std::size_t subdivisions = 0;
    bool converged = false;
};

/// Globally adaptive Gauss-Kronrod integration over the partition given by `breaks`
/// (sorted, at least two entries). The segment with the largest error is bisected
/// until the summed error estimate drops below `abs_tol` or `max_subdivisions`
/// bisections have been spent. The final sum runs over segments in increasing
/// abscissa, so the result does not depend on the refinement order.
template <class F>
Result integrate(F&& f, std::span<const double> breaks, double abs_tol, std::size_t max_subdivisions) {
    auto worse = [](const Segment& l, const Segment& r) {
        if (l.error != r.error) return l.error < r.error;
        return l.a > r.a;
    };
    std::priority_queue<Segment, std::vector<Segment>, decltype(worse)> heap(worse);
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) continue;
        Segment s = gk15(f, breaks[i], breaks[i + 1]);
        total_err += s.error;
        heap.push(s);
    }
    Result res;
    while (total_err > abs_tol && res.subdivisions < max_subdivisions && !heap.empty()) {
        Segment s = heap.top();
        const double mid = 0.5 * (s.a + s.b);
        if (!(mid > s.a && mid < s.b)) break;
        heap.pop();
        const Segment l = gk15(f, s.a, mid);
        const Segment r = gk15(f, mid, s.b);
        total_err += l.error + r.error - s.error;
        heap.push(l);
        heap.push(r);
        ++res.subdivisions;
        if (res.subdivisions % 64 == 0) {
            // resum to avoid drift in the running error total
            auto copy = heap;
            total_err = 0.0;
            while (!copy.empty()) {
                total_err += copy.top().error;
                copy.pop();
            }
        }
    }
    std::vector<Segment> segs;
    segs.reserve(heap.size());
    while (!heap.empty()) {
        segs.push_back(heap.top());
        heap.pop();
    }
    std::sort(segs.begin(), segs.end(), [](const Segment& l, const Segment& r) { return l.a < r.a; });
    for (const Segment& s : segs) {
        res.value += s.value;
        res.error += s.error;
    }
    res.converged = res.error <= abs_tol;
    return res;
}

template <class F>
Result integrate(F&& f, double a, double b, double abs_tol, std::size_t max_subdivisions) {
    const std::array<double, 2> br{a, b};
    return integrate(f, std::span<const double>(br), abs_tol, max_subdivisions);
}

}  // namespace fraclap::quad
