#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace fraclap {

namespace detail {

inline void check_order(int n, double alpha) {
    if (n != 1 && n != 2)
        throw ParameterError("dimension must be 1 or 2, got " + std::to_string(n));
    if (!(alpha > 0.0 && alpha < 2.0))
        throw ParameterError("order out of (0,2): alpha = " + std::to_string(alpha));
}

}  // namespace detail

/// Constant making the symbol of (-Delta)^{alpha/2} exactly |xi|^alpha:
/// alpha 2^{alpha-1} Gamma((n+alpha)/2) / (pi^{n/2} Gamma(1-alpha/2)).
inline double normalization_constant(int n, double alpha) {
    detail::check_order(n, alpha);
    return alpha * std::pow(2.0, alpha - 1.0) * std::tgamma(0.5 * (n + alpha)) /
           (std::pow(std::numbers::pi, 0.5 * n) * std::tgamma(1.0 - 0.5 * alpha));
}

/// (-Delta)^{alpha/2} (1-|x|^2)_+^{alpha/2} = kappa inside the unit ball.
inline double ball_torsion_constant(int n, double alpha) {
    detail::check_order(n, alpha);
    return std::pow(2.0, alpha) * std::tgamma(1.0 + 0.5 * alpha) * std::tgamma(0.5 * (n + alpha)) /
           std::tgamma(0.5 * n);
}

/// Surface measure of the unit sphere in R^n for n = 1, 2.
inline double unit_sphere_measure(int n) {
    if (n == 1) return 2.0;
    if (n == 2) return 2.0 * std::numbers::pi;
    throw ParameterError("dimension must be 1 or 2, got " + std::to_string(n));
}

/// Upper end of the subcritical window for u^p: (n+alpha)/(n-alpha), or +inf when n <= alpha.
inline double critical_exponent(int n, double alpha) {
    detail::check_order(n, alpha);
    if (n <= alpha) return std::numeric_limits<double>::infinity();
    return (n + alpha) / (n - alpha);
}

/// Dimension, order and the cached normalization constant of the operator.
class FracParams {
public:
    FracParams(int n, double alpha) : n_(n), alpha_(alpha), c_norm_(normalization_constant(n, alpha)) {}

    int n() const noexcept { return n_; }
    double alpha() const noexcept { return alpha_; }
    double c_norm() const noexcept { return c_norm_; }
    double kappa() const { return ball_torsion_constant(n_, alpha_); }

    bool operator==(const FracParams&) const = default;

private:
    int n_;
    double alpha_;
    double c_norm_;
};

}  // namespace fraclap
