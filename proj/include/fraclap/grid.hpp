#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"

namespace fraclap {

/// Uniform grid covering [-R, R]^n with spacing h. The origin is a node and
/// there are 2N+1 nodes per axis, N = R/h.
class Grid {
public:
    Grid(int dim, double h, double extent) : dim_(dim), h_(h) {
        if (dim != 1 && dim != 2) throw ParameterError("grid dimension must be 1 or 2");
        if (!(h > 0.0) || !(extent > 0.0)) throw ParameterError("grid spacing and extent must be positive");
        const double ratio = extent / h;
        half_ = static_cast<long>(std::llround(ratio));
        if (half_ < 1 || std::abs(ratio - static_cast<double>(half_)) > 1e-9 * ratio)
            throw ParameterError("grid extent " + std::to_string(extent) + " is not a multiple of h = " +
                                 std::to_string(h));
    }

    int dim() const noexcept { return dim_; }
    double h() const noexcept { return h_; }
    long half_count() const noexcept { return half_; }
    double extent() const noexcept { return static_cast<double>(half_) * h_; }
    std::size_t per_axis() const noexcept { return static_cast<std::size_t>(2 * half_ + 1); }
    std::size_t size() const noexcept { return dim_ == 1 ? per_axis() : per_axis() * per_axis(); }

    /// Linear index of the node with signed offsets (i, j) from the origin.
    std::size_t linear(long i, long j = 0) const noexcept {
        const auto ii = static_cast<std::size_t>(i + half_);
        if (dim_ == 1) return ii;
        return ii + per_axis() * static_cast<std::size_t>(j + half_);
    }
    long offset_x(std::size_t idx) const noexcept {
        return static_cast<long>(idx % per_axis()) - half_;
    }
    long offset_y(std::size_t idx) const noexcept {
        return dim_ == 1 ? 0 : static_cast<long>(idx / per_axis()) - half_;
    }

    Point coordinate(std::size_t idx) const noexcept {
        return {static_cast<double>(offset_x(idx)) * h_, static_cast<double>(offset_y(idx)) * h_};
    }

    /// Nearest node to p (p must lie within the extent).
    std::size_t index(Point p) const {
        const long i = std::lround(p.x / h_);
        const long j = dim_ == 1 ? 0 : std::lround(p.y / h_);
        if (std::abs(i) > half_ || std::abs(j) > half_) throw ParameterError("point outside grid extent");
        return linear(i, j);
    }

    bool contains(Point p) const noexcept {
        const double r = extent();
        if (std::abs(p.x) > r) return false;
        return dim_ == 1 ? true : std::abs(p.y) <= r;
    }

    /// Nodes strictly inside the extent.
    bool is_interior(std::size_t idx) const noexcept {
        if (std::abs(offset_x(idx)) >= half_) return false;
        return dim_ == 1 || std::abs(offset_y(idx)) < half_;
    }

    std::vector<std::size_t> interior_nodes() const {
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < size(); ++k)
            if (is_interior(k)) out.push_back(k);
        return out;
    }

    bool operator==(const Grid& o) const noexcept {
        return dim_ == o.dim_ && h_ == o.h_ && half_ == o.half_;
    }

private:
    int dim_;
    double h_;
    long half_;
};

/// Node values on a Grid, extended by zero outside the stored extent.
class GridFunction {
public:
    explicit GridFunction(Grid grid) : grid_(grid), values_(grid.size(), 0.0) {}
    GridFunction(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size()) throw ParameterError("value count does not match grid size");
        for (double v : values_)
            if (!std::isfinite(v)) throw InputError("grid function value is not finite");
    }

    /// Samples a field at every node.
    static GridFunction sample(const Grid& grid, const FieldFn& u) {
        std::vector<double> v(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) v[k] = u(grid.coordinate(k));
        return GridFunction(grid, std::move(v));
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }
    double& operator[](std::size_t k) noexcept { return values_[k]; }

    /// Multilinear interpolation inside the extent, exactly 0 outside.
    double at(Point p) const {
        if (!grid_.contains(p)) return 0.0;
        const double h = grid_.h();
        const long n = grid_.half_count();
        auto split = [&](double c, long& i0, double& t) {
            const double s = c / h;
            i0 = static_cast<long>(std::floor(s));
            if (i0 >= n) i0 = n - 1;
            if (i0 < -n) i0 = -n;
            t = s - static_cast<double>(i0);
        };
        long ix = 0;
        double tx = 0.0;
        split(p.x, ix, tx);
        if (grid_.dim() == 1) return (1.0 - tx) * values_[grid_.linear(ix)] + tx * values_[grid_.linear(ix + 1)];
        long iy = 0;
        double ty = 0.0;
        split(p.y, iy, ty);
        return (1.0 - tx) * (1.0 - ty) * values_[grid_.linear(ix, iy)] +
               tx * (1.0 - ty) * values_[grid_.linear(ix + 1, iy)] +
               (1.0 - tx) * ty * values_[grid_.linear(ix, iy + 1)] + tx * ty * values_[grid_.linear(ix + 1, iy + 1)];
    }

    double max_abs() const noexcept {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

}  // namespace fraclap
