#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "errors.hpp"

namespace fraclap {

/// Symmetric Toeplitz matrix T(i,j) = column[|i-j|], applied through a circulant
/// embedding of power-of-two length. The embedding is a symmetric diagonally dominant
/// circulant whenever T is a diagonally dominant Z-matrix, so its inverse restricted
/// to the first rows doubles as an SPD preconditioner.
class ToeplitzOperator {
public:
    ToeplitzOperator() = default;
    explicit ToeplitzOperator(std::vector<double> column) : column_(std::move(column)) {
        if (column_.empty()) throw ParameterError("Toeplitz operator needs at least one entry");
        const std::size_t n = column_.size();
        length_ = 1;
        while (length_ < 2 * n) length_ <<= 1;
        std::vector<double> c(length_, 0.0);
        c[0] = column_[0];
        for (std::size_t k = 1; k < n; ++k) {
            c[k] = column_[k];
            c[length_ - k] = column_[k];
        }
        Eigen::FFT<double> fft;
        std::vector<std::complex<double>> spec;
        fft.fwd(spec, c);
        spectrum_.resize(length_);
        for (std::size_t k = 0; k < length_; ++k) spectrum_[k] = spec[k].real();
    }

    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(column_.size()); }
    Eigen::Index cols() const noexcept { return size(); }
    const std::vector<double>& column() const noexcept { return column_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return circulant(x, false); }

    /// First rows of the embedding circulant's inverse applied to [r; 0].
    Eigen::VectorXd precondition(const Eigen::VectorXd& r) const { return circulant(r, true); }

    /// Leading principal block of size m.
    ToeplitzOperator leading(std::size_t m) const {
        if (m == 0 || m > column_.size()) throw ParameterError("invalid Toeplitz block size");
        return ToeplitzOperator(std::vector<double>(column_.begin(), column_.begin() + static_cast<long>(m)));
    }

    Eigen::MatrixXd dense() const {
        const Eigen::Index n = size();
        Eigen::MatrixXd a(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) a(i, j) = column_[static_cast<std::size_t>(std::abs(i - j))];
        return a;
    }

    friend Eigen::VectorXd operator*(const ToeplitzOperator& t, const Eigen::VectorXd& x) { return t.apply(x); }

private:
    Eigen::VectorXd circulant(const Eigen::VectorXd& x, bool inverse) const {
        if (x.size() != size()) throw ParameterError("Toeplitz operand has the wrong length");
        Eigen::FFT<double> fft;
        std::vector<double> pad(length_, 0.0);
        for (Eigen::Index i = 0; i < x.size(); ++i) pad[static_cast<std::size_t>(i)] = x(i);
        std::vector<std::complex<double>> f;
        fft.fwd(f, pad);
        for (std::size_t k = 0; k < length_; ++k) f[k] = inverse ? f[k] / spectrum_[k] : f[k] * spectrum_[k];
        std::vector<double> back;
        fft.inv(back, f);
        Eigen::VectorXd y(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = back[static_cast<std::size_t>(i)];
        return y;
    }

    std::vector<double> column_;
    std::size_t length_ = 0;
    std::vector<double> spectrum_;
};

}  // namespace fraclap
