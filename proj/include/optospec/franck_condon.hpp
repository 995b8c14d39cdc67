#pragma once

// Displaced-number-state overlaps <m| D(beta0) |n> and the associated
// Laguerre polynomials they are built from.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace optospec {

/// Largest n + s accepted by laguerre_assoc.
inline constexpr unsigned kLaguerreMaxOrder = 512;

/// Associated Laguerre polynomial L_n^s(x) by the three-term recurrence in n.
inline double laguerre_assoc(unsigned n, unsigned s, double x) {
    auto where = [&] {
        return "(n=" + std::to_string(n) + ", s=" + std::to_string(s) + ", x=" + num(x) + ")";
    };
    if (!(x >= 0.0) || !std::isfinite(x))
        throw InvalidParameter("laguerre_assoc: x must be finite and non-negative " + where());
    if (n + s > kLaguerreMaxOrder)
        throw RangeError("laguerre_assoc: order outside supported range n+s<=512 " + where());

    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = 1.0 + s - x;
    for (unsigned k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0 + s - x) * cur - (k + s) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
        if (!std::isfinite(cur)) throw RangeError("laguerre_assoc: overflow " + where());
    }
    return cur;
}

/// <m|n~> with |n~> = exp[beta0 (b^dagger - b)] |n>. Real for real beta0.
///
/// The prefactor sqrt(min!/max!) beta0^|m-n| e^{-beta0^2/2} is assembled in
/// log space so that large index gaps neither overflow nor lose digits.
inline double overlap(unsigned m, unsigned n, double beta_0) {
    if (!(beta_0 >= 0.0) || !std::isfinite(beta_0))
        throw InvalidParameter("overlap: beta_0 must be finite and non-negative");
    if (beta_0 == 0.0) return m == n ? 1.0 : 0.0;

    const unsigned lo = std::min(m, n);
    const unsigned gap = std::max(m, n) - lo;
    const double log_prefactor = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(lo + gap + 1.0)) +
                                 gap * std::log(beta_0) - 0.5 * beta_0 * beta_0;
    const double lag = laguerre_assoc(lo, gap, beta_0 * beta_0);
    // (-beta0)^(n-m) branch when n >= m.
    const double sign = (n > m && (gap % 2 == 1)) ? -1.0 : 1.0;
    return sign * std::exp(log_prefactor) * lag;
}

/// Table O(m, n) = <m|n~> for 0 <= m, n < dim.
class OverlapMatrix {
public:
    OverlapMatrix(std::size_t dim, double beta_0) : beta_0_(beta_0), entries_(dim, dim) {
        if (dim < 1) throw InvalidParameter("overlap_matrix: dim must be >= 1");
        for (std::size_t m = 0; m < dim; ++m)
            for (std::size_t n = 0; n < dim; ++n)
                entries_(m, n) = overlap(static_cast<unsigned>(m), static_cast<unsigned>(n), beta_0);

        col_deficit_.resize(dim);
        row_deficit_.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            double col = 0.0, row = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                col += entries_(j, i) * entries_(j, i);
                row += entries_(i, j) * entries_(i, j);
            }
            col_deficit_[i] = std::max(0.0, 1.0 - col);
            row_deficit_[i] = std::max(0.0, 1.0 - row);
        }
        worst_defect_ = orthonormality_defect(dim);
    }

    std::size_t dim() const noexcept { return entries_.rows(); }
    double beta_0() const noexcept { return beta_0_; }
    double operator()(std::size_t m, std::size_t n) const noexcept { return entries_(m, n); }
    const Matrix<double>& entries() const noexcept { return entries_; }

    /// 1 - sum_m O(m,n)^2: probability of |n~> lying above the cutoff.
    double column_norm_deficit(std::size_t n) const { return col_deficit_.at(n); }
    /// 1 - sum_n O(m,n)^2: weight of |m> outside the retained displaced states.
    double row_norm_deficit(std::size_t m) const { return row_deficit_.at(m); }

    /// Worst |sum_m O(m,n) O(m,n') - delta_{nn'}| over n, n' < n_cols.
    double orthonormality_defect(std::size_t n_cols) const {
        n_cols = std::min(n_cols, dim());
        double worst = 0.0;
        for (std::size_t a = 0; a < n_cols; ++a)
            for (std::size_t b = a; b < n_cols; ++b) {
                double dot = 0.0;
                for (std::size_t m = 0; m < dim(); ++m) dot += entries_(m, a) * entries_(m, b);
                worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
            }
        return worst;
    }

    /// Defect over every column; large near the cutoff by construction.
    double worst_defect() const noexcept { return worst_defect_; }

private:
    double beta_0_;
    Matrix<double> entries_;
    std::vector<double> col_deficit_;
    std::vector<double> row_deficit_;
    double worst_defect_ = 0.0;
};

inline OverlapMatrix overlap_matrix(std::size_t dim, double beta_0) { return OverlapMatrix(dim, beta_0); }

}  // namespace optospec
