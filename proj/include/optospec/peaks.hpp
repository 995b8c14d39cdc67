#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "spectrum.hpp"

namespace optospec {

struct Peak {
    double location = 0.0;
    double height = 0.0;
    double width = 0.0;  // full width at half height (half depth for dips); 0 if unresolved
    bool is_dip = false;
};

namespace detail {

struct Vertex {
    double offset;  // in grid steps, within [-0.5, 0.5]
    double value;
};

// Vertex of the parabola through (i-1, i, i+1).
inline Vertex parabolic_vertex(double left, double mid, double right) {
    const double curvature = left - 2.0 * mid + right;
    if (curvature == 0.0) return {0.0, mid};
    const double p = std::clamp(0.5 * (left - right) / curvature, -0.5, 0.5);
    return {p, mid - 0.25 * (left - right) * p};
}

// Distance between the crossings of `level` on either side of index i,
// searching no further than [lo, hi]. Linear interpolation between samples.
inline double crossing_width(std::span<const double> x, std::span<const double> y, std::size_t i, std::size_t lo,
                             std::size_t hi, double level, bool above) {
    auto beyond = [&](double v) { return above ? v < level : v > level; };
    std::optional<double> left, right;
    for (std::size_t j = i; j > lo; --j)
        if (beyond(y[j - 1])) {
            const double t = (level - y[j - 1]) / (y[j] - y[j - 1]);
            left = x[j - 1] + t * (x[j] - x[j - 1]);
            break;
        }
    for (std::size_t j = i; j < hi; ++j)
        if (beyond(y[j + 1])) {
            const double t = (level - y[j]) / (y[j + 1] - y[j]);
            right = x[j] + t * (x[j + 1] - x[j]);
            break;
        }
    return (left && right) ? *right - *left : 0.0;
}

}  // namespace detail

/// Local maxima above min_rel_height * global max, plus local minima whose
/// neighbouring maxima both qualify (flagged as dips). Locations and heights
/// come from 3-point parabolic refinement. Results are sorted by location.
inline std::vector<Peak> detect_peaks(std::span<const double> grid, std::span<const double> density,
                                      double min_rel_height) {
    if (grid.size() != density.size()) throw InvalidParameter("detect_peaks: grid and density sizes differ");
    const std::size_t n = grid.size();
    std::vector<Peak> out;
    if (n < 3) return out;
    const double h = (grid.back() - grid.front()) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(grid[i] - grid[i - 1] - h) > 1e-6 * std::abs(h))
            throw InvalidParameter("detect_peaks: grid must be uniform");

    const double global_max = *std::max_element(density.begin(), density.end());
    const double threshold = min_rel_height * global_max;

    // Every local extremum in order; plateaus count once at their left edge.
    struct Extremum {
        std::size_t index;
        bool is_max;
    };
    std::vector<Extremum> extrema;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (density[i] > density[i - 1] && density[i] >= density[i + 1]) extrema.push_back({i, true});
        else if (density[i] < density[i - 1] && density[i] <= density[i + 1]) extrema.push_back({i, false});
    }

    auto qualifies = [&](const Extremum& e) { return e.is_max && density[e.index] >= threshold; };
    for (std::size_t e = 0; e < extrema.size(); ++e) {
        const std::size_t i = extrema[e].index;
        const std::size_t lo = e > 0 ? extrema[e - 1].index : 0;
        const std::size_t hi = e + 1 < extrema.size() ? extrema[e + 1].index : n - 1;
        const auto v = detail::parabolic_vertex(density[i - 1], density[i], density[i + 1]);
        Peak p;
        p.location = grid[i] + v.offset * h;
        p.height = v.value;
        if (extrema[e].is_max) {
            if (!qualifies(extrema[e])) continue;
            p.width = detail::crossing_width(grid, density, i, lo, hi, 0.5 * p.height, true);
        } else {
            const bool flanked =
                e > 0 && e + 1 < extrema.size() && qualifies(extrema[e - 1]) && qualifies(extrema[e + 1]);
            if (!flanked) continue;
            p.is_dip = true;
            const double rim = std::min(density[lo], density[hi]);
            p.width = detail::crossing_width(grid, density, i, lo, hi, 0.5 * (rim + p.height), false);
        }
        out.push_back(p);
    }
    return out;
}

inline std::vector<Peak> detect_peaks(const Spectrum& s, double min_rel_height) {
    return detect_peaks(s.grid, s.density, min_rel_height);
}

/// Number of qualifying maxima.
inline std::size_t count_peaks(const std::vector<Peak>& peaks) {
    return static_cast<std::size_t>(std::count_if(peaks.begin(), peaks.end(), [](const Peak& p) { return !p.is_dip; }));
}

}  // namespace optospec
