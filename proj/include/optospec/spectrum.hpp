#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "matrix.hpp"

namespace optospec {

/// Uniform detuning grid, inclusive of both ends.
struct GridSpec {
    double min = -6.0;
    double max = 6.0;
    std::size_t points = 4001;

    void validate() const {
        if (!(std::isfinite(min) && std::isfinite(max) && max > min))
            throw InvalidParameter("grid: need finite min < max");
        if (points < 3) throw InvalidParameter("grid: need at least 3 points");
    }
    double step() const noexcept { return (max - min) / static_cast<double>(points - 1); }
    std::vector<double> values() const {
        validate();
        std::vector<double> v(points);
        const double h = step();
        for (std::size_t i = 0; i < points; ++i) v[i] = min + h * static_cast<double>(i);
        v.back() = max;
        return v;
    }
    bool operator==(const GridSpec&) const = default;
};

inline constexpr double kDefaultNormTolerance = 1e-4;

/// Reservoir occupation density S(delta_k) on an ascending grid.
struct Spectrum {
    std::vector<double> grid;
    std::vector<double> density;
    double integral = 0.0;         // quadrature of density incl. tail estimate
    double norm_deficit = 0.0;     // |1 - integral|
    double truncation_tail = 0.0;  // probability estimated lost to the phonon cutoff
    int n_phonon_max = 0;
    std::vector<std::string> warnings;
};

/// Complex amplitudes A_m and B_{m,k} of one run. `continuum(m, k)` is a
/// density amplitude: |B|^2 integrates over delta_k to a probability.
struct AmplitudeSet {
    double time = std::numeric_limits<double>::infinity();
    unsigned n0 = 0;
    std::vector<cplx> cavity;
    Matrix<cplx> continuum;
    std::vector<double> detunings;
    double tail_bound = 0.0;
    std::vector<std::string> warnings;

    bool is_longtime() const noexcept { return std::isinf(time); }
};

using EmissionAmplitudes = AmplitudeSet;

/// Trapezoid rule over the grid plus a K/x^2 tail estimate beyond each end,
/// i.e. S(x_end) * |x_end| with detunings measured from the cavity frequency.
inline double integrate_density(std::span<const double> grid, std::span<const double> density,
                                bool tail_correction = true) {
    if (grid.size() != density.size() || grid.size() < 2)
        throw InvalidParameter("integrate_density: grid and density must match and hold >= 2 points");
    double sum = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) sum += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    if (tail_correction) {
        if (grid.front() < 0.0) sum += density.front() * std::abs(grid.front());
        if (grid.back() > 0.0) sum += density.back() * grid.back();
    }
    return sum;
}

inline void finalize_spectrum(Spectrum& s, double norm_tolerance = kDefaultNormTolerance) {
    s.integral = integrate_density(s.grid, s.density);
    s.norm_deficit = std::abs(1.0 - s.integral);
    if (s.norm_deficit > norm_tolerance)
        s.warnings.push_back("grid too narrow or coarse: norm deficit " + num(s.norm_deficit) +
                             " exceeds " + num(norm_tolerance));
}

inline void require_ascending(std::span<const double> grid) {
    if (grid.empty()) throw InvalidParameter("detuning grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw InvalidParameter("detuning grid must be strictly ascending");
}

}  // namespace optospec
