#pragma once

// Closed-form amplitudes and spectra for a photon initially stored in the
// cavity and leaking into the outside continuum.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "franck_condon.hpp"
#include "matrix.hpp"
#include "parallel.hpp"
#include "spectrum.hpp"

namespace optospec {

namespace detail {

// Entries below this magnitude are skipped in the phonon sums; their
// contribution is far below double resolution of any retained term.
inline constexpr double kNegligible = 1e-18;

struct SparseVector {
    std::vector<unsigned> index;
    std::vector<cplx> value;
};

inline SparseVector sparsify(std::span<const cplx> v) {
    SparseVector s;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(v[i]) > kNegligible) {
            s.index.push_back(static_cast<unsigned>(i));
            s.value.push_back(v[i]);
        }
    return s;
}

/// Evaluates sum_n O(m,n) a_n / (dk + delta - (n-m) omega_M + i gamma_c/2)
/// for every m at one detuning dk.
class ResonanceKernel {
public:
    ResonanceKernel(const SystemParams& params, const OverlapMatrix& ov) : params_(params), ov_(ov) {
        const std::size_t dim = ov.dim();
        lo_.assign(dim, 0);
        hi_.assign(dim, 0);
        for (std::size_t n = 0; n < dim; ++n) {
            std::size_t first = dim, last = 0;
            for (std::size_t m = 0; m < dim; ++m)
                if (std::abs(ov(m, n)) > kNegligible) {
                    first = std::min(first, m);
                    last = m;
                }
            lo_[n] = first;
            hi_[n] = first == dim ? 0 : last + 1;
        }
    }

    std::size_t dim() const noexcept { return ov_.dim(); }

    /// resolvent[d + N] = 1 / (dk + delta - d omega_M + i gamma_c/2), d = n - m.
    void load(double dk, std::vector<cplx>& resolvent) const {
        const long n_max = static_cast<long>(dim()) - 1;
        resolvent.resize(2 * dim() - 1);
        const cplx half_width(0.0, 0.5 * params_.gamma_c());
        for (long d = -n_max; d <= n_max; ++d)
            resolvent[static_cast<std::size_t>(d + n_max)] =
                1.0 / (dk + params_.delta() - static_cast<double>(d) * params_.omega_M() + half_width);
    }

    void accumulate(const SparseVector& a, std::span<const cplx> resolvent, std::span<cplx> acc) const {
        std::fill(acc.begin(), acc.end(), cplx{});
        const std::size_t n_max = dim() - 1;
        for (std::size_t j = 0; j < a.index.size(); ++j) {
            const std::size_t n = a.index[j];
            const cplx an = a.value[j];
            for (std::size_t m = lo_[n]; m < hi_[n]; ++m)
                acc[m] += ov_(m, n) * an * resolvent[n + n_max - m];
        }
    }

private:
    const SystemParams& params_;
    const OverlapMatrix& ov_;
    std::vector<std::size_t> lo_, hi_;
};

/// Hermitian form G over resonance offsets d = n - m with
///   sum_m |sum_n O(m,n) a_n R[n-m]|^2 = sum_{d,d'} G(d,d') R_d conj(R_d'),
/// accumulated over weighted component vectors a. Evaluating a spectrum
/// point then costs O(N^2) however many initial phonon numbers contribute.
class ResonanceGram {
public:
    explicit ResonanceGram(const OverlapMatrix& ov) : ov_(ov), g_(2 * ov.dim() - 1, 2 * ov.dim() - 1) {}

    void add(const SparseVector& a, double weight) {
        const std::size_t dim = ov_.dim(), n_max = dim - 1;
        std::vector<std::size_t> offset;
        std::vector<cplx> v;
        for (std::size_t m = 0; m < dim; ++m) {
            offset.clear();
            v.clear();
            for (std::size_t j = 0; j < a.index.size(); ++j) {
                const std::size_t n = a.index[j];
                const double o = ov_(m, n);
                if (std::abs(o) <= kNegligible) continue;
                offset.push_back(n + n_max - m);
                v.push_back(o * a.value[j]);
            }
            for (std::size_t i = 0; i < v.size(); ++i) {
                const cplx wi = weight * v[i];
                for (std::size_t k = i; k < v.size(); ++k) g_(offset[i], offset[k]) += wi * std::conj(v[k]);
            }
        }
        index_active();
    }

    /// sum_{d,d'} G(d,d') R_d conj(R_d'), using the upper triangle only.
    double evaluate(std::span<const cplx> resolvent) const {
        double total = 0.0;
        for (std::size_t i = 0; i < active_.size(); ++i) {
            const std::size_t d = active_[i];
            const auto row = g_.row(d);
            cplx cross{};
            for (std::size_t k = i + 1; k < active_.size(); ++k)
                cross += row[active_[k]] * std::conj(resolvent[active_[k]]);
            total += row[d].real() * std::norm(resolvent[d]) + 2.0 * (resolvent[d] * cross).real();
        }
        return total;
    }

private:
    void index_active() {
        active_.clear();
        const std::size_t size = g_.rows();
        for (std::size_t d = 0; d < size; ++d) {
            bool used = false;
            for (std::size_t k = 0; k < size && !used; ++k) used = g_(std::min(d, k), std::max(d, k)) != cplx{};
            if (used) active_.push_back(d);
        }
    }

    const OverlapMatrix& ov_;
    Matrix<cplx> g_;  // upper triangle
    std::vector<std::size_t> active_;
};

/// a_n = <n~|n0> as a row of the overlap matrix.
inline std::vector<cplx> displaced_components(const OverlapMatrix& ov, unsigned n0) {
    std::vector<cplx> a(ov.dim());
    for (std::size_t n = 0; n < ov.dim(); ++n) a[n] = ov(n0, n);
    return a;
}

/// Probability lost to the cutoff for displaced-state components a_n:
/// weight of |n~> above the cutoff plus the weight each |n~> leaks past m = N.
inline double truncation_tail(const OverlapMatrix& ov, std::span<const cplx> a) {
    double kept = 0.0, leak = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        const double p = std::norm(a[n]);
        kept += p;
        leak += p * ov.column_norm_deficit(n);
    }
    return std::max(0.0, 1.0 - kept) + leak;
}

inline void require_number_state(unsigned n0, const TruncationConfig& trunc) {
    if (n0 > static_cast<unsigned>(trunc.n_phonon_max))
        throw TruncationError("initial phonon number n0=" + std::to_string(n0) + " lies above the cutoff", 1.0);
}

inline void require_tail(double tail, const TruncationConfig& trunc, const char* what) {
    if (!(tail < trunc.tail_tolerance))
        throw TruncationError(std::string(what) + ": phonon truncation tail " + num(tail) +
                                  " exceeds tolerance, raise n_phonon_max",
                              tail);
}

/// Pure-state coefficients on the displaced basis, a_n = sum_n0 C_n0 <n~|n0>.
inline std::vector<cplx> superpose(const OverlapMatrix& ov, std::span<const cplx> c) {
    std::vector<cplx> a(ov.dim());
    for (std::size_t n0 = 0; n0 < c.size(); ++n0) {
        if (std::abs(c[n0]) <= kNegligible) continue;
        for (std::size_t n = 0; n < ov.dim(); ++n) a[n] += c[n0] * ov(n0, n);
    }
    return a;
}

}  // namespace detail

/// Amplitudes at time t after the photon starts in the cavity with the mirror
/// in |n0>. The overall phase is kept, so t = 0 reproduces the initial state.
inline AmplitudeSet emission_transient(const SystemParams& params, unsigned n0, double t,
                                       std::span<const double> grid, const TruncationConfig& trunc) {
    trunc.validate();
    require_ascending(grid);
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidParameter("emission_transient: t must be finite and >= 0");
    detail::require_number_state(n0, trunc);

    const std::size_t dim = trunc.levels();
    const OverlapMatrix ov(dim, params.beta_0());
    const auto a = detail::displaced_components(ov, n0);
    AmplitudeSet out;
    out.time = t;
    out.n0 = n0;
    out.detunings.assign(grid.begin(), grid.end());
    out.tail_bound = detail::truncation_tail(ov, a);
    detail::require_tail(out.tail_bound, trunc, "emission_transient");

    const double w = params.omega_M(), delta = params.delta(), half = 0.5 * params.gamma_c();
    out.cavity.resize(dim);
    for (std::size_t m = 0; m < dim; ++m)
        out.cavity[m] = ov(n0, m) * std::exp(-cplx(half, m * w - delta) * t);

    // a_n f_n with f_n = exp(-[gamma/2 + i(n w - delta)] t)
    std::vector<cplx> a_decayed(dim);
    for (std::size_t n = 0; n < dim; ++n) a_decayed[n] = a[n] * std::exp(-cplx(half, n * w - delta) * t);
    const auto sa = detail::sparsify(a);
    const auto sd = detail::sparsify(a_decayed);

    const detail::ResonanceKernel kernel(params, ov);
    const double xi = params.xi();
    out.continuum = Matrix<cplx>(dim, grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        std::vector<cplx> res, acc(dim), acc_decayed(dim);
        kernel.load(grid[k], res);
        kernel.accumulate(sa, res, acc);
        kernel.accumulate(sd, res, acc_decayed);
        for (std::size_t m = 0; m < dim; ++m) {
            const cplx free_phase = std::exp(cplx(0.0, -(m * w + grid[k]) * t));
            out.continuum(m, k) = xi * (free_phase * acc[m] - acc_decayed[m]);
        }
    });
    return out;
}

/// Long-time amplitudes, cavity empty. The phase exp[-i(m w + dk) t] is
/// dropped: at fixed m it multiplies the whole n-sum.
inline AmplitudeSet emission_longtime(const SystemParams& params, unsigned n0, std::span<const double> grid,
                                      const TruncationConfig& trunc) {
    trunc.validate();
    require_ascending(grid);
    detail::require_number_state(n0, trunc);

    const std::size_t dim = trunc.levels();
    const OverlapMatrix ov(dim, params.beta_0());
    const auto a = detail::displaced_components(ov, n0);
    AmplitudeSet out;
    out.n0 = n0;
    out.detunings.assign(grid.begin(), grid.end());
    out.tail_bound = detail::truncation_tail(ov, a);
    detail::require_tail(out.tail_bound, trunc, "emission_longtime");
    out.cavity.assign(dim, cplx{});

    const auto sa = detail::sparsify(a);
    const detail::ResonanceKernel kernel(params, ov);
    const double xi = params.xi();
    out.continuum = Matrix<cplx>(dim, grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        std::vector<cplx> res, acc(dim);
        kernel.load(grid[k], res);
        kernel.accumulate(sa, res, acc);
        for (std::size_t m = 0; m < dim; ++m) out.continuum(m, k) = xi * acc[m];
    });
    return out;
}

inline AmplitudeSet emission_longtime(const SystemParams& params, unsigned n0, const GridSpec& grid,
                                      const TruncationConfig& trunc) {
    return emission_longtime(params, n0, grid.values(), trunc);
}

/// Final reservoir occupation spectrum for any initial mirror state. Pure
/// states superpose amplitudes inside |.|^2 at fixed m; mixed states add
/// probabilities.
inline Spectrum emission_spectrum(const SystemParams& params, const MirrorState& state, std::span<const double> grid,
                                  const TruncationConfig& trunc, double norm_tolerance = kDefaultNormTolerance) {
    require_ascending(grid);
    const StateExpansion expansion = state_coefficients(state, params, trunc);
    const std::size_t dim = trunc.levels();
    const OverlapMatrix ov(dim, params.beta_0());
    const detail::ResonanceKernel kernel(params, ov);
    const double xi2 = params.xi() * params.xi();

    Spectrum s;
    s.grid.assign(grid.begin(), grid.end());
    s.density.assign(grid.size(), 0.0);
    s.n_phonon_max = trunc.n_phonon_max;

    detail::ResonanceGram gram(ov);
    if (expansion.is_pure()) {
        const auto a = detail::superpose(ov, expansion.normalized_amplitudes());
        s.truncation_tail = expansion.tail_deficit + detail::truncation_tail(ov, a);
        detail::require_tail(s.truncation_tail, trunc, "emission_spectrum");
        gram.add(detail::sparsify(a), 1.0);
    } else {
        const auto weights = expansion.normalized_weights();
        double tail = expansion.tail_deficit;
        for (std::size_t n0 = 0; n0 < weights.size(); ++n0) {
            if (weights[n0] <= detail::kNegligible) continue;
            const auto a = detail::displaced_components(ov, static_cast<unsigned>(n0));
            tail += weights[n0] * detail::truncation_tail(ov, a);
            gram.add(detail::sparsify(a), weights[n0]);
        }
        s.truncation_tail = tail;
        detail::require_tail(s.truncation_tail, trunc, "emission_spectrum");
    }
    parallel_for(grid.size(), [&](std::size_t k) {
        std::vector<cplx> res;
        kernel.load(grid[k], res);
        s.density[k] = std::max(0.0, xi2 * gram.evaluate(res));
    });
    finalize_spectrum(s, norm_tolerance);
    return s;
}

inline Spectrum emission_spectrum(const SystemParams& params, const MirrorState& state, const GridSpec& grid,
                                  const TruncationConfig& trunc, double norm_tolerance = kDefaultNormTolerance) {
    return emission_spectrum(params, state, grid.values(), trunc, norm_tolerance);
}

}  // namespace optospec
