#pragma once

// Brute-force check of the closed forms: the amplitude equations of motion
// integrated with fixed-step RK4 on a uniformly discretized continuum,
//
//   dA_m/dt    = -i(m w - delta) A_m - i kappa sum_n <m~|n> sum_j b_{n,j}
//   db_{m,j}/dt = -i(m w + k_j) b_{m,j} - i kappa sum_n <m|n~> A_n
//
// with b_{m,j} = B_{m,k_j} sqrt(dk) and kappa = xi sqrt(dk). Nothing here
// touches the emission or scattering formulas.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "franck_condon.hpp"
#include "matrix.hpp"
#include "parallel.hpp"
#include "scattering.hpp"
#include "spectrum.hpp"

namespace optospec {

/// Uniform, cell-centred discretization of the continuum on [k_min, k_max].
struct ContinuumGrid {
    double k_min = -8.0;
    double k_max = 8.0;
    std::size_t n_modes = 1600;
    /// Add the static level shift of the modes outside [k_min, k_max]
    /// (adiabatically eliminated) so the window mimics an unbounded flat band.
    bool far_band_correction = true;

    double dk() const noexcept { return (k_max - k_min) / static_cast<double>(n_modes); }
    double mode(std::size_t j) const noexcept { return k_min + (static_cast<double>(j) + 0.5) * dk(); }
    std::vector<double> modes() const {
        std::vector<double> v(n_modes);
        for (std::size_t j = 0; j < n_modes; ++j) v[j] = mode(j);
        return v;
    }
    /// Bath revival time 2 pi / dk.
    double revival_time() const noexcept { return 2.0 * kPi / dk(); }

    /// Symmetric window of half width `half_span` with spacing at most `max_dk`.
    static ContinuumGrid symmetric(double half_span, double max_dk) {
        ContinuumGrid c;
        c.k_min = -half_span;
        c.k_max = half_span;
        c.n_modes = static_cast<std::size_t>(std::ceil(2.0 * half_span / max_dk - 1e-9));
        return c;
    }

    void validate(const SystemParams& params) const {
        if (!(k_max > k_min) || n_modes < 2) throw InvalidParameter("continuum: need k_min < k_max and >= 2 modes");
        if (dk() > params.gamma_c() / 20.0 * (1.0 + 1e-12))
            throw InvalidParameter("continuum: dk = " + num(dk()) + " must not exceed gamma_c/20");
    }
    bool operator==(const ContinuumGrid&) const = default;
};

/// Oracle state: cavity amplitudes A_m and discrete mode amplitudes b_{m,j}.
struct OracleState {
    double time = 0.0;
    double origin = 0.0;  // time at which the continuum was populated
    std::vector<cplx> cavity;
    Matrix<cplx> modes;

    std::size_t phonon_levels() const noexcept { return cavity.size(); }
    double cavity_probability() const {
        double p = 0.0;
        for (const auto& a : cavity) p += std::norm(a);
        return p;
    }
    double continuum_probability() const {
        double p = 0.0;
        for (const auto& b : modes.flat()) p += std::norm(b);
        return p;
    }
    double probability() const { return cavity_probability() + continuum_probability(); }
};

struct OracleRun {
    OracleState state;
    double dt = 0.0;
    std::size_t steps = 0;
    double max_norm_drift = 0.0;
};

/// Photon in the cavity, mirror in |n0>: A_m = <m~|n0>, b = 0.
inline OracleState oracle_emission_initial(const SystemParams& params, unsigned n0, std::size_t phonon_levels,
                                           const ContinuumGrid& cont) {
    if (n0 >= phonon_levels) throw InvalidParameter("oracle: n0 must be below the oracle phonon cutoff");
    OracleState s;
    s.cavity.resize(phonon_levels);
    for (std::size_t m = 0; m < phonon_levels; ++m) s.cavity[m] = overlap(n0, static_cast<unsigned>(m), params.beta_0());
    s.modes = Matrix<cplx>(phonon_levels, cont.n_modes);
    return s;
}

/// Default head start for a band-limited packet: its truncation precursor
/// decays on the scale of the inverse distance from carrier to band edge.
inline double default_lead_time(const PhotonWavepacket& packet, const ContinuumGrid& cont) {
    const double edge = std::min(std::abs(cont.k_max - packet.delta_0), std::abs(packet.delta_0 - cont.k_min));
    return 40.0 / edge;
}

/// Empty cavity, mirror in |n0>, Lorentzian packet sampled on the modes.
///
/// The closed-form packet is causal: it reaches the cavity at t = 0 and not
/// before. Its band-limited sample is not, so a nonzero `lead_time` launches
/// the packet at t = -lead_time, freely propagated backwards (up to a global
/// phase), and lets the precursor pass before t = 0.
inline OracleState oracle_scattering_initial(unsigned n0, const PhotonWavepacket& packet, std::size_t phonon_levels,
                                             const ContinuumGrid& cont, double lead_time = 0.0) {
    packet.validate();
    if (n0 >= phonon_levels) throw InvalidParameter("oracle: n0 must be below the oracle phonon cutoff");
    if (!(lead_time >= 0.0) || !std::isfinite(lead_time)) throw InvalidParameter("oracle: lead_time must be >= 0");
    OracleState s;
    s.time = s.origin = -lead_time;
    s.cavity.assign(phonon_levels, cplx{});
    s.modes = Matrix<cplx>(phonon_levels, cont.n_modes);
    const double root_dk = std::sqrt(cont.dk());
    for (std::size_t j = 0; j < cont.n_modes; ++j)
        s.modes(n0, j) = packet.amplitude(cont.mode(j)) * root_dk * std::exp(cplx(0.0, cont.mode(j) * lead_time));
    return s;
}

namespace detail {

/// Level shift of the cavity manifold from modes outside the window,
/// evaluated at the bare energies and symmetrized to stay Hermitian.
inline Matrix<double> far_band_shift(const SystemParams& params, const OverlapMatrix& ov, const ContinuumGrid& cont) {
    const std::size_t dim = ov.dim();
    Matrix<double> shift(dim, dim);
    const double xi2 = params.xi() * params.xi();
    const double floor = 0.5 * cont.dk();
    auto outside_pv = [&](std::size_t m, double energy) {
        const double x = energy - static_cast<double>(m) * params.omega_M();
        const double upper = std::max(std::abs(x - cont.k_max), floor);
        const double lower = std::max(std::abs(x - cont.k_min), floor);
        return std::log(upper / lower);
    };
    for (std::size_t m = 0; m < dim; ++m)
        for (std::size_t n = 0; n < dim; ++n)
            for (std::size_t n2 = 0; n2 < dim; ++n2) {
                const double en = static_cast<double>(n) * params.omega_M() - params.delta();
                const double en2 = static_cast<double>(n2) * params.omega_M() - params.delta();
                shift(n, n2) += xi2 * ov(m, n) * ov(m, n2) * 0.5 * (outside_pv(m, en) + outside_pv(m, en2));
            }
    return shift;
}

class AmplitudeEquations {
public:
    AmplitudeEquations(const SystemParams& params, const ContinuumGrid& cont, std::size_t levels)
        : levels_(levels),
          n_modes_(cont.n_modes),
          kappa_(params.xi() * std::sqrt(cont.dk())),
          ov_(levels, params.beta_0()),
          shift_(levels, levels),
          cavity_freq_(levels),
          mode_freq_(levels, cont.n_modes) {
        if (cont.far_band_correction) shift_ = far_band_shift(params, ov_, cont);
        for (std::size_t m = 0; m < levels; ++m) {
            cavity_freq_[m] = static_cast<double>(m) * params.omega_M() - params.delta();
            for (std::size_t j = 0; j < n_modes_; ++j)
                mode_freq_(m, j) = static_cast<double>(m) * params.omega_M() + cont.mode(j);
        }
    }

    std::size_t size() const noexcept { return levels_ * (1 + n_modes_); }

    // y = [A_0..A_{P-1}, b_{0,*}, b_{1,*}, ...]
    void operator()(const std::vector<cplx>& y, std::vector<cplx>& dy) const {
        const cplx* a = y.data();
        const cplx* b = y.data() + levels_;
        cplx* da = dy.data();
        cplx* db = dy.data() + levels_;

        std::vector<cplx> row_sum(levels_), drive(levels_);
        for (std::size_t m = 0; m < levels_; ++m) {
            cplx s{};
            for (std::size_t n = 0; n < levels_; ++n) s += ov_(m, n) * a[n];
            drive[m] = s;
        }
        parallel_for(levels_, [&](std::size_t m) {
            const cplx* bm = b + m * n_modes_;
            cplx* dbm = db + m * n_modes_;
            const double* freq = &mode_freq_(m, 0);
            const cplx src = cplx(0.0, -kappa_) * drive[m];
            cplx sum{};
            for (std::size_t j = 0; j < n_modes_; ++j) {
                sum += bm[j];
                dbm[j] = cplx(freq[j] * bm[j].imag(), -freq[j] * bm[j].real()) + src;
            }
            row_sum[m] = sum;
        });
        for (std::size_t m = 0; m < levels_; ++m) {
            cplx coupled{}, shifted{};
            for (std::size_t n = 0; n < levels_; ++n) {
                coupled += ov_(n, m) * row_sum[n];
                shifted += shift_(m, n) * a[n];
            }
            da[m] = cplx(0.0, -1.0) * (cavity_freq_[m] * a[m] + shifted + kappa_ * coupled);
        }
    }

private:
    std::size_t levels_;
    std::size_t n_modes_;
    double kappa_;
    OverlapMatrix ov_;
    Matrix<double> shift_;
    std::vector<double> cavity_freq_;
    Matrix<double> mode_freq_;
};

inline double squared_norm(const std::vector<cplx>& y) {
    double s = 0.0;
    for (const auto& v : y) s += std::norm(v);
    return s;
}

}  // namespace detail

/// Largest norm drift integrate_amplitudes accepts.
inline constexpr double kOracleDriftBudget = 1e-6;

/// Evolves `initial` for a duration t_final with fixed-step RK4. The step is
/// t_final / ceil(t_final / dt), never larger than dt.
inline OracleRun integrate_amplitudes(const SystemParams& params, const OracleState& initial,
                                      const ContinuumGrid& cont, double t_final, double dt) {
    cont.validate(params);
    const std::size_t levels = initial.phonon_levels();
    if (levels < 1 || initial.modes.rows() != levels || initial.modes.cols() != cont.n_modes)
        throw InvalidParameter("oracle: initial state does not match the continuum grid");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw InvalidParameter("oracle: t_final must be >= 0");
    const double fastest = std::max({static_cast<double>(levels - 1) * params.omega_M(),
                                     std::max(std::abs(cont.k_min), std::abs(cont.k_max)), params.gamma_c()});
    if (!(dt > 0.0) || dt > 0.05 / fastest * (1.0 + 1e-12))
        throw InvalidParameter("oracle: dt = " + num(dt) + " must not exceed 0.05/" +
                               num(fastest));
    if (!(initial.time + t_final - initial.origin < 0.5 * cont.revival_time()))
        throw InvalidParameter("oracle: elapsed time " + num(initial.time + t_final - initial.origin) +
                               " must stay below half the bath revival time " +
                               num(0.5 * cont.revival_time()));

    const detail::AmplitudeEquations rhs(params, cont, levels);
    std::vector<cplx> y(rhs.size());
    std::copy(initial.cavity.begin(), initial.cavity.end(), y.begin());
    std::copy(initial.modes.flat().begin(), initial.modes.flat().end(), y.begin() + static_cast<long>(levels));

    OracleRun run;
    run.steps = t_final > 0.0 ? static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9)) : 0;
    run.dt = run.steps > 0 ? t_final / static_cast<double>(run.steps) : 0.0;
    const double h = run.dt;
    const double norm0 = detail::squared_norm(y);

    std::vector<cplx> k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), tmp(y.size());
    for (std::size_t step = 0; step < run.steps; ++step) {
        rhs(y, k1);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        run.max_norm_drift = std::max(run.max_norm_drift, std::abs(detail::squared_norm(y) - norm0));
    }
    if (run.max_norm_drift > kOracleDriftBudget)
        throw NumericalError("oracle: norm drift " + num(run.max_norm_drift) +
                             " exceeds 1e-6, use a smaller dt");

    run.state.time = initial.time + t_final;
    run.state.origin = initial.origin;
    run.state.cavity.assign(y.begin(), y.begin() + static_cast<long>(levels));
    run.state.modes = Matrix<cplx>(levels, cont.n_modes);
    std::copy(y.begin() + static_cast<long>(levels), y.end(), run.state.modes.flat().begin());
    return run;
}

/// S(k_j) = sum_m |b_{m,j}|^2 / dk on the mode centres. The integral is the
/// exact midpoint sum, i.e. the continuum probability.
inline Spectrum oracle_spectrum(const OracleState& state, const ContinuumGrid& cont) {
    Spectrum s;
    s.grid = cont.modes();
    s.density.assign(cont.n_modes, 0.0);
    s.n_phonon_max = static_cast<int>(state.phonon_levels()) - 1;
    const double inv_dk = 1.0 / cont.dk();
    for (std::size_t m = 0; m < state.modes.rows(); ++m)
        for (std::size_t j = 0; j < cont.n_modes; ++j) s.density[j] += std::norm(state.modes(m, j)) * inv_dk;
    s.integral = state.continuum_probability();
    s.norm_deficit = std::abs(1.0 - s.integral);
    return s;
}

/// Density amplitudes B = b / sqrt(dk), comparable with the closed forms.
inline AmplitudeSet to_amplitude_set(const OracleState& state, const ContinuumGrid& cont, unsigned n0 = 0) {
    AmplitudeSet out;
    out.time = state.time;
    out.n0 = n0;
    out.cavity = state.cavity;
    out.detunings = cont.modes();
    out.continuum = state.modes;
    const double inv = 1.0 / std::sqrt(cont.dk());
    for (auto& b : out.continuum.flat()) b *= inv;
    return out;
}

}  // namespace optospec
