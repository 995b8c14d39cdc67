#pragma once

// Closed-form scattering of a Lorentzian single-photon wavepacket off the
// cavity: direct reflection at the fixed mirror interferes with the photon
// re-emitted after entering the cavity.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "emission.hpp"
#include "franck_condon.hpp"
#include "parallel.hpp"
#include "spectrum.hpp"

namespace optospec {

/// Incident packet with amplitude sqrt(epsilon/pi) / (dk - delta_0 + i epsilon).
/// epsilon is the half width at half maximum of |amplitude|^2.
struct PhotonWavepacket {
    double delta_0 = 0.0;
    double epsilon = 1.0;

    void validate() const {
        if (!std::isfinite(delta_0)) throw InvalidParameter("wavepacket delta_0 must be finite");
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidParameter("wavepacket epsilon must be positive");
    }
    cplx amplitude(double dk) const { return std::sqrt(epsilon / kPi) / cplx(dk - delta_0, epsilon); }
    bool operator==(const PhotonWavepacket&) const = default;
};

/// Which outgoing channels to keep in the long-time amplitude.
enum class ScatteringChannels { Both, DirectOnly, CavityOnly };

namespace detail {

// Relative size below which eps - gamma/2 + i X counts as a collision.
inline constexpr double kPoleCollision = 1e-12;
inline constexpr double kPoleShift = 1e-9;

/// Returns epsilon, nudged by 1e-9 omega_M when eps = gamma/2 coincides with
/// (n0 - n) omega_M + delta_0 + delta = 0 for some retained n.
inline double resolve_pole_collision(const SystemParams& params, const PhotonWavepacket& packet, unsigned n0,
                                     std::size_t dim, std::vector<std::string>& warnings) {
    const double scale = packet.epsilon + 0.5 * params.gamma_c();
    for (std::size_t n = 0; n < dim; ++n) {
        const cplx pole(packet.epsilon - 0.5 * params.gamma_c(),
                        (static_cast<double>(n0) - static_cast<double>(n)) * params.omega_M() + packet.delta_0 +
                            params.delta());
        if (std::abs(pole) < kPoleCollision * scale) {
            warnings.push_back("pole collision at n=" + std::to_string(n) +
                               " (epsilon = gamma_c/2 on resonance); epsilon shifted by 1e-9 omega_M");
            return packet.epsilon + kPoleShift * params.omega_M();
        }
    }
    return packet.epsilon;
}

}  // namespace detail

/// Amplitudes at time t for the packet arriving at t = 0 with the mirror in
/// |n0> and the cavity empty. Full phases are kept.
inline AmplitudeSet scattering_transient(const SystemParams& params, unsigned n0, const PhotonWavepacket& packet,
                                         double t, std::span<const double> grid, const TruncationConfig& trunc) {
    trunc.validate();
    packet.validate();
    require_ascending(grid);
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidParameter("scattering_transient: t must be finite and >= 0");
    detail::require_number_state(n0, trunc);

    const std::size_t dim = trunc.levels();
    const OverlapMatrix ov(dim, params.beta_0());
    AmplitudeSet out;
    out.time = t;
    out.n0 = n0;
    out.detunings.assign(grid.begin(), grid.end());
    out.tail_bound = detail::truncation_tail(ov, detail::displaced_components(ov, n0));
    detail::require_tail(out.tail_bound, trunc, "scattering_transient");

    const double eps = detail::resolve_pole_collision(params, packet, n0, dim, out.warnings);
    const double w = params.omega_M(), delta = params.delta(), gamma = params.gamma_c(), half = 0.5 * gamma;
    const double d0 = packet.delta_0;
    const double root = std::sqrt(eps / kPi);
    const cplx packet_decay = std::exp(-cplx(eps, n0 * w + d0) * t);

    // 1 / (eps - gamma/2 + i[(n0 - n) w + d0 + delta])
    std::vector<cplx> coupling_pole(dim);
    std::vector<cplx> cavity_decay(dim);
    for (std::size_t n = 0; n < dim; ++n) {
        coupling_pole[n] = 1.0 / cplx(eps - half, (static_cast<double>(n0) - static_cast<double>(n)) * w + d0 + delta);
        cavity_decay[n] = std::exp(-cplx(half, n * w - delta) * t);
    }

    out.cavity.resize(dim);
    const double two_pi_xi = 2.0 * kPi * params.xi();
    for (std::size_t m = 0; m < dim; ++m)
        out.cavity[m] = -root * two_pi_xi * ov(n0, m) * coupling_pole[m] * (cavity_decay[m] - packet_decay);

    out.continuum = Matrix<cplx>(dim, grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        const double dk = grid[k];
        for (std::size_t m = 0; m < dim; ++m) {
            const cplx free_phase = std::exp(cplx(0.0, -(m * w + dk) * t));
            cplx b = (m == n0) ? root * free_phase / cplx(dk - d0, eps) : cplx{};
            const cplx packet_den = cplx(eps, (static_cast<double>(n0) - static_cast<double>(m)) * w + d0 - dk);
            const cplx packet_term = (free_phase - packet_decay) / packet_den;
            for (std::size_t n = 0; n < dim; ++n) {
                const double fc = ov(m, n) * ov(n0, n);
                if (std::abs(fc) <= detail::kNegligible) continue;
                const cplx cavity_den =
                    cplx(half, (static_cast<double>(n) - static_cast<double>(m)) * w - delta - dk);
                b += cplx(0.0, gamma * root) * fc * coupling_pole[n] *
                     ((free_phase - cavity_decay[n]) / cavity_den - packet_term);
            }
            out.continuum(m, k) = b;
        }
    });
    return out;
}

/// Long-time scattered amplitudes with the common phase exp[-i(m w + dk) t]
/// dropped. The long-time form has no eps = gamma/2 singularity.
inline AmplitudeSet scattering_longtime(const SystemParams& params, unsigned n0, const PhotonWavepacket& packet,
                                        std::span<const double> grid, const TruncationConfig& trunc,
                                        ScatteringChannels channels = ScatteringChannels::Both) {
    trunc.validate();
    packet.validate();
    require_ascending(grid);
    detail::require_number_state(n0, trunc);

    const std::size_t dim = trunc.levels();
    const OverlapMatrix ov(dim, params.beta_0());
    const auto a = detail::displaced_components(ov, n0);
    AmplitudeSet out;
    out.n0 = n0;
    out.detunings.assign(grid.begin(), grid.end());
    out.tail_bound = detail::truncation_tail(ov, a);
    detail::require_tail(out.tail_bound, trunc, "scattering_longtime");
    out.cavity.assign(dim, cplx{});

    const bool direct = channels != ScatteringChannels::CavityOnly;
    const bool cavity = channels != ScatteringChannels::DirectOnly;
    const double root = std::sqrt(packet.epsilon / kPi);
    const double w = params.omega_M();
    const auto sa = detail::sparsify(a);
    const detail::ResonanceKernel kernel(params, ov);
    out.continuum = Matrix<cplx>(dim, grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        const double dk = grid[k];
        std::vector<cplx> res, acc(dim);
        if (cavity) {
            kernel.load(dk, res);
            kernel.accumulate(sa, res, acc);
        }
        for (std::size_t m = 0; m < dim; ++m) {
            cplx b{};
            if (direct && m == n0) b += packet.amplitude(dk);
            if (cavity) {
                const double center = packet.delta_0 + (static_cast<double>(n0) - static_cast<double>(m)) * w;
                b -= root * cplx(0.0, params.gamma_c()) / cplx(dk - center, packet.epsilon) * acc[m];
            }
            out.continuum(m, k) = b;
        }
    });
    return out;
}

inline AmplitudeSet scattering_longtime(const SystemParams& params, unsigned n0, const PhotonWavepacket& packet,
                                        const GridSpec& grid, const TruncationConfig& trunc,
                                        ScatteringChannels channels = ScatteringChannels::Both) {
    return scattering_longtime(params, n0, packet, grid.values(), trunc, channels);
}

/// Scattering spectrum, superposing over the initial phonon distribution the
/// same way as the emission spectrum.
inline Spectrum scattering_spectrum(const SystemParams& params, const MirrorState& state,
                                    const PhotonWavepacket& packet, std::span<const double> grid,
                                    const TruncationConfig& trunc, double norm_tolerance = kDefaultNormTolerance) {
    packet.validate();
    require_ascending(grid);
    const StateExpansion expansion = state_coefficients(state, params, trunc);
    const std::size_t dim = trunc.levels();
    const OverlapMatrix ov(dim, params.beta_0());
    const detail::ResonanceKernel kernel(params, ov);
    const double root = std::sqrt(packet.epsilon / kPi);
    const double w = params.omega_M();
    const cplx i_gamma(0.0, params.gamma_c());

    // Either pure coefficients or mixture weights, one entry per n0 kept.
    std::vector<unsigned> n0s;
    std::vector<cplx> coeffs;
    std::vector<double> weights;
    std::vector<detail::SparseVector> components;
    double tail = expansion.tail_deficit;
    if (expansion.is_pure()) {
        const auto c = expansion.normalized_amplitudes();
        for (std::size_t n0 = 0; n0 < c.size(); ++n0) {
            if (std::abs(c[n0]) <= detail::kNegligible) continue;
            n0s.push_back(static_cast<unsigned>(n0));
            coeffs.push_back(c[n0]);
        }
        tail += detail::truncation_tail(ov, detail::superpose(ov, c));
    } else {
        const auto p = expansion.normalized_weights();
        for (std::size_t n0 = 0; n0 < p.size(); ++n0) {
            if (p[n0] <= detail::kNegligible) continue;
            n0s.push_back(static_cast<unsigned>(n0));
            weights.push_back(p[n0]);
            tail += p[n0] * detail::truncation_tail(ov, detail::displaced_components(ov, static_cast<unsigned>(n0)));
        }
    }
    for (unsigned n0 : n0s) components.push_back(detail::sparsify(detail::displaced_components(ov, n0)));

    Spectrum s;
    s.grid.assign(grid.begin(), grid.end());
    s.density.assign(grid.size(), 0.0);
    s.n_phonon_max = trunc.n_phonon_max;
    s.truncation_tail = tail;
    detail::require_tail(s.truncation_tail, trunc, "scattering_spectrum");

    const bool pure = expansion.is_pure();
    parallel_for(grid.size(), [&](std::size_t k) {
        const double dk = grid[k];
        std::vector<cplx> res, acc(dim), total(dim);
        kernel.load(dk, res);
        double mixed = 0.0;
        for (std::size_t j = 0; j < n0s.size(); ++j) {
            const unsigned n0 = n0s[j];
            kernel.accumulate(components[j], res, acc);
            for (std::size_t m = 0; m < dim; ++m) {
                const double center = packet.delta_0 + (static_cast<double>(n0) - static_cast<double>(m)) * w;
                acc[m] *= -root * i_gamma / cplx(dk - center, packet.epsilon);
            }
            acc[n0] += packet.amplitude(dk);
            if (pure) {
                for (std::size_t m = 0; m < dim; ++m) total[m] += coeffs[j] * acc[m];
            } else {
                double part = 0.0;
                for (const auto& b : acc) part += std::norm(b);
                mixed += weights[j] * part;
            }
        }
        if (pure) {
            double sum = 0.0;
            for (const auto& b : total) sum += std::norm(b);
            s.density[k] = sum;
        } else {
            s.density[k] = mixed;
        }
    });
    finalize_spectrum(s, norm_tolerance);
    return s;
}

inline Spectrum scattering_spectrum(const SystemParams& params, const MirrorState& state,
                                    const PhotonWavepacket& packet, const GridSpec& grid,
                                    const TruncationConfig& trunc, double norm_tolerance = kDefaultNormTolerance) {
    return scattering_spectrum(params, state, packet, grid.values(), trunc, norm_tolerance);
}

}  // namespace optospec
