#pragma once

// Physical constants of the optomechanical cavity, initial mirror states and
// the phonon truncation policy shared by every solver.
//
// Frequencies are in units of the mechanical frequency by convention
// (omega_M = 1 on the command line), but nothing here relies on it.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "franck_condon.hpp"

namespace optospec {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// omega_M, g, gamma_c. beta_0 and delta are always recomputed from g and
/// omega_M, never stored.
class SystemParams {
public:
    double omega_M() const noexcept { return omega_M_; }
    double g() const noexcept { return g_; }
    double gamma_c() const noexcept { return gamma_c_; }

    /// Dimensionless single-photon mirror displacement g / omega_M.
    double beta_0() const noexcept { return g_ / omega_M_; }
    /// Photon-state frequency shift g^2 / omega_M.
    double delta() const noexcept { return g_ * g_ / omega_M_; }
    /// Continuum coupling xi with gamma_c = 2 pi xi^2.
    double xi() const noexcept { return std::sqrt(gamma_c_ / (2.0 * kPi)); }

    bool operator==(const SystemParams&) const = default;

private:
    friend SystemParams derive_params(double omega_M, double g, double gamma_c);
    double omega_M_ = 1.0;
    double g_ = 0.0;
    double gamma_c_ = 1.0;
};

inline SystemParams derive_params(double omega_M, double g, double gamma_c) {
    if (!(omega_M > 0.0) || !std::isfinite(omega_M))
        throw InvalidParameter("omega_M must be positive, got " + num(omega_M));
    if (!(gamma_c > 0.0) || !std::isfinite(gamma_c))
        throw InvalidParameter("gamma_c must be positive, got " + num(gamma_c));
    if (!(g >= 0.0) || !std::isfinite(g))
        throw InvalidParameter("g must be non-negative, got " + num(g));
    SystemParams p;
    p.omega_M_ = omega_M;
    p.g_ = g;
    p.gamma_c_ = gamma_c;
    return p;
}

struct TruncationConfig {
    /// Phonon indices run over 0..n_phonon_max inclusive.
    int n_phonon_max = 64;
    /// Largest acceptable probability lost to the cutoff.
    double tail_tolerance = 1e-10;

    std::size_t levels() const noexcept { return static_cast<std::size_t>(n_phonon_max) + 1; }

    void validate() const {
        if (n_phonon_max < 1)
            throw InvalidParameter("n_phonon_max must be >= 1, got " + std::to_string(n_phonon_max));
        if (!(tail_tolerance > 0.0 && tail_tolerance < 1.0))
            throw InvalidParameter("tail_tolerance must lie in (0, 1)");
    }

    bool operator==(const TruncationConfig&) const = default;
};

namespace mirror {

struct Number {
    unsigned n0 = 0;
    bool operator==(const Number&) const = default;
};

/// |0~>, the ground state of the one-photon displaced potential.
struct DisplacedGround {
    bool operator==(const DisplacedGround&) const = default;
};

/// Coherent state with real amplitude.
struct Coherent {
    double beta = 0.0;
    bool operator==(const Coherent&) const = default;
};

struct Thermal {
    double nbar = 0.0;
    bool operator==(const Thermal&) const = default;
};

struct PureSuperposition {
    std::vector<cplx> coeffs;
    bool operator==(const PureSuperposition&) const = default;
};

}  // namespace mirror

using MirrorState =
    std::variant<mirror::Number, mirror::DisplacedGround, mirror::Coherent, mirror::Thermal, mirror::PureSuperposition>;

/// Number-basis expansion of a mirror state below the cutoff.
///
/// Coefficients are stored exactly as their closed forms give them; solvers
/// divide by `retained` so that the truncated state is normalized.
struct StateExpansion {
    enum class Kind { Pure, Mixed };

    Kind kind = Kind::Pure;
    std::vector<cplx> amplitudes;  // C_{n0}, pure states
    std::vector<double> weights;   // P_{n0}, mixed states
    double retained = 1.0;         // probability kept below the cutoff
    double tail_deficit = 0.0;     // probability above the cutoff

    bool is_pure() const noexcept { return kind == Kind::Pure; }
    std::size_t size() const noexcept { return is_pure() ? amplitudes.size() : weights.size(); }

    std::vector<cplx> normalized_amplitudes() const {
        std::vector<cplx> out(amplitudes);
        const double s = 1.0 / std::sqrt(retained);
        for (auto& c : out) c *= s;
        return out;
    }
    std::vector<double> normalized_weights() const {
        std::vector<double> out(weights);
        for (auto& w : out) w /= retained;
        return out;
    }
};

namespace detail {

// sum_{n > cutoff} term(n) with term(n) given by a callable, stopping once
// terms are negligible past the distribution's bulk.
template <typename Term>
double tail_sum(unsigned first, double bulk, Term&& term) {
    double sum = 0.0;
    for (unsigned n = first; n <= kLaguerreMaxOrder; ++n) {
        const double t = term(n);
        sum += t;
        if (n > bulk && t <= 1e-18 * sum) break;
        if (n > bulk && sum == 0.0) break;
    }
    return sum;
}

inline double coherent_probability(unsigned n, double beta) {
    if (beta == 0.0) return n == 0 ? 1.0 : 0.0;
    const double b2 = beta * beta;
    return std::exp(n * std::log(b2) - b2 - std::lgamma(n + 1.0));
}

}  // namespace detail

/// Expands `state` on number states 0..n_phonon_max. Throws TruncationError
/// when the probability above the cutoff reaches trunc.tail_tolerance.
inline StateExpansion state_coefficients(const MirrorState& state, const SystemParams& params,
                                         const TruncationConfig& trunc) {
    trunc.validate();
    const unsigned cutoff = static_cast<unsigned>(trunc.n_phonon_max);
    const std::size_t levels = trunc.levels();
    StateExpansion out;

    auto check_tail = [&](const char* what) {
        if (!(out.tail_deficit < trunc.tail_tolerance))
            throw TruncationError(std::string(what) + ": tail above cutoff " + std::to_string(cutoff) + " is " +
                                      num(out.tail_deficit) + ", raise n_phonon_max",
                                  out.tail_deficit);
    };

    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, mirror::Number>) {
                if (s.n0 > cutoff)
                    throw TruncationError("number state n0=" + std::to_string(s.n0) + " lies above the cutoff", 1.0);
                out.amplitudes.assign(levels, 0.0);
                out.amplitudes[s.n0] = 1.0;
            } else if constexpr (std::is_same_v<T, mirror::Coherent>) {
                if (!std::isfinite(s.beta)) throw InvalidParameter("coherent amplitude must be finite");
                out.amplitudes.resize(levels);
                double kept = 0.0;
                for (unsigned n = 0; n < levels; ++n) {
                    const double mag = std::sqrt(detail::coherent_probability(n, s.beta));
                    out.amplitudes[n] = (s.beta < 0.0 && n % 2 == 1) ? -mag : mag;
                    kept += mag * mag;
                }
                out.retained = kept;
                out.tail_deficit = detail::tail_sum(cutoff + 1, s.beta * s.beta,
                                                    [&](unsigned n) { return detail::coherent_probability(n, s.beta); });
                check_tail("coherent state");
            } else if constexpr (std::is_same_v<T, mirror::DisplacedGround>) {
                const double b0 = params.beta_0();
                out.amplitudes.resize(levels);
                double kept = 0.0;
                for (unsigned n = 0; n < levels; ++n) {
                    const double c = overlap(n, 0, b0);
                    out.amplitudes[n] = c;
                    kept += c * c;
                }
                out.retained = kept;
                out.tail_deficit = detail::tail_sum(cutoff + 1, b0 * b0, [&](unsigned n) {
                    const double c = overlap(n, 0, b0);
                    return c * c;
                });
                check_tail("displaced ground state");
            } else if constexpr (std::is_same_v<T, mirror::Thermal>) {
                if (!(s.nbar >= 0.0) || !std::isfinite(s.nbar))
                    throw InvalidParameter("thermal nbar must be non-negative");
                out.kind = StateExpansion::Kind::Mixed;
                out.weights.resize(levels);
                const double ratio = s.nbar / (s.nbar + 1.0);
                double kept = 0.0;
                for (unsigned n = 0; n < levels; ++n) {
                    const double p = (n == 0 ? 1.0 : std::pow(ratio, n)) / (s.nbar + 1.0);
                    out.weights[n] = p;
                    kept += p;
                }
                out.retained = kept;
                out.tail_deficit = std::pow(ratio, cutoff + 1.0);
                check_tail("thermal state");
            } else {
                double norm = 0.0;
                for (const auto& c : s.coeffs) norm += std::norm(c);
                if (std::abs(norm - 1.0) > 1e-12)
                    throw InvalidParameter("pure superposition must be normalized, sum |C|^2 = " +
                                           num(norm));
                out.amplitudes.assign(levels, 0.0);
                double kept = 0.0, tail = 0.0;
                for (std::size_t n = 0; n < s.coeffs.size(); ++n) {
                    if (n < levels) {
                        out.amplitudes[n] = s.coeffs[n];
                        kept += std::norm(s.coeffs[n]);
                    } else {
                        tail += std::norm(s.coeffs[n]);
                    }
                }
                out.retained = kept;
                out.tail_deficit = tail;
                check_tail("pure superposition");
            }
        },
        state);
    return out;
}

}  // namespace optospec
