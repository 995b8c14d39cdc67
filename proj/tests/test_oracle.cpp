#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "optospec/emission.hpp"
#include "optospec/oracle.hpp"
#include "optospec/peaks.hpp"
#include "optospec/scattering.hpp"

using namespace optospec;

namespace {

const SystemParams kRef = derive_params(1.0, 0.8, 0.2);
const SystemParams kBare = derive_params(1.0, 0.0, 0.2);
constexpr std::size_t kLevels = 13;

double max_dt(const SystemParams& p, std::size_t levels, const ContinuumGrid& c) {
    return 0.05 / std::max({double(levels - 1) * p.omega_M(), std::max(-c.k_min, c.k_max), p.gamma_c()});
}

std::vector<double> continuum_density(const AmplitudeSet& amp) {
    std::vector<double> d(amp.detunings.size(), 0.0);
    for (std::size_t m = 0; m < amp.continuum.rows(); ++m)
        for (std::size_t k = 0; k < d.size(); ++k) d[k] += std::norm(amp.continuum(m, k));
    return d;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace

TEST(ContinuumGrid, Geometry) {
    const auto c = ContinuumGrid::symmetric(8.0, 0.01);
    EXPECT_EQ(c.n_modes, 1600u);
    EXPECT_DOUBLE_EQ(c.dk(), 0.01);
    EXPECT_DOUBLE_EQ(c.mode(0), -7.995);
    EXPECT_DOUBLE_EQ(c.mode(1599), 7.995);
    EXPECT_NO_THROW(c.validate(kRef));
    EXPECT_THROW(ContinuumGrid::symmetric(8.0, 0.02).validate(kRef), InvalidParameter);
}

TEST(Oracle, Preconditions) {
    const auto c = ContinuumGrid::symmetric(2.0, 0.01);
    const auto init = oracle_emission_initial(kRef, 0, 4, c);
    const double dt = max_dt(kRef, 4, c);
    EXPECT_THROW(integrate_amplitudes(kRef, init, c, 1.0, 1.5 * dt), InvalidParameter);
    EXPECT_THROW(integrate_amplitudes(kRef, init, c, 0.51 * c.revival_time(), dt), InvalidParameter);
    EXPECT_THROW(oracle_emission_initial(kRef, 4, 4, c), InvalidParameter);
    EXPECT_THROW(oracle_scattering_initial(0, PhotonWavepacket{0.0, 1.0}, 4, c, -1.0), InvalidParameter);
    // Elapsed time counts from when the continuum was populated.
    auto advanced = oracle_scattering_initial(0, PhotonWavepacket{0.0, 1.0}, 4, c, 1.0);
    advanced.time = advanced.origin + 0.45 * c.revival_time();
    EXPECT_THROW(integrate_amplitudes(kRef, advanced, c, 0.1 * c.revival_time(), dt), InvalidParameter);
    EXPECT_NO_THROW(integrate_amplitudes(kRef, advanced, c, 0.01 * c.revival_time(), dt));
}

TEST(Oracle, ZeroStateGivesZeroSpectrum) {
    const auto c = ContinuumGrid::symmetric(2.0, 0.01);
    OracleState s;
    s.cavity.assign(3, cplx{});
    s.modes = Matrix<cplx>(3, c.n_modes);
    const auto spec = oracle_spectrum(s, c);
    for (double v : spec.density) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(spec.integral, 0.0);
}

// A flat band of half width K has self energy
// xi^2 [ln(z + K) - ln(z - K) - 2 pi i] on the decaying sheet. Its pole and
// residue give the bare-cavity survival up to band-edge transients.
TEST(Oracle, BareCavityDecayMatchesTruncatedBandPole) {
    const double K = 16.0;
    const double xi2 = kBare.xi() * kBare.xi();
    auto self_energy = [&](cplx z) { return xi2 * (std::log(z + K) - std::log(z - K) - cplx(0.0, 2.0 * kPi)); };
    cplx z(0.0, -0.1);
    for (int i = 0; i < 200; ++i) z = self_energy(z);
    const cplx residue = 1.0 / (1.0 - xi2 * (1.0 / (z + K) - 1.0 / (z - K)));
    // Leading band-edge corrections to the Markovian rate and weight.
    EXPECT_NEAR(-2.0 * z.imag() / 0.2 - 1.0, 0.2 / (kPi * K), 1e-4);
    EXPECT_NEAR(std::norm(residue) - 1.0, 2.0 * 0.2 / (kPi * K), 1e-4);

    const auto c = ContinuumGrid::symmetric(K, 0.2 / 40.0);
    OracleState s = oracle_emission_initial(kBare, 0, 1, c);
    const double dt = max_dt(kBare, 1, c);
    for (int seg = 0; seg < 10; ++seg) {
        s = integrate_amplitudes(kBare, s, c, 2.5, dt).state;
        const double pole = std::norm(residue * std::exp(cplx(0.0, -1.0) * z * s.time));
        EXPECT_NEAR(s.cavity_probability() / pole, 1.0, 1e-3) << "t=" << s.time;
        EXPECT_NEAR(s.cavity_probability() / std::exp(-0.2 * s.time), 1.0, 3.0 * 0.2 / (kPi * K) * (1.0 + 0.2 * s.time))
            << "t=" << s.time;
    }
}

TEST(Oracle, BareCavitySpectrumIsLorentzian) {
    const auto c = ContinuumGrid::symmetric(8.0, 0.01);
    const auto run = integrate_amplitudes(kBare, oracle_emission_initial(kBare, 0, 1, c), c, 50.0, max_dt(kBare, 1, c));
    const auto spec = oracle_spectrum(run.state, c);
    const auto peaks = detect_peaks(spec, 0.05);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_NEAR(peaks[0].location, 0.0, c.dk());
    EXPECT_NEAR(peaks[0].width / 0.2, 1.0, 0.03);
}

TEST(Oracle, ProbabilityConservedAtEveryOutputTime) {
    const auto c = ContinuumGrid::symmetric(8.0, 0.01);
    OracleState s = oracle_emission_initial(kRef, 0, kLevels, c);
    const double dt = max_dt(kRef, kLevels, c);
    for (int seg = 0; seg < 5; ++seg) {
        const auto run = integrate_amplitudes(kRef, s, c, 4.0, dt);
        EXPECT_LT(run.max_norm_drift, 1e-6);
        s = run.state;
        // The initial state itself misses the cavity weight above the oracle cutoff.
        EXPECT_NEAR(s.probability(), 1.0, 1e-6) << "t=" << s.time;
    }
}

TEST(Oracle, EmissionMatchesClosedFormTransient) {
    const auto c = ContinuumGrid::symmetric(8.0, 0.01);
    const double t = 10.0 / 0.2;
    const auto run = integrate_amplitudes(kRef, oracle_emission_initial(kRef, 0, kLevels, c), c, t,
                                          max_dt(kRef, kLevels, c));
    const auto analytic = emission_transient(kRef, 0, t, c.modes(), TruncationConfig{});
    EXPECT_LT(max_abs_diff(oracle_spectrum(run.state, c).density, continuum_density(analytic)), 1e-2);
}

TEST(Oracle, EmissionMatchesLongTimeSpectrumLate) {
    const auto c = ContinuumGrid::symmetric(8.0, 0.01);
    const auto run = integrate_amplitudes(kRef, oracle_emission_initial(kRef, 0, kLevels, c), c, 100.0,
                                          max_dt(kRef, kLevels, c));
    const auto analytic = emission_spectrum(kRef, mirror::Number{0}, c.modes(), TruncationConfig{}, 1.0);
    EXPECT_LT(max_abs_diff(oracle_spectrum(run.state, c).density, analytic.density), 1e-2);
}

TEST(Oracle, ScatteringMatchesClosedFormTransient) {
    const auto c = ContinuumGrid::symmetric(8.0, 0.01);
    const PhotonWavepacket packet{0.0, 2.0};
    const double lead = default_lead_time(packet, c);
    const double t = 2.0 / 0.2;
    const auto run = integrate_amplitudes(kRef, oracle_scattering_initial(0, packet, kLevels, c, lead), c, t + lead,
                                          max_dt(kRef, kLevels, c));
    EXPECT_NEAR(run.state.time, t, 1e-12);
    const auto analytic = scattering_transient(kRef, 0, packet, t, c.modes(), TruncationConfig{});
    EXPECT_LT(max_abs_diff(oracle_spectrum(run.state, c).density, continuum_density(analytic)), 2e-2);
}

TEST(Oracle, ContinuumRefinementIsStable) {
    const double t = 50.0;
    const auto coarse = ContinuumGrid::symmetric(8.0, 0.01);
    const auto fine = ContinuumGrid::symmetric(8.0, 0.005);
    const auto a = oracle_spectrum(integrate_amplitudes(kRef, oracle_emission_initial(kRef, 0, kLevels, coarse),
                                                        coarse, t, max_dt(kRef, kLevels, coarse))
                                       .state,
                                   coarse);
    const auto b = oracle_spectrum(
        integrate_amplitudes(kRef, oracle_emission_initial(kRef, 0, kLevels, fine), fine, t, max_dt(kRef, kLevels, fine))
            .state,
        fine);
    // Coarse cell j covers fine cells 2j and 2j+1.
    double worst = 0.0;
    for (std::size_t j = 0; j < coarse.n_modes; ++j)
        worst = std::max(worst, std::abs(a.density[j] - 0.5 * (b.density[2 * j] + b.density[2 * j + 1])));
    EXPECT_LT(worst, 0.5e-2);
}

TEST(Oracle, FourthOrderConvergence) {
    const auto c = ContinuumGrid::symmetric(2.0, 0.01);
    const auto init = oracle_emission_initial(kRef, 0, 4, c);
    std::vector<std::vector<cplx>> finals;
    for (double dt : {0.0125, 0.00625, 0.003125}) {
        const auto s = integrate_amplitudes(kRef, init, c, 5.0, dt).state;
        std::vector<cplx> y(s.cavity);
        y.insert(y.end(), s.modes.flat().begin(), s.modes.flat().end());
        finals.push_back(std::move(y));
    }
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < finals[0].size(); ++i) {
        e1 = std::max(e1, std::abs(finals[0][i] - finals[1][i]));
        e2 = std::max(e2, std::abs(finals[1][i] - finals[2][i]));
    }
    const double order = std::log2(e1 / e2);
    EXPECT_GE(order, 3.5);
    EXPECT_LE(order, 4.5);

    // Against the Richardson-extrapolated reference the error drops ~16x per halving.
    double r1 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < finals[0].size(); ++i) {
        const cplx ref = finals[2][i] + (finals[2][i] - finals[1][i]) / 15.0;
        r1 = std::max(r1, std::abs(finals[0][i] - ref));
        r2 = std::max(r2, std::abs(finals[1][i] - ref));
    }
    EXPECT_GT(r1 / r2, 8.0);
    EXPECT_LT(r1 / r2, 32.0);
}

TEST(Oracle, AmplitudeSetScalesByRootDk) {
    const auto c = ContinuumGrid::symmetric(2.0, 0.01);
    const auto s = oracle_scattering_initial(1, PhotonWavepacket{0.2, 0.5}, 3, c);
    const auto amp = to_amplitude_set(s, c, 1);
    for (std::size_t j = 0; j < c.n_modes; j += 37)
        EXPECT_NEAR(std::abs(amp.continuum(1, j) - PhotonWavepacket{0.2, 0.5}.amplitude(c.mode(j))), 0.0, 1e-14);
}
