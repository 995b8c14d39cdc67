#pragma once

// Executes a RunConfig: spectra to CSV, a JSON metadata sidecar, and the
// closed-form vs ODE comparison behind `check`.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "emission.hpp"
#include "oracle.hpp"
#include "peaks.hpp"
#include "scattering.hpp"
#include "spectrum.hpp"

namespace optospec {

inline constexpr double kMetadataPeakHeight = 0.05;

/// Shortest round-trip decimal form, locale independent.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline Spectrum compute_spectrum(const RunConfig& cfg) {
    const SystemParams params = cfg.params();
    if (cfg.mode == Mode::Scattering || (cfg.mode == Mode::OracleCheck && cfg.packet))
        return scattering_spectrum(params, cfg.mirror, *cfg.packet, cfg.grid, cfg.truncation);
    return emission_spectrum(params, cfg.mirror, cfg.grid, cfg.truncation);
}

/// Header `delta_k,S`, one row per grid point, LF line endings.
inline void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "delta_k,S\n";
    for (std::size_t i = 0; i < s.grid.size(); ++i)
        out << format_double(s.grid[i]) << ',' << format_double(s.density[i]) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

inline Spectrum read_spectrum_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidParameter("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("delta_k,", 0) != 0)
        throw InvalidParameter(path.string() + ": expected header starting with 'delta_k,'");
    Spectrum s;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        double x = 0.0, y = 0.0;
        const char* end = line.data() + line.size();
        const auto rx = std::from_chars(line.data(), line.data() + std::min(comma, line.size()), x);
        const auto second = comma == std::string::npos ? end : line.data() + comma + 1;
        const auto next = std::find(second, end, ',');
        const auto ry = std::from_chars(second, next, y);
        if (comma == std::string::npos || rx.ec != std::errc{} || ry.ec != std::errc{})
            throw InvalidParameter(path.string() + ": malformed row " + std::to_string(row));
        s.grid.push_back(x);
        s.density.push_back(y);
    }
    return s;
}

inline std::filesystem::path metadata_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".meta");
    return p;
}

inline nlohmann::json peaks_to_json(const std::vector<Peak>& peaks) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : peaks)
        arr.push_back({{"location", p.location}, {"height", p.height}, {"width", p.width}, {"is_dip", p.is_dip}});
    return arr;
}

inline nlohmann::json spectrum_metadata(const RunConfig& cfg, const Spectrum& s, const std::string& timestamp) {
    const SystemParams params = cfg.params();
    nlohmann::json meta;
    meta["config"] = nlohmann::json::parse(serialize_config(cfg));
    meta["derived"] = {{"omega_M", params.omega_M()}, {"beta_0", params.beta_0()}, {"delta", params.delta()}};
    meta["n_phonon_max"] = s.n_phonon_max;
    meta["integral"] = s.integral;
    meta["norm_deficit"] = s.norm_deficit;
    meta["truncation_tail"] = s.truncation_tail;
    meta["peak_min_rel_height"] = kMetadataPeakHeight;
    meta["peaks"] = peaks_to_json(detect_peaks(s, kMetadataPeakHeight));
    meta["warnings"] = s.warnings;
    meta["timestamp"] = timestamp;
    return meta;
}

inline void write_metadata(const std::filesystem::path& path, const nlohmann::json& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << meta.dump(2) << '\n';
}

struct OracleComparison {
    Spectrum analytic;
    Spectrum oracle;
    OracleRun run;
    ContinuumGrid continuum;
    double max_abs_diff = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Resolved oracle parameters for a configuration.
inline ContinuumGrid oracle_continuum(const RunConfig& cfg) {
    ContinuumGrid c = ContinuumGrid::symmetric(cfg.oracle.half_span, cfg.gamma_c / 20.0);
    if (cfg.oracle.n_modes) c.n_modes = *cfg.oracle.n_modes;
    c.far_band_correction = cfg.oracle.far_band_correction;
    return c;
}

inline double oracle_default_dt(const SystemParams& params, std::size_t levels, const ContinuumGrid& c) {
    const double fastest = std::max({static_cast<double>(levels - 1) * params.omega_M(),
                                     std::max(std::abs(c.k_min), std::abs(c.k_max)), params.gamma_c()});
    return 0.05 / fastest;
}

/// Integrates the equations of motion for the configured process and
/// compares the late-time density with the closed form on the oracle modes.
inline OracleComparison oracle_check(const RunConfig& cfg) {
    const SystemParams params = cfg.params();
    const auto* number = std::get_if<mirror::Number>(&cfg.mirror);
    if (!number) throw InvalidParameter("oracle check supports number states only");
    const unsigned n0 = number->n0;
    const bool scattering = cfg.packet.has_value();
    const std::size_t levels = cfg.oracle.n_phonon + 1;

    OracleComparison cmp;
    cmp.continuum = oracle_continuum(cfg);
    cmp.tolerance = cfg.oracle.tolerance.value_or(scattering ? 2e-2 : 1e-2);
    const double t_final =
        cfg.oracle.t_final.value_or(scattering ? 15.0 / std::min(cfg.gamma_c, 2.0 * cfg.packet->epsilon)
                                               : 10.0 / cfg.gamma_c);
    const double dt = cfg.oracle.dt.value_or(oracle_default_dt(params, levels, cmp.continuum));

    const double lead =
        scattering ? cfg.oracle.lead_time.value_or(default_lead_time(*cfg.packet, cmp.continuum)) : 0.0;
    const OracleState initial = scattering ? oracle_scattering_initial(n0, *cfg.packet, levels, cmp.continuum, lead)
                                           : oracle_emission_initial(params, n0, levels, cmp.continuum);
    cmp.run = integrate_amplitudes(params, initial, cmp.continuum, t_final + lead, dt);
    cmp.oracle = oracle_spectrum(cmp.run.state, cmp.continuum);

    const auto modes = cmp.continuum.modes();
    const MirrorState state = mirror::Number{n0};
    // The comparison window is narrower than any normalization grid; skip the norm warning.
    cmp.analytic = scattering ? scattering_spectrum(params, state, *cfg.packet, modes, cfg.truncation, 1.0)
                              : emission_spectrum(params, state, modes, cfg.truncation, 1.0);
    for (std::size_t j = 0; j < modes.size(); ++j)
        cmp.max_abs_diff = std::max(cmp.max_abs_diff, std::abs(cmp.analytic.density[j] - cmp.oracle.density[j]));
    cmp.passed = cmp.max_abs_diff < cmp.tolerance;
    return cmp;
}

inline void write_comparison_csv(const std::filesystem::path& path, const OracleComparison& cmp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "delta_k,S_analytic,S_oracle\n";
    for (std::size_t j = 0; j < cmp.oracle.grid.size(); ++j)
        out << format_double(cmp.oracle.grid[j]) << ',' << format_double(cmp.analytic.density[j]) << ','
            << format_double(cmp.oracle.density[j]) << '\n';
}

inline nlohmann::json comparison_metadata(const RunConfig& cfg, const OracleComparison& cmp,
                                          const std::string& timestamp) {
    nlohmann::json meta;
    meta["config"] = nlohmann::json::parse(serialize_config(cfg));
    meta["oracle"] = {{"k_min", cmp.continuum.k_min},
                      {"k_max", cmp.continuum.k_max},
                      {"n_modes", cmp.continuum.n_modes},
                      {"dk", cmp.continuum.dk()},
                      {"far_band_correction", cmp.continuum.far_band_correction},
                      {"dt", cmp.run.dt},
                      {"steps", cmp.run.steps},
                      {"t_final", cmp.run.state.time},
                      {"lead_time", -cmp.run.state.origin},
                      {"max_norm_drift", cmp.run.max_norm_drift},
                      {"cavity_probability", cmp.run.state.cavity_probability()}};
    meta["max_abs_diff"] = cmp.max_abs_diff;
    meta["tolerance"] = cmp.tolerance;
    meta["passed"] = cmp.passed;
    meta["timestamp"] = timestamp;
    return meta;
}

}  // namespace optospec
