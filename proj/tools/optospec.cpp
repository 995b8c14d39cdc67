// Command-line front end: run a configuration, check it against the ODE
// oracle, or list peaks of a spectrum CSV.
//
// Exit codes: 0 success, 1 validation failure, 2 numerical failure,
// 3 tolerance failure in check mode.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "optospec/optospec.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kNumerical = 2, kTolerance = 3 };

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

optospec::RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw optospec::ConfigError({path + ": cannot read config file"});
    std::stringstream ss;
    ss << in.rdbuf();
    return optospec::parse_config(ss.str());
}

int do_check(const optospec::RunConfig& cfg) {
    const auto cmp = optospec::oracle_check(cfg);
    optospec::write_comparison_csv(cfg.output, cmp);
    optospec::write_metadata(optospec::metadata_path(cfg.output),
                             optospec::comparison_metadata(cfg, cmp, utc_timestamp()));
    std::printf("max |S_analytic - S_oracle| = %.6e (tolerance %.1e) over %zu modes, norm drift %.2e: %s\n",
                cmp.max_abs_diff, cmp.tolerance, cmp.continuum.n_modes, cmp.run.max_norm_drift,
                cmp.passed ? "PASS" : "FAIL");
    return cmp.passed ? kOk : kTolerance;
}

int do_run(const optospec::RunConfig& cfg) {
    if (cfg.mode == optospec::Mode::OracleCheck) return do_check(cfg);
    const auto spectrum = optospec::compute_spectrum(cfg);
    optospec::write_spectrum_csv(cfg.output, spectrum);
    optospec::write_metadata(optospec::metadata_path(cfg.output),
                             optospec::spectrum_metadata(cfg, spectrum, utc_timestamp()));
    for (const auto& w : spectrum.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("wrote %s (%zu points, integral %.8f, %zu peaks)\n", cfg.output.c_str(), spectrum.grid.size(),
                spectrum.integral,
                optospec::count_peaks(optospec::detect_peaks(spectrum, optospec::kMetadataPeakHeight)));
    return kOk;
}

int do_peaks(const std::string& csv, double min_height) {
    const auto spectrum = optospec::read_spectrum_csv(csv);
    std::printf("location,height,width,is_dip\n");
    for (const auto& p : optospec::detect_peaks(spectrum, min_height))
        std::printf("%s,%s,%s,%d\n", optospec::format_double(p.location).c_str(),
                    optospec::format_double(p.height).c_str(), optospec::format_double(p.width).c_str(),
                    p.is_dip ? 1 : 0);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-photon emission and scattering spectra of an optomechanical cavity"};
    app.require_subcommand(1);

    std::string run_config, check_config, peaks_csv;
    double min_height = 0.05;
    auto* run = app.add_subcommand("run", "compute the spectrum described by a config file");
    run->add_option("config", run_config, "JSON configuration")->required();
    auto* check = app.add_subcommand("check", "compare the closed form with the ODE oracle");
    check->add_option("config", check_config, "JSON configuration")->required();
    auto* peaks = app.add_subcommand("peaks", "list peaks and dips of a spectrum CSV");
    peaks->add_option("csv", peaks_csv, "CSV with header delta_k,S")->required();
    peaks->add_option("--min-height", min_height, "minimum peak height relative to the global maximum");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kValidation;
    }

    try {
        if (*run) return do_run(load_config(run_config));
        if (*check) return do_check(load_config(check_config));
        return do_peaks(peaks_csv, min_height);
    } catch (const optospec::ConfigError& e) {
        for (const auto& issue : e.issues) std::fprintf(stderr, "config error: %s\n", issue.c_str());
        return kValidation;
    } catch (const optospec::InvalidParameter& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kNumerical;
    }
}
