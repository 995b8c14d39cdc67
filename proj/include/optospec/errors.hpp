#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace optospec {

/// Compact %g rendering for error and warning messages.
inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad physical or numerical input (negative rates, malformed grids, ...).
struct InvalidParameter : Error {
    using Error::Error;
};

/// A phonon cutoff too small for the requested tail tolerance.
struct TruncationError : Error {
    TruncationError(const std::string& what, double achieved_deficit)
        : Error(what), achieved(achieved_deficit) {}
    double achieved;
};

/// Floating-point overflow inside a special-function evaluation.
struct RangeError : Error {
    using Error::Error;
};

/// Integrator failure (norm drift above budget and similar).
struct NumericalError : Error {
    using Error::Error;
};

/// Collects every validation problem found in a run configuration.
struct ConfigError : Error {
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), issues(std::move(problems)) {}
    std::vector<std::string> issues;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
};

}  // namespace optospec
