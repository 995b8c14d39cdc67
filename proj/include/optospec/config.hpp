#pragma once

// Run configuration for the command-line tool. Documents are JSON objects;
// every frequency is in units of the mechanical frequency. Example:
//
//   {
//     "mode": "emission",
//     "g": 0.8, "gamma_c": 0.2,
//     "mirror": {"kind": "number", "n0": 0},
//     "grid": {"min": -6, "max": 6, "points": 4001},
//     "truncation": {"n_phonon_max": 64, "tail_tolerance": 1e-10},
//     "output": "spectrum.csv"
//   }
//
// "mirror" also accepts the shorthand strings "number 0", "displaced_ground",
// "coherent 3", "thermal 2". "grid" may be given as [min, max, points], and
// the packet fields "epsilon" and "delta_0" may sit at the top level instead
// of inside "packet".

#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"
#include "errors.hpp"
#include "oracle.hpp"
#include "scattering.hpp"
#include "spectrum.hpp"

namespace optospec {

enum class Mode { Emission, Scattering, OracleCheck };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::Emission: return "emission";
        case Mode::Scattering: return "scattering";
        case Mode::OracleCheck: return "oracle-check";
    }
    return "?";
}

/// Oracle comparison settings; unset fields fall back to process defaults.
struct OracleSettings {
    double half_span = 8.0;
    std::optional<std::size_t> n_modes;  // default: spacing gamma_c / 20
    std::size_t n_phonon = 12;           // oracle cutoff, levels 0..n_phonon
    std::optional<double> t_final;       // default: 10/gamma_c or 15/min(gamma_c, 2 eps)
    std::optional<double> dt;            // default: the largest admissible step
    std::optional<double> tolerance;     // default: 1e-2 emission, 2e-2 scattering
    std::optional<double> lead_time;     // scattering packet head start, default from the band edge
    bool far_band_correction = true;

    bool operator==(const OracleSettings&) const = default;
};

struct RunConfig {
    Mode mode = Mode::Emission;
    double g = 0.0;
    double gamma_c = 0.2;
    MirrorState mirror = mirror::Number{0};
    std::optional<PhotonWavepacket> packet;
    GridSpec grid;
    TruncationConfig truncation;
    std::string output = "spectrum.csv";
    OracleSettings oracle;

    SystemParams params() const { return derive_params(1.0, g, gamma_c); }
    bool operator==(const RunConfig&) const = default;
};

namespace detail {

using nlohmann::json;

class Validator {
public:
    void error(const std::string& path, const std::string& msg) { issues_.push_back(path + ": " + msg); }
    bool ok() const { return issues_.empty(); }
    std::vector<std::string> take() { return std::move(issues_); }

    void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& known) {
        for (const auto& [key, _] : obj.items())
            if (!known.count(key)) error(path.empty() ? key : path + "." + key, "unknown key");
    }

    std::optional<double> number(const json& obj, const std::string& key, const std::string& path, bool required) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!obj.contains(key)) {
            if (required) error(where, "missing required key");
            return std::nullopt;
        }
        const auto& v = obj.at(key);
        if (!v.is_number()) {
            error(where, "expected a number");
            return std::nullopt;
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            error(where, "must be finite");
            return std::nullopt;
        }
        return x;
    }

    std::optional<std::size_t> count(const json& obj, const std::string& key, const std::string& path, bool required) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!obj.contains(key)) {
            if (required) error(where, "missing required key");
            return std::nullopt;
        }
        const auto& v = obj.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            error(where, "expected a non-negative integer");
            return std::nullopt;
        }
        return static_cast<std::size_t>(v.get<long long>());
    }

private:
    std::vector<std::string> issues_;
};

inline std::optional<MirrorState> parse_mirror(const json& node, Validator& v) {
    json obj = node;
    if (node.is_string()) {
        std::istringstream in(node.get<std::string>());
        std::string kind;
        in >> kind;
        obj = json{{"kind", kind}};
        double arg;
        if (in >> arg) {
            if (kind == "number") obj["n0"] = static_cast<long long>(std::llround(arg));
            else if (kind == "coherent") obj["beta"] = arg;
            else if (kind == "thermal") obj["nbar"] = arg;
        }
    }
    if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string()) {
        v.error("mirror", "expected an object with a string 'kind' or a shorthand string");
        return std::nullopt;
    }
    const std::string kind = obj["kind"].get<std::string>();
    if (kind == "number") {
        v.reject_unknown(obj, "mirror", {"kind", "n0"});
        if (auto n = v.count(obj, "n0", "mirror", true)) return mirror::Number{static_cast<unsigned>(*n)};
    } else if (kind == "displaced_ground") {
        v.reject_unknown(obj, "mirror", {"kind"});
        return mirror::DisplacedGround{};
    } else if (kind == "coherent") {
        v.reject_unknown(obj, "mirror", {"kind", "beta"});
        if (obj.contains("beta") && obj["beta"].is_array()) {
            v.error("mirror.beta", "complex coherent amplitudes are not supported; give a real number");
            return std::nullopt;
        }
        if (auto b = v.number(obj, "beta", "mirror", true)) return mirror::Coherent{*b};
    } else if (kind == "thermal") {
        v.reject_unknown(obj, "mirror", {"kind", "nbar"});
        if (auto nb = v.number(obj, "nbar", "mirror", true)) {
            if (*nb < 0.0) v.error("mirror.nbar", "must be >= 0");
            else return mirror::Thermal{*nb};
        }
    } else if (kind == "pure") {
        v.reject_unknown(obj, "mirror", {"kind", "coeffs"});
        if (!obj.contains("coeffs") || !obj["coeffs"].is_array() || obj["coeffs"].empty()) {
            v.error("mirror.coeffs", "expected a non-empty array of numbers or [re, im] pairs");
            return std::nullopt;
        }
        mirror::PureSuperposition p;
        for (std::size_t i = 0; i < obj["coeffs"].size(); ++i) {
            const auto& c = obj["coeffs"][i];
            const std::string where = "mirror.coeffs[" + std::to_string(i) + "]";
            if (c.is_number()) p.coeffs.emplace_back(c.get<double>(), 0.0);
            else if (c.is_array() && c.size() == 2 && c[0].is_number() && c[1].is_number())
                p.coeffs.emplace_back(c[0].get<double>(), c[1].get<double>());
            else {
                v.error(where, "expected a number or [re, im]");
                return std::nullopt;
            }
        }
        double norm = 0.0;
        for (const auto& c : p.coeffs) norm += std::norm(c);
        if (std::abs(norm - 1.0) > 1e-12) {
            v.error("mirror.coeffs", "coefficients must be normalized (sum |C|^2 = 1)");
            return std::nullopt;
        }
        return p;
    } else {
        v.error("mirror.kind", "unknown mirror state '" + kind + "'");
    }
    return std::nullopt;
}

inline json mirror_to_json(const MirrorState& m) {
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, mirror::Number>) return {{"kind", "number"}, {"n0", s.n0}};
            else if constexpr (std::is_same_v<T, mirror::DisplacedGround>) return {{"kind", "displaced_ground"}};
            else if constexpr (std::is_same_v<T, mirror::Coherent>) return {{"kind", "coherent"}, {"beta", s.beta}};
            else if constexpr (std::is_same_v<T, mirror::Thermal>) return {{"kind", "thermal"}, {"nbar", s.nbar}};
            else {
                json coeffs = json::array();
                for (const auto& c : s.coeffs) coeffs.push_back({c.real(), c.imag()});
                return {{"kind", "pure"}, {"coeffs", coeffs}};
            }
        },
        m);
}

}  // namespace detail

/// Parses and validates a configuration document. All problems are reported
/// together in a ConfigError.
inline RunConfig parse_config(const std::string& text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("document: not valid JSON (") + e.what() + ")"});
    }
    if (!doc.is_object()) throw ConfigError({"document: expected a JSON object"});

    detail::Validator v;
    v.reject_unknown(doc, "", {"mode", "g", "gamma_c", "mirror", "packet", "epsilon", "delta_0", "grid", "truncation", "output",
                          "oracle"});
    if (doc.contains("delta") || doc.contains("omega_M"))
        v.error(doc.contains("delta") ? "delta" : "omega_M",
                "derived or fixed quantity; frequencies are in units of omega_M and delta = g^2/omega_M");

    RunConfig cfg;
    if (!doc.contains("mode")) v.error("mode", "missing required key");
    else if (!doc["mode"].is_string()) v.error("mode", "expected a string");
    else {
        const auto mode = doc["mode"].get<std::string>();
        if (mode == "emission") cfg.mode = Mode::Emission;
        else if (mode == "scattering") cfg.mode = Mode::Scattering;
        else if (mode == "oracle-check") cfg.mode = Mode::OracleCheck;
        else v.error("mode", "expected emission, scattering or oracle-check");
    }

    if (auto g = v.number(doc, "g", "", true)) {
        if (*g < 0.0) v.error("g", "must be >= 0");
        cfg.g = *g;
    }
    if (auto gc = v.number(doc, "gamma_c", "", true)) {
        if (*gc <= 0.0) v.error("gamma_c", "must be > 0");
        cfg.gamma_c = *gc;
    }

    if (!doc.contains("mirror")) v.error("mirror", "missing required key");
    else if (auto m = detail::parse_mirror(doc["mirror"], v)) cfg.mirror = *m;

    const bool flat_packet = doc.contains("epsilon") || doc.contains("delta_0");
    if (doc.contains("packet") && flat_packet)
        v.error("packet", "give the packet either as an object or as top-level epsilon/delta_0, not both");
    else if (doc.contains("packet") || flat_packet) {
        const json& p = doc.contains("packet") ? doc["packet"] : doc;
        const std::string where = doc.contains("packet") ? "packet" : "";
        if (!p.is_object()) v.error("packet", "expected an object");
        else {
            if (doc.contains("packet")) v.reject_unknown(p, "packet", {"delta_0", "epsilon"});
            PhotonWavepacket packet;
            if (auto d0 = v.number(p, "delta_0", where, true)) packet.delta_0 = *d0;
            if (auto eps = v.number(p, "epsilon", where, true)) {
                if (*eps <= 0.0) v.error(where.empty() ? "epsilon" : "packet.epsilon", "must be > 0");
                packet.epsilon = *eps;
            }
            cfg.packet = packet;
        }
    }
    const bool has_packet = doc.contains("packet") || flat_packet;
    if (cfg.mode == Mode::Scattering && !has_packet) v.error("packet", "required for scattering mode");
    if (cfg.mode == Mode::Emission && has_packet) v.error("packet", "not allowed in emission mode");

    if (doc.contains("grid")) {
        const auto& gr = doc["grid"];
        if (gr.is_array()) {
            if (gr.size() != 3 || !gr[0].is_number() || !gr[1].is_number() || !gr[2].is_number_unsigned())
                v.error("grid", "expected [min, max, points]");
            else {
                cfg.grid.min = gr[0].get<double>();
                cfg.grid.max = gr[1].get<double>();
                cfg.grid.points = gr[2].get<std::size_t>();
                if (!(cfg.grid.max > cfg.grid.min)) v.error("grid", "min must be below max");
                if (cfg.grid.points < 3) v.error("grid.points", "must be >= 3");
            }
        } else if (!gr.is_object()) v.error("grid", "expected an object or [min, max, points]");
        else {
            v.reject_unknown(gr, "grid", {"min", "max", "points"});
            if (auto x = v.number(gr, "min", "grid", false)) cfg.grid.min = *x;
            if (auto x = v.number(gr, "max", "grid", false)) cfg.grid.max = *x;
            if (auto n = v.count(gr, "points", "grid", false)) cfg.grid.points = *n;
            if (!(cfg.grid.max > cfg.grid.min)) v.error("grid", "min must be below max");
            if (cfg.grid.points < 3) v.error("grid.points", "must be >= 3");
        }
    }

    if (doc.contains("truncation")) {
        const auto& t = doc["truncation"];
        if (!t.is_object()) v.error("truncation", "expected an object");
        else {
            v.reject_unknown(t, "truncation", {"n_phonon_max", "tail_tolerance"});
            if (auto n = v.count(t, "n_phonon_max", "truncation", false)) {
                if (*n < 1) v.error("truncation.n_phonon_max", "must be >= 1");
                cfg.truncation.n_phonon_max = static_cast<int>(*n);
            }
            if (auto tol = v.number(t, "tail_tolerance", "truncation", false)) {
                if (!(*tol > 0.0 && *tol < 1.0)) v.error("truncation.tail_tolerance", "must lie in (0, 1)");
                cfg.truncation.tail_tolerance = *tol;
            }
        }
    }

    if (doc.contains("output")) {
        if (!doc["output"].is_string() || doc["output"].get<std::string>().empty())
            v.error("output", "expected a non-empty path string");
        else cfg.output = doc["output"].get<std::string>();
    }

    if (doc.contains("oracle")) {
        const auto& o = doc["oracle"];
        if (!o.is_object()) v.error("oracle", "expected an object");
        else {
            v.reject_unknown(o, "oracle",
                             {"half_span", "n_modes", "n_phonon", "t_final", "dt", "tolerance", "lead_time",
                              "far_band_correction"});
            if (auto x = v.number(o, "half_span", "oracle", false)) {
                if (*x <= 0.0) v.error("oracle.half_span", "must be > 0");
                cfg.oracle.half_span = *x;
            }
            cfg.oracle.n_modes = v.count(o, "n_modes", "oracle", false);
            if (auto n = v.count(o, "n_phonon", "oracle", false)) {
                if (*n < 1) v.error("oracle.n_phonon", "must be >= 1");
                cfg.oracle.n_phonon = *n;
            }
            cfg.oracle.t_final = v.number(o, "t_final", "oracle", false);
            cfg.oracle.dt = v.number(o, "dt", "oracle", false);
            cfg.oracle.tolerance = v.number(o, "tolerance", "oracle", false);
            cfg.oracle.lead_time = v.number(o, "lead_time", "oracle", false);
            if (cfg.oracle.lead_time && *cfg.oracle.lead_time < 0.0) v.error("oracle.lead_time", "must be >= 0");
            if (o.contains("far_band_correction")) {
                if (!o["far_band_correction"].is_boolean()) v.error("oracle.far_band_correction", "expected a boolean");
                else cfg.oracle.far_band_correction = o["far_band_correction"].get<bool>();
            }
        }
    }
    if (cfg.mode == Mode::OracleCheck && !std::holds_alternative<mirror::Number>(cfg.mirror))
        v.error("mirror", "oracle-check supports number states only");

    if (!v.ok()) throw ConfigError(v.take());
    return cfg;
}

/// Inverse of parse_config; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& cfg) {
    using nlohmann::json;
    json doc;
    doc["mode"] = to_string(cfg.mode);
    doc["g"] = cfg.g;
    doc["gamma_c"] = cfg.gamma_c;
    doc["mirror"] = detail::mirror_to_json(cfg.mirror);
    if (cfg.packet) doc["packet"] = {{"delta_0", cfg.packet->delta_0}, {"epsilon", cfg.packet->epsilon}};
    doc["grid"] = {{"min", cfg.grid.min}, {"max", cfg.grid.max}, {"points", cfg.grid.points}};
    doc["truncation"] = {{"n_phonon_max", cfg.truncation.n_phonon_max},
                         {"tail_tolerance", cfg.truncation.tail_tolerance}};
    doc["output"] = cfg.output;
    json o = {{"half_span", cfg.oracle.half_span},
              {"n_phonon", cfg.oracle.n_phonon},
              {"far_band_correction", cfg.oracle.far_band_correction}};
    if (cfg.oracle.n_modes) o["n_modes"] = *cfg.oracle.n_modes;
    if (cfg.oracle.t_final) o["t_final"] = *cfg.oracle.t_final;
    if (cfg.oracle.dt) o["dt"] = *cfg.oracle.dt;
    if (cfg.oracle.tolerance) o["tolerance"] = *cfg.oracle.tolerance;
    if (cfg.oracle.lead_time) o["lead_time"] = *cfg.oracle.lead_time;
    doc["oracle"] = o;
    return doc.dump(2) + "\n";
}

}  // namespace optospec
