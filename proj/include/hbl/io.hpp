#pragma once

// Serialization helpers shared by the CLI: deterministic numeric formatting
// (17 significant digits in JSON strings, 12 in CSV, scientific below 1e-4),
// schema-tagged JSON writers and the run manifest. Data files carry no
// timestamps; wall-clock lives only in the manifest.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hbl/errors.hpp"
#include "hbl/ggmt.hpp"
#include "hbl/model.hpp"
#include "hbl/spectral.hpp"

namespace hbl {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";
inline constexpr const char* kToolVersion = "1.0.0";

/// digits significant digits; scientific notation below 1e-4.
inline std::string fmt_sig(double x, int digits) {
    char buf[64];
    if (x != 0.0 && std::abs(x) < 1e-4)
        std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
    else
        std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

inline std::string fmt_json(double x) { return fmt_sig(x, 17); }
inline std::string fmt_csv(double x) { return fmt_sig(x, 12); }

/// Model parameters in the manifest: decimal strings, 17 significant digits.
inline json model_params_json(const ModelParams& mp) {
    return json{{"d", std::to_string(mp.d)},
                {"p", std::to_string(mp.p)},
                {"c", fmt_json(mp.c)},
                {"a", fmt_json(mp.k.a)},
                {"b", fmt_json(mp.k.b)}};
}

inline json spectrum_json(const Spectrum& matrix, const Spectrum& shooting) {
    json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = to_string(matrix.kind);
    j["ell"] = matrix.ell;
    j["multiplicity"] = 2 * matrix.ell + 1;
    if (matrix.params) {
        j["p"] = matrix.params->p;
        j["c"] = matrix.params->c;
    } else {
        j["p"] = nullptr;
        j["c"] = nullptr;
    }
    j["grid"] = {{"n", matrix.grid.n}, {"r_max", matrix.grid.r_max}};
    j["convention"] = "B";
    j["method"] = to_string(matrix.method);
    j["eigenvalues"] = matrix.eigenvalues;
    j["errors"] = matrix.errors;
    j["lambda_L"] = matrix.lambda_l();
    j["shooting"] = {{"method", to_string(shooting.method)},
                     {"eigenvalues", shooting.eigenvalues}};
    return j;
}

inline json ggmt_json(double c, double delta, double kappa, const GgmtResult& r) {
    json support = json::array();
    for (const auto& iv : r.support) support.push_back({iv.lo, iv.hi});
    return json{{"schema", kSchemaVersion},
                {"c", c},
                {"delta", delta},
                {"kappa", kappa},
                {"convention", to_string(r.convention)},
                {"G", r.G},
                {"integral", r.integral},
                {"prefactor", r.prefactor},
                {"support", support},
                {"quad_error", r.quad_error}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot open " + path.string() + " for writing");
    out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(1) + "\n");
}

/// A CSV table with a fixed header; all numbers go through fmt_csv.
class CsvWriter {
public:
    explicit CsvWriter(std::string header) : header_(std::move(header)) {}

    void row(const std::vector<double>& values) {
        std::string line;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line += ',';
            line += fmt_csv(values[i]);
        }
        rows_.push_back(std::move(line));
    }
    void raw_row(std::string line) { rows_.push_back(std::move(line)); }

    void save(const std::filesystem::path& path) const {
        std::string text = header_ + "\n";
        for (const auto& r : rows_) text += r + "\n";
        write_text(path, text);
    }
    std::size_t size() const { return rows_.size(); }

private:
    std::string header_;
    std::vector<std::string> rows_;
};

/// Run manifest: resolved configuration, scheme constants, outputs. Written
/// even when a run fails; the only place wall-clock time appears.
struct Manifest {
    std::string command_line;
    json resolved = json::object();
    json scheme = json::object();
    std::vector<std::string> outputs;
    std::string status = "ok";
    std::string error;

    void add_output(const std::string& name) { outputs.push_back(name); }

    json to_json(long wall_ms) const {
        json j{{"schema", kSchemaVersion},
               {"tool", "hbl"},
               {"version", kToolVersion},
               {"command_line", command_line},
               {"resolved", resolved},
               {"scheme", scheme},
               {"outputs", outputs},
               {"status", status},
               {"wall_clock_ms", wall_ms}};
        if (!error.empty()) j["error"] = error;
        return j;
    }
};

} // namespace hbl
