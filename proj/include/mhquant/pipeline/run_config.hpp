#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mhquant/core/scan.hpp"
#include "mhquant/core/stage.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/fusion/config.hpp"

namespace mhquant::pipeline {

/// How recovery rates feed a horizon's outcome model. Full uses the whole
/// follow-up (retrospective association); Truncated recomputes resolution
/// days from the visits up to and including the horizon, so the model only
/// sees information available at prediction time.
enum class DpWiring { Full, TruncatedAtHorizon };

inline const char* to_string(DpWiring w) {
    return w == DpWiring::Full ? "full" : "truncated";
}

inline DpWiring parse_dp_wiring(const std::string& s) {
    if (s == "full") return DpWiring::Full;
    if (s == "truncated") return DpWiring::TruncatedAtHorizon;
    throw ConfigError("unknown dp_wiring: " + s + " (expected full or truncated)");
}

/// Postoperative horizon selector for fit/train-fusion (lower-case on the
/// command line: w2, m3, m6, m12).
inline core::Stage parse_horizon(const std::string& s) {
    if (s == "w2") return core::Stage::W2;
    if (s == "m3") return core::Stage::M3;
    if (s == "m6") return core::Stage::M6;
    if (s == "m12") return core::Stage::M12;
    throw ConfigError("unknown horizon: " + s + " (expected w2, m3, m6 or m12)");
}

inline std::string horizon_name(core::Stage s) {
    switch (s) {
        case core::Stage::W2:  return "w2";
        case core::Stage::M3:  return "m3";
        case core::Stage::M6:  return "m6";
        case core::Stage::M12: return "m12";
        default: throw ConfigError("PRE is not a horizon");
    }
}

/// Everything a run needs, collected from one flat key=value file plus
/// command-line overrides. All randomness downstream flows from `seed`.
struct RunConfig {
    std::string manifest;
    std::string scan_root;  ///< empty: directory containing the manifest
    std::string out_dir = "out";

    core::PixelSpacing spacing;       ///< run-wide default, overridable per row
    core::StageDayMap days;

    double epsilon_hole = 0.0;
    double epsilon_cyst = 0.0;
    double epsilon_elm = 0.0;
    double epsilon_ez = 0.0;
    double lambda = 0.0;
    bool lambda_set = false;  ///< whether the file/flags specified lambda

    int superior_threshold = 20;
    double classification_threshold = 0.5;
    int qualitative_min_pixels = 10;

    std::string profile = "paper-replication";
    std::uint64_t seed = 1;

    DpWiring dp_wiring = DpWiring::Full;
    double fit_test_fraction = 0.2;
    double screen_alpha = 0.10;
    double vif_limit = 5.0;
    double missing_threshold = 0.10;

    fusion::FusionConfig fusion;
    std::vector<double> fusion_lr_candidates = {0.05, 0.01};
    int fusion_cv_epochs = 40;
    int fusion_final_epochs = 120;
    int fusion_k_folds = 5;
    int fusion_batch = 8;
    double fusion_test_fraction = 0.2;

    std::filesystem::path resolved_scan_root() const {
        if (!scan_root.empty()) return scan_root;
        return std::filesystem::path(manifest).parent_path();
    }

    /// Applies the profile invariants and validates everything. Call after
    /// all file values and flag overrides have been applied.
    void finalize() {
        if (profile == "paper-replication") {
            // This profile reproduces the published protocol: shape
            // weighting off, Superior threshold fixed at 20 letters.
            lambda = 0.0;
            superior_threshold = 20;
        } else if (profile == "extended") {
            if (!lambda_set) lambda = 1.0;
        } else {
            throw ConfigError("unknown profile: " + profile +
                              " (expected paper-replication or extended)");
        }
        spacing.validate();
        days.validate();
        if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
        if (epsilon_hole < 0.0 || epsilon_cyst < 0.0 || epsilon_elm < 0.0 || epsilon_ez < 0.0)
            throw ConfigError("epsilons must be non-negative");
        if (superior_threshold < 0 || superior_threshold > 100)
            throw ConfigError("superior_threshold must lie in 0..100 letters");
        if (!(classification_threshold > 0.0) || !(classification_threshold < 1.0))
            throw ConfigError("classification_threshold must lie in (0, 1)");
        if (fit_test_fraction < 0.0 || fit_test_fraction >= 1.0 ||
            fusion_test_fraction <= 0.0 || fusion_test_fraction >= 1.0)
            throw ConfigError("test fractions must lie in [0, 1)");
        if (!(screen_alpha > 0.0) || screen_alpha >= 1.0)
            throw ConfigError("screen_alpha must lie in (0, 1)");
        if (vif_limit <= 1.0) throw ConfigError("vif_limit must exceed 1");
        if (missing_threshold <= 0.0 || missing_threshold > 1.0)
            throw ConfigError("missing_threshold must lie in (0, 1]");
        if (fusion_lr_candidates.empty())
            throw ConfigError("fusion_lr_candidates must not be empty");
        if (fusion_cv_epochs < 0 || fusion_final_epochs < 0 || fusion_k_folds < 2 ||
            fusion_batch < 1)
            throw ConfigError("fusion training options out of range");
    }
};

namespace detail {

inline double parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& value) {
    const double v = parse_number(key, value);
    if (v != static_cast<long long>(v))
        throw ConfigError(key + " must be an integer, got '" + value + "'");
    return static_cast<int>(v);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto* b = value.data();
    const auto* e = b + value.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        throw ConfigError("bad unsigned value for " + key + ": '" + value + "'");
    return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_number(key, item));
    if (out.empty()) throw ConfigError(key + " must hold at least one value");
    return out;
}

inline void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "manifest") c.manifest = value;
    else if (key == "scan_root") c.scan_root = value;
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "spacing_x_um") c.spacing.um_per_px_x = parse_number(key, value);
    else if (key == "spacing_y_um") c.spacing.um_per_px_y = parse_number(key, value);
    else if (key == "day_w2") c.days.days[1] = parse_int(key, value);
    else if (key == "day_m3") c.days.days[2] = parse_int(key, value);
    else if (key == "day_m6") c.days.days[3] = parse_int(key, value);
    else if (key == "day_m12") c.days.days[4] = parse_int(key, value);
    else if (key == "epsilon_hole") c.epsilon_hole = parse_number(key, value);
    else if (key == "epsilon_cyst") c.epsilon_cyst = parse_number(key, value);
    else if (key == "epsilon_elm") c.epsilon_elm = parse_number(key, value);
    else if (key == "epsilon_ez") c.epsilon_ez = parse_number(key, value);
    else if (key == "lambda") {
        c.lambda = parse_number(key, value);
        c.lambda_set = true;
    }
    else if (key == "superior_threshold") c.superior_threshold = parse_int(key, value);
    else if (key == "classification_threshold")
        c.classification_threshold = parse_number(key, value);
    else if (key == "qualitative_min_pixels") c.qualitative_min_pixels = parse_int(key, value);
    else if (key == "profile") c.profile = value;
    else if (key == "seed") c.seed = parse_u64(key, value);
    else if (key == "dp_wiring") c.dp_wiring = parse_dp_wiring(value);
    else if (key == "fit_test_fraction") c.fit_test_fraction = parse_number(key, value);
    else if (key == "screen_alpha") c.screen_alpha = parse_number(key, value);
    else if (key == "vif_limit") c.vif_limit = parse_number(key, value);
    else if (key == "missing_threshold") c.missing_threshold = parse_number(key, value);
    else if (key == "fusion_image_size") c.fusion.image_size = parse_int(key, value);
    else if (key == "fusion_patch") c.fusion.patch = parse_int(key, value);
    else if (key == "fusion_d_model") c.fusion.d_model = parse_int(key, value);
    else if (key == "fusion_heads") c.fusion.n_heads = parse_int(key, value);
    else if (key == "fusion_blocks") c.fusion.n_encoder_blocks = parse_int(key, value);
    else if (key == "fusion_head_hidden") c.fusion.head_hidden = parse_int(key, value);
    else if (key == "fusion_ca_direction")
        c.fusion.ca_direction = fusion::parse_ca_direction(value);
    else if (key == "fusion_lr_candidates") c.fusion_lr_candidates = parse_list(key, value);
    else if (key == "fusion_cv_epochs") c.fusion_cv_epochs = parse_int(key, value);
    else if (key == "fusion_final_epochs") c.fusion_final_epochs = parse_int(key, value);
    else if (key == "fusion_k_folds") c.fusion_k_folds = parse_int(key, value);
    else if (key == "fusion_batch") c.fusion_batch = parse_int(key, value);
    else if (key == "fusion_test_fraction") c.fusion_test_fraction = parse_number(key, value);
    else throw ConfigError("unknown config key: " + key);
}

}  // namespace detail

/// Parses the flat key=value format: one pair per line, '#' starts a
/// comment, blank lines ignored, later occurrences of a key override
/// earlier ones. Unknown keys are rejected so typos fail loudly. The result
/// still needs finalize() after any command-line overrides.
inline RunConfig parse_run_config(std::istream& in, const std::string& origin) {
    RunConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        try {
            detail::apply_key(c, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError(path.string());
    return parse_run_config(in, path.string());
}

}  // namespace mhquant::pipeline
