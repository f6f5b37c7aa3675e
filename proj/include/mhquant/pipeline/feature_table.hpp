#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mhquant/core/csv.hpp"
#include "mhquant/core/stage.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/morphometry/features.hpp"

namespace mhquant::pipeline {

/// Measurement columns of the features CSV, in file order, following the
/// two key columns eye_id and stage. Hole scalars are empty when no hole
/// was measured; areas and band defects are always written (an absent
/// lesion is a genuine 0, which is exactly what the recovery-rate
/// trajectories need); composites and circularities are empty when
/// undefined; flags are 1/0.
inline const std::vector<std::string>& feature_columns() {
    static const std::vector<std::string> cols = {
        "mld_um", "bd_um", "e_um", "height_um", "hole_area_um2", "pseudocyst_area_um2",
        "elm_defect_um", "ez_defect_um", "mhi", "thi", "dhi", "area_ratio",
        "erm_present", "traction_space_present", "hole_circularity", "cyst_circularity",
    };
    return cols;
}

/// Recovery-rate columns appended by the dynamics command. Only PRE rows
/// carry values; postoperative rows leave every cell empty.
inline const std::vector<std::string>& dynamics_columns() {
    static const std::vector<std::string> cols = {
        "rr_hole", "rr_hole_w", "rr_hole_censored",
        "rr_cyst", "rr_cyst_w", "rr_cyst_censored",
        "rr_elm",  "rr_elm_w",  "rr_elm_censored",
        "rr_ez",   "rr_ez_w",   "rr_ez_censored",
    };
    return cols;
}

struct FeatureTable {
    std::vector<morphometry::FeatureVector> rows;
    bool has_dynamics = false;
};

namespace detail {

inline std::string opt_cell(const std::optional<double>& v) {
    return v ? core::csv::format_double(*v) : std::string{};
}

inline std::string num_cell(double v) { return core::csv::format_double(v); }

inline std::string flag_cell(bool v) { return v ? "1" : "0"; }

inline void append_rate_cells(std::vector<std::string>& out,
                              const std::optional<morphometry::RecoveryRateValue>& r) {
    if (!r) {
        out.insert(out.end(), {"", "", ""});
        return;
    }
    out.push_back(num_cell(r->rate));
    out.push_back(num_cell(r->weighted));
    out.push_back(flag_cell(r->censored));
}

}  // namespace detail

inline void write_feature_csv(std::ostream& out, const FeatureTable& table) {
    std::vector<std::string> header = {"eye_id", "stage"};
    header.insert(header.end(), feature_columns().begin(), feature_columns().end());
    if (table.has_dynamics)
        header.insert(header.end(), dynamics_columns().begin(), dynamics_columns().end());
    out << core::csv::join(header) << '\n';

    for (const auto& f : table.rows) {
        std::vector<std::string> cells = {f.eye_id, core::to_string(f.stage)};
        const bool hole = f.hole_present;
        cells.push_back(hole ? detail::num_cell(f.mld_um) : "");
        cells.push_back(hole ? detail::num_cell(f.bd_um) : "");
        cells.push_back(hole ? detail::num_cell(f.e_um) : "");
        cells.push_back(hole ? detail::num_cell(f.height_um) : "");
        cells.push_back(detail::num_cell(f.hole_area_um2));
        cells.push_back(detail::num_cell(f.pseudocyst_area_um2));
        cells.push_back(detail::num_cell(f.elm_defect_um));
        cells.push_back(detail::num_cell(f.ez_defect_um));
        cells.push_back(detail::opt_cell(f.composites.mhi));
        cells.push_back(detail::opt_cell(f.composites.thi));
        cells.push_back(detail::opt_cell(f.composites.dhi));
        cells.push_back(detail::opt_cell(f.composites.area_ratio));
        cells.push_back(detail::flag_cell(f.erm_present));
        cells.push_back(detail::flag_cell(f.traction_space_present));
        cells.push_back(detail::opt_cell(f.hole_circularity));
        cells.push_back(detail::opt_cell(f.cyst_circularity));
        if (table.has_dynamics) {
            detail::append_rate_cells(cells, f.dyn.hole);
            detail::append_rate_cells(cells, f.dyn.cyst);
            detail::append_rate_cells(cells, f.dyn.elm);
            detail::append_rate_cells(cells, f.dyn.ez);
        }
        out << core::csv::join(cells) << '\n';
    }
}

inline void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    write_feature_csv(out, table);
    if (!out) throw Error("failed writing " + path.string());
}

namespace detail {

inline std::optional<morphometry::RecoveryRateValue> read_rate_cells(
    const std::vector<std::string>& f, std::size_t base, int line_no, const std::string& name) {
    const auto rate = core::csv::parse_cell(f[base], line_no, name);
    const auto weighted = core::csv::parse_cell(f[base + 1], line_no, name + "_w");
    const auto censored = core::csv::parse_cell(f[base + 2], line_no, name + "_censored");
    if (!rate && !weighted && !censored) return std::nullopt;
    if (!rate || !weighted || !censored)
        throw MalformedRowError(line_no, name + ": partially filled recovery-rate cells");
    morphometry::RecoveryRateValue r;
    r.rate = *rate;
    r.weighted = *weighted;
    r.censored = *censored != 0.0;
    if (r.rate != 0.0) r.shape_weight = r.weighted / r.rate;
    return r;
}

}  // namespace detail

/// Reads a features CSV written by write_feature_csv, with or without the
/// dynamics columns. The header must match exactly; this format is an
/// internal hand-off, not a general CSV import.
inline FeatureTable read_feature_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw MalformedRowError(1, origin + " is empty");
    const auto header = core::csv::split_line(line);

    std::vector<std::string> base = {"eye_id", "stage"};
    base.insert(base.end(), feature_columns().begin(), feature_columns().end());
    std::vector<std::string> with_dyn = base;
    with_dyn.insert(with_dyn.end(), dynamics_columns().begin(), dynamics_columns().end());

    FeatureTable table;
    if (header == with_dyn)
        table.has_dynamics = true;
    else if (header != base)
        throw MalformedRowError(1, origin + ": header is not a features table");

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = core::csv::split_line(line);
        if (f.size() != header.size())
            throw MalformedRowError(line_no, origin + ": expected " +
                                                 std::to_string(header.size()) + " fields");
        morphometry::FeatureVector fv;
        fv.eye_id = f[0];
        if (fv.eye_id.empty()) throw MalformedRowError(line_no, origin + ": empty eye_id");
        fv.stage = core::parse_stage(f[1]);

        auto cell = [&](int j) { return core::csv::parse_cell(f[j], line_no, header[j]); };
        const auto mld = cell(2);
        fv.hole_present = mld.has_value();
        if (fv.hole_present) {
            const auto bd = cell(3), e = cell(4), h = cell(5);
            if (!bd || !e || !h)
                throw MalformedRowError(line_no, origin + ": partial hole geometry");
            fv.mld_um = *mld;
            fv.bd_um = *bd;
            fv.e_um = *e;
            fv.height_um = *h;
        }
        auto required = [&](int j) {
            const auto v = cell(j);
            if (!v) throw MalformedRowError(line_no, origin + ": " + header[j] + " is empty");
            return *v;
        };
        // Band-presence flags are not serialized; readback rows carry the
        // defect lengths only, which is all the downstream consumers use.
        fv.hole_area_um2 = required(6);
        fv.pseudocyst_area_um2 = required(7);
        fv.elm_defect_um = required(8);
        fv.ez_defect_um = required(9);
        fv.composites.mhi = cell(10);
        fv.composites.thi = cell(11);
        fv.composites.dhi = cell(12);
        fv.composites.area_ratio = cell(13);
        fv.erm_present = required(14) != 0.0;
        fv.traction_space_present = required(15) != 0.0;
        fv.hole_circularity = cell(16);
        fv.cyst_circularity = cell(17);

        if (table.has_dynamics) {
            fv.dyn.hole = detail::read_rate_cells(f, 18, line_no, "rr_hole");
            fv.dyn.cyst = detail::read_rate_cells(f, 21, line_no, "rr_cyst");
            fv.dyn.elm = detail::read_rate_cells(f, 24, line_no, "rr_elm");
            fv.dyn.ez = detail::read_rate_cells(f, 27, line_no, "rr_ez");
        }
        table.rows.push_back(std::move(fv));
    }
    return table;
}

inline FeatureTable read_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError(path.string());
    return read_feature_csv(in, path.filename().string());
}

/// Rows regrouped per eye and stage, the shape derive_dynamics consumes.
/// Duplicate (eye, stage) rows are rejected.
inline std::map<std::string, std::map<core::Stage, morphometry::FeatureVector>> group_by_eye(
    const FeatureTable& table) {
    std::map<std::string, std::map<core::Stage, morphometry::FeatureVector>> out;
    for (const auto& fv : table.rows)
        if (!out[fv.eye_id].emplace(fv.stage, fv).second)
            throw DuplicateStageError(fv.eye_id, core::to_string(fv.stage));
    return out;
}

}  // namespace mhquant::pipeline
