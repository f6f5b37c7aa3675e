#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mhquant/core/csv.hpp"
#include "mhquant/core/records.hpp"
#include "mhquant/errors.hpp"

namespace mhquant::core {

/// A rejected manifest row, with its 1-based line number in the file.
struct RowError {
    int line = 0;
    std::string message;
};

/// Result of loading a manifest CSV. Rows that could not be parsed are
/// rejected individually and reported in row_errors; everything else is
/// grouped into one LongitudinalSeries per eye, in order of first appearance.
struct Manifest {
    std::vector<LongitudinalSeries> series;
    std::vector<std::string> clinical_columns;  ///< clinical column names, manifest order
    std::vector<RowError> row_errors;

    const LongitudinalSeries* find(const std::string& eye_id) const {
        for (const auto& s : series)
            if (s.eye_id == eye_id) return &s;
        return nullptr;
    }
};

namespace detail {

inline std::optional<int> parse_bcva(const std::string& field, int line_no) {
    if (field.empty()) return std::nullopt;
    auto v = csv::parse_cell(field, line_no, "bcva_etdrs");
    if (*v != static_cast<int>(*v))
        throw MalformedRowError(line_no, "bcva_etdrs must be an integer letter count");
    int letters = static_cast<int>(*v);
    if (letters < 0 || letters > 100)
        throw MalformedRowError(line_no, "bcva_etdrs out of range 0..100");
    return letters;
}

}  // namespace detail

/// Loads the study manifest. The header must contain eye_id and stage;
/// bcva_etdrs, scan_h, scan_v, spacing_x and spacing_y are recognized when
/// present, and every remaining column is treated as a numeric clinical
/// variable. Structural problems (missing file, bad header) throw; bad data
/// rows are skipped and reported per line.
inline Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError(path.string());

    std::string header_line;
    if (!std::getline(in, header_line))
        throw MalformedRowError(1, "manifest is empty");
    std::vector<std::string> header = csv::split_line(header_line);

    auto col = [&](const std::string& name) -> int {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };
    const int c_eye = col("eye_id");
    const int c_stage = col("stage");
    if (c_eye < 0 || c_stage < 0)
        throw MalformedRowError(1, "manifest header must contain eye_id and stage");
    const int c_bcva = col("bcva_etdrs");
    const int c_scan_h = col("scan_h");
    const int c_scan_v = col("scan_v");
    const int c_sx = col("spacing_x");
    const int c_sy = col("spacing_y");

    Manifest out;
    std::vector<int> clinical_cols;
    for (int j = 0; j < static_cast<int>(header.size()); ++j) {
        if (j == c_eye || j == c_stage || j == c_bcva || j == c_scan_h || j == c_scan_v ||
            j == c_sx || j == c_sy)
            continue;
        if (header[j].empty()) throw MalformedRowError(1, "empty column name in header");
        out.clinical_columns.push_back(header[j]);
        clinical_cols.push_back(j);
    }

    std::map<std::string, std::size_t> series_index;
    std::set<std::pair<std::string, Stage>> seen;

    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<std::string> f = csv::split_line(line);
        try {
            if (f.size() != header.size())
                throw MalformedRowError(line_no, "expected " + std::to_string(header.size()) +
                                                     " fields, got " + std::to_string(f.size()));
            StudyRecord rec;
            rec.eye_id = f[c_eye];
            if (rec.eye_id.empty()) throw MalformedRowError(line_no, "empty eye_id");
            try {
                rec.stage = parse_stage(f[c_stage]);
            } catch (const Error&) {
                throw MalformedRowError(line_no, "unknown stage '" + f[c_stage] + "'");
            }
            if (!seen.insert({rec.eye_id, rec.stage}).second)
                throw DuplicateStageError(rec.eye_id, to_string(rec.stage));

            if (c_bcva >= 0) rec.bcva_etdrs = detail::parse_bcva(f[c_bcva], line_no);
            if (c_scan_h >= 0) rec.scan_h_path = f[c_scan_h];
            if (c_scan_v >= 0) rec.scan_v_path = f[c_scan_v];
            if (c_sx >= 0) {
                rec.spacing_x_override = csv::parse_cell(f[c_sx], line_no, "spacing_x");
                if (rec.spacing_x_override && !(*rec.spacing_x_override > 0.0))
                    throw MalformedRowError(line_no, "spacing_x must be positive");
            }
            if (c_sy >= 0) {
                rec.spacing_y_override = csv::parse_cell(f[c_sy], line_no, "spacing_y");
                if (rec.spacing_y_override && !(*rec.spacing_y_override > 0.0))
                    throw MalformedRowError(line_no, "spacing_y must be positive");
            }
            for (std::size_t k = 0; k < clinical_cols.size(); ++k)
                rec.clinical[out.clinical_columns[k]] =
                    csv::parse_cell(f[clinical_cols[k]], line_no, out.clinical_columns[k]);

            auto [it, inserted] = series_index.try_emplace(rec.eye_id, out.series.size());
            if (inserted) out.series.push_back(LongitudinalSeries{rec.eye_id, {}});
            out.series[it->second].records.emplace(rec.stage, std::move(rec));
        } catch (const Error& e) {
            out.row_errors.push_back({line_no, e.what()});
        }
    }
    return out;
}

}  // namespace mhquant::core
