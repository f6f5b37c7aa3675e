#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhquant/core/manifest.hpp"
#include "mhquant/core/scan_io.hpp"
#include "mhquant/dynamics/recovery.hpp"
#include "mhquant/fusion/checkpoint.hpp"
#include "mhquant/fusion/harness.hpp"
#include "mhquant/fusion/train.hpp"
#include "mhquant/morphometry/features.hpp"
#include "mhquant/pipeline/design.hpp"
#include "mhquant/pipeline/feature_table.hpp"
#include "mhquant/pipeline/reports.hpp"
#include "mhquant/pipeline/run_config.hpp"
#include "mhquant/segmetrics/metrics.hpp"
#include "mhquant/stats/compare.hpp"
#include "mhquant/stats/correlation.hpp"
#include "mhquant/stats/shapiro_wilk.hpp"
#include "mhquant/stats/vif.hpp"

namespace mhquant::pipeline {

/// Command exit conventions: 0 clean, 1 finished with skipped inputs or
/// other recoverable trouble (details on the log stream), fatal problems
/// propagate as exceptions for the CLI shell to turn into exit code 2.
inline constexpr int kOk = 0;
inline constexpr int kPartial = 1;

namespace detail {

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    return std::filesystem::path(cfg.out_dir) / name;
}

inline core::Manifest load_manifest_checked(const RunConfig& cfg, std::ostream& log,
                                            bool& partial) {
    auto manifest = core::load_manifest(cfg.manifest);
    for (const auto& e : manifest.row_errors) {
        log << "warning: " << cfg.manifest << ":" << e.line << ": " << e.message
            << " (row skipped)\n";
        partial = true;
    }
    if (manifest.series.empty()) throw EmptyInputError("manifest has no usable rows");
    return manifest;
}

/// Loads whichever scans the record lists, resolving relative paths against
/// the scan root. A listed scan that cannot be loaded is reported and left
/// unset; the caller decides whether the remaining data suffices.
inline void attach_scans(core::StudyRecord& rec, const RunConfig& cfg, std::ostream& log,
                         bool& partial) {
    const auto root = cfg.resolved_scan_root();
    const auto spacing = rec.effective_spacing(cfg.spacing);
    auto load_one = [&](const std::string& rel, core::Orientation o)
        -> std::optional<core::LabeledScan> {
        std::filesystem::path p(rel);
        if (p.is_relative()) p = root / p;
        try {
            return core::load_scan(p, o, spacing);
        } catch (const Error& e) {
            log << "warning: " << rec.eye_id << "/" << core::to_string(rec.stage) << ": "
                << e.what() << " (scan skipped)\n";
            partial = true;
            return std::nullopt;
        }
    };
    if (!rec.scan_h_path.empty()) rec.scan_h = load_one(rec.scan_h_path, core::Orientation::Horizontal);
    if (!rec.scan_v_path.empty()) rec.scan_v = load_one(rec.scan_v_path, core::Orientation::Vertical);
}

struct ExtractedTable {
    FeatureTable table;
    bool partial = false;
};

/// Morphometry over every visit that has at least one loadable scan, in
/// manifest order. Visits that list no scans (acuity-only follow-ups) are
/// silently fine; listed-but-unloadable scans degrade the exit code.
inline ExtractedTable extract_table(const core::Manifest& manifest, const RunConfig& cfg,
                                    std::ostream& log) {
    ExtractedTable out;
    for (const auto& series : manifest.series) {
        for (const auto& [stage, rec_in] : series.records) {
            if (!rec_in.has_any_scan_path()) continue;
            core::StudyRecord rec = rec_in;
            attach_scans(rec, cfg, log, out.partial);
            if (!rec.has_any_scan()) {
                log << "warning: " << rec.eye_id << "/" << core::to_string(stage)
                    << ": no scan could be loaded (visit skipped)\n";
                out.partial = true;
                continue;
            }
            out.table.rows.push_back(
                morphometry::extract_features(rec, cfg.qualitative_min_pixels));
        }
    }
    if (out.table.rows.empty()) throw EmptyInputError("no visit produced features");
    return out;
}

/// Feature rows for downstream commands: reuse an existing features CSV in
/// the output directory when present, otherwise extract from the manifest.
inline ExtractedTable obtain_table(const core::Manifest& manifest, const RunConfig& cfg,
                                   std::ostream& log) {
    const auto dyn_csv = std::filesystem::path(cfg.out_dir) / "features_dynamics.csv";
    const auto base_csv = std::filesystem::path(cfg.out_dir) / "features.csv";
    for (const auto& p : {dyn_csv, base_csv})
        if (std::filesystem::exists(p)) {
            ExtractedTable out;
            out.table = read_feature_csv(p.string());
            return out;
        }
    return extract_table(manifest, cfg, log);
}

inline stats::DataMatrix select_columns(const stats::DataMatrix& m,
                                        const std::vector<std::string>& keep) {
    std::vector<int> idx;
    for (const auto& c : keep) idx.push_back(m.col(c));
    stats::DataMatrix out;
    out.columns = keep;
    out.outcomes = m.outcomes;
    out.row_ids = m.row_ids;
    out.rows.reserve(m.rows.size());
    for (const auto& r : m.rows) {
        std::vector<std::optional<double>> row;
        row.reserve(idx.size());
        for (int j : idx) row.push_back(r[j]);
        out.rows.push_back(std::move(row));
    }
    return out;
}

inline bool is_constant_column(const stats::DataMatrix& m, const std::string& name) {
    const auto v = m.column_values(m.col(name));
    for (double x : v)
        if (x != v.front()) return false;
    return true;
}

}  // namespace detail

/// Morphometry table for every visit with scans; writes features.csv.
inline int cmd_extract(const RunConfig& cfg, std::ostream& log) {
    bool partial = false;
    const auto manifest = detail::load_manifest_checked(cfg, log, partial);
    auto extracted = detail::extract_table(manifest, cfg, log);
    partial = partial || extracted.partial;

    const auto path = detail::out_path(cfg, "features.csv");
    write_feature_csv(path.string(), extracted.table);
    log << "wrote " << path.string() << " (" << extracted.table.rows.size() << " rows)\n";
    return partial ? kPartial : kOk;
}

/// Recovery-rate derivation over each eye's full longitudinal series;
/// writes features_dynamics.csv with the rate block filled on PRE rows.
inline int cmd_dynamics(const RunConfig& cfg, std::ostream& log) {
    bool partial = false;
    const auto manifest = detail::load_manifest_checked(cfg, log, partial);
    auto extracted = detail::obtain_table(manifest, cfg, log);
    partial = partial || extracted.partial;
    auto& table = extracted.table;

    // group_by_eye also rejects duplicate (eye, stage) rows up front.
    auto grouped = group_by_eye(table);
    std::map<std::string, std::map<core::Stage, morphometry::FeatureVector*>> by_eye;
    for (auto& fv : table.rows) by_eye[fv.eye_id][fv.stage] = &fv;

    const dynamics::DynamicsOptions opt = detail::dynamics_options(cfg);
    for (auto& [eye, stages] : grouped) {
        try {
            dynamics::derive_dynamics(stages, opt);
            by_eye[eye][core::Stage::PRE]->dyn = stages.at(core::Stage::PRE).dyn;
        } catch (const Error& e) {
            log << "warning: " << eye << ": " << e.what() << " (rates left empty)\n";
            partial = true;
        }
    }

    table.has_dynamics = true;
    const auto path = detail::out_path(cfg, "features_dynamics.csv");
    write_feature_csv(path.string(), table);
    log << "wrote " << path.string() << " (" << table.rows.size() << " rows)\n";
    return partial ? kPartial : kOk;
}

/// The full outcome-model protocol at one horizon: design assembly, missing
/// -data cleaning, per-column normality and correlation screening, VIF
/// elimination, univariate screening, the multivariate logistic fit, and
/// (unless --without-dp) the added-value comparison for the dynamic
/// parameters. Artifacts: fit_<h>.json, roc_<h>.csv, roc_<h>.svg.
inline int cmd_fit(const RunConfig& cfg, core::Stage horizon, bool without_dp,
                   std::ostream& log) {
    bool partial = false;
    const auto manifest = detail::load_manifest_checked(cfg, log, partial);
    auto extracted = detail::obtain_table(manifest, cfg, log);
    partial = partial || extracted.partial;

    FitReport rep;
    rep.horizon = horizon_name(horizon);
    rep.profile = cfg.profile;
    rep.without_dp = without_dp;

    auto design = assemble_design(extracted.table, manifest, horizon, cfg, without_dp);
    rep.skipped_eyes = design.skipped_eyes;
    rep.missing_outcomes = design.missing_outcomes;
    for (const auto& eye : design.skipped_eyes) {
        log << "warning: " << eye << ": no baseline features (eye skipped)\n";
        partial = true;
    }

    auto cleaned = stats::clean(design.matrix, cfg.missing_threshold);
    rep.cleaning = cleaned.second;
    const auto& m = cleaned.first;
    rep.n_rows = static_cast<int>(m.rows.size());
    if (m.rows.size() < 3) throw InsufficientDataError("fit: fewer than 3 usable eyes");

    const auto y = m.outcome_binary();
    if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); }))
        throw OneClassOnlyError();

    // Per-column distribution screen: Shapiro-Wilk normality, then the
    // normality-gated correlation against the BCVA letter change.
    std::vector<double> delta;
    delta.reserve(m.rows.size());
    for (const auto& o : m.outcomes) delta.push_back(o->delta_letters);
    for (int j = 0; j < m.n_cols(); ++j) {
        ColumnScreen cs;
        cs.column = m.columns[j];
        const auto v = m.column_values(j);
        try {
            cs.normality = stats::shapiro_wilk(v);
        } catch (const Error& e) {
            cs.note = e.what();
        }
        try {
            cs.correlation = stats::correlate(v, delta);
        } catch (const Error& e) {
            if (!cs.note.empty()) cs.note += "; ";
            cs.note += e.what();
        }
        rep.screening.push_back(std::move(cs));
    }

    rep.vif = stats::vif_eliminate(m, cfg.vif_limit);
    const auto& reduced = rep.vif.reduced;
    rep.univariate = stats::univariate_screen(reduced, cfg.screen_alpha);

    // Multivariate model on the screen survivors; nothing surviving is a
    // legitimate (if disappointing) result and degrades to intercept-only.
    rep.multivariate_columns = rep.univariate.selected;
    if (rep.multivariate_columns.empty())
        rep.notes.push_back("no column passed the univariate screen; intercept-only model");
    auto model_m = detail::select_columns(reduced, rep.multivariate_columns);
    rep.multivariate = stats::fit_logistic(model_m.dense(), y, model_m.columns);

    std::vector<double> scores;
    scores.reserve(y.size());
    for (const auto& row : model_m.dense()) scores.push_back(stats::predict_prob(rep.multivariate, row));
    rep.roc = stats::roc_curve(scores, y);

    if (!without_dp) {
        // Added-value test: screen survivors plus every dynamic column that
        // made it through cleaning, constants dropped (they cannot be fit).
        std::vector<std::string> dp_present;
        for (const auto& c : design.dp_columns)
            if (std::find(m.columns.begin(), m.columns.end(), c) != m.columns.end())
                dp_present.push_back(c);
        if (dp_present.empty()) {
            rep.notes.push_back("dynamic-parameter comparison skipped: no dynamic column survived cleaning");
        } else {
            std::vector<std::string> cols = rep.univariate.selected;
            for (const auto& c : dp_present)
                if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
            std::vector<std::string> usable;
            for (const auto& c : cols) {
                if (detail::is_constant_column(m, c))
                    rep.notes.push_back("comparison dropped constant column " + c);
                else
                    usable.push_back(c);
            }
            try {
                stats::CompareOptions copt;
                copt.test_fraction = cfg.fit_test_fraction;
                copt.seed = cfg.seed;
                copt.threshold = cfg.classification_threshold;
                rep.dp_comparison = stats::compare_with_without_dp(
                    detail::select_columns(m, usable), copt, dp_present);
            } catch (const Error& e) {
                rep.notes.push_back(std::string("dynamic-parameter comparison skipped: ") + e.what());
            }
        }
    }

    const std::string h = rep.horizon;
    write_json_file(detail::out_path(cfg, "fit_" + h + ".json").string(), to_json(rep));
    write_roc_csv(detail::out_path(cfg, "roc_" + h + ".csv").string(), rep.roc);
    write_roc_svg(detail::out_path(cfg, "roc_" + h + ".svg").string(), rep.roc,
                  "outcome model, horizon " + h);
    log << "wrote fit_" << h << ".json, roc_" << h << ".csv, roc_" << h << ".svg ("
        << rep.n_rows << " eyes)\n";
    return partial ? kPartial : kOk;
}

/// Segmentation-quality table for a directory of predicted masks against
/// same-named truth masks; writes segmetrics.csv.
inline int cmd_segmetrics(const RunConfig& cfg, const std::string& pred_dir,
                          const std::string& truth_dir, std::ostream& log) {
    auto list_masks = [](const std::string& dir) {
        if (!std::filesystem::is_directory(dir)) throw FileNotFoundError(dir);
        std::vector<std::string> names;
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            if (!e.is_regular_file()) continue;
            const auto ext = e.path().extension().string();
            if (ext == ".png" || ext == ".pgm") names.push_back(e.path().filename().string());
        }
        std::sort(names.begin(), names.end());
        return names;
    };
    const auto pred_names = list_masks(pred_dir);
    const auto truth_names = list_masks(truth_dir);
    for (const auto& n : pred_names)
        if (!std::binary_search(truth_names.begin(), truth_names.end(), n))
            throw UnpairedFileError(n);
    for (const auto& n : truth_names)
        if (!std::binary_search(pred_names.begin(), pred_names.end(), n))
            throw UnpairedFileError(n);
    if (pred_names.empty()) throw EmptyInputError("no mask files found");

    std::vector<core::LabeledScan> pred, truth;
    for (const auto& n : pred_names) {
        pred.push_back(core::load_scan(std::filesystem::path(pred_dir) / n,
                                       core::Orientation::Horizontal, cfg.spacing));
        truth.push_back(core::load_scan(std::filesystem::path(truth_dir) / n,
                                        core::Orientation::Horizontal, cfg.spacing));
    }
    const auto rep = segmetrics::report(pred, truth);
    const auto path = detail::out_path(cfg, "segmetrics.csv");
    write_segmetrics_csv(path.string(), rep);
    log << "wrote " << path.string() << " (" << pred.size() << " pairs, mean dice "
        << core::csv::format_double(rep.mean.dice) << ")\n";
    return kOk;
}

namespace detail {

struct FusionDataset {
    std::vector<fusion::Sample> samples;
    std::vector<int> dp_value_indices;
    std::vector<std::string> clinical_columns;
    std::vector<std::string> value_columns;
    std::vector<double> clinical_mean, clinical_sd;
    std::vector<double> values_mean, values_sd;
    bool partial = false;
};

inline std::vector<double> resize_nearest(const core::LabeledScan& scan, int size) {
    std::vector<double> img(static_cast<std::size_t>(size) * size);
    const double scale = 1.0 / (core::kNumClassLabels - 1);
    for (int y = 0; y < size; ++y) {
        const int sy = std::min(scan.height() - 1, y * scan.height() / size);
        for (int x = 0; x < size; ++x) {
            const int sx = std::min(scan.width() - 1, x * scan.width() / size);
            img[static_cast<std::size_t>(y) * size + x] =
                static_cast<int>(scan.at(sx, sy)) * scale;
        }
    }
    return img;
}

/// Column-wise mean imputation followed by standardization. Constant
/// columns standardize to zero rather than dividing by zero.
inline void impute_and_standardize(std::vector<std::vector<std::optional<double>>>& raw,
                                   std::vector<double>& mean_out, std::vector<double>& sd_out) {
    if (raw.empty()) return;
    const std::size_t dim = raw.front().size();
    mean_out.assign(dim, 0.0);
    sd_out.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : raw)
            if (r[j]) {
                sum += *r[j];
                ++n;
            }
        const double mean = n ? sum / n : 0.0;
        double ss = 0.0;
        for (const auto& r : raw)
            if (r[j]) ss += (*r[j] - mean) * (*r[j] - mean);
        const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
        mean_out[j] = mean;
        sd_out[j] = sd;
        for (auto& r : raw) {
            const double v = r[j] ? *r[j] : mean;
            r[j] = sd > 0.0 ? (v - mean) / sd : 0.0;
        }
    }
}

/// Assembles the classifier's training set from the manifest: baseline scan
/// as the image, clinical covariates and the morphometry-plus-rates block as
/// the two vectors, outcome at the horizon as the label.
inline FusionDataset build_fusion_dataset(const core::Manifest& manifest,
                                          const FeatureTable& table, core::Stage horizon,
                                          const RunConfig& cfg, std::ostream& log) {
    if (manifest.clinical_columns.empty())
        throw ConfigError("train-fusion needs at least one clinical column in the manifest");

    FusionDataset out;
    out.clinical_columns = manifest.clinical_columns;
    out.value_columns = {"mld_um", "bd_um", "e_um", "height_um", "hole_area_um2",
                         "pseudocyst_area_um2", "elm_defect_um", "ez_defect_um", "mhi",
                         "thi", "dhi", "area_ratio", "erm_present", "traction_space_present"};
    for (const auto& c : stats::dynamic_parameter_columns()) {
        out.dp_value_indices.push_back(static_cast<int>(out.value_columns.size()));
        out.value_columns.push_back(c);
    }

    const auto by_eye = group_by_eye(table);
    std::vector<std::vector<std::optional<double>>> raw_c, raw_v;
    auto skip = [&](const std::string& eye, const std::string& why) {
        log << "warning: " << eye << ": " << why << " (not in fusion set)\n";
        out.partial = true;
    };

    for (const auto& series : manifest.series) {
        const auto* pre_rec = series.find(core::Stage::PRE);
        const auto* hz_rec = series.find(horizon);
        if (!pre_rec || !pre_rec->bcva_etdrs || !hz_rec || !hz_rec->bcva_etdrs) {
            skip(series.eye_id, "missing baseline or horizon acuity");
            continue;
        }
        const auto eye_it = by_eye.find(series.eye_id);
        if (eye_it == by_eye.end() ||
            eye_it->second.find(core::Stage::PRE) == eye_it->second.end()) {
            skip(series.eye_id, "no baseline features");
            continue;
        }

        core::StudyRecord rec = *pre_rec;
        bool scan_trouble = false;
        attach_scans(rec, cfg, log, scan_trouble);
        const core::LabeledScan* scan =
            rec.scan_h ? &*rec.scan_h : (rec.scan_v ? &*rec.scan_v : nullptr);
        if (!scan) {
            skip(series.eye_id, "no loadable baseline scan");
            continue;
        }
        out.partial = out.partial || scan_trouble;

        fusion::Sample s;
        s.image = resize_nearest(*scan, cfg.fusion.image_size);
        s.label = core::outcome_label(*pre_rec, *hz_rec, cfg.superior_threshold).value ==
                          core::Outcome::Superior
                      ? 1
                      : 0;

        std::vector<std::optional<double>> rc;
        for (const auto& c : manifest.clinical_columns) {
            auto it = pre_rec->clinical.find(c);
            rc.push_back(it == pre_rec->clinical.end() ? std::nullopt : it->second);
        }
        raw_c.push_back(std::move(rc));

        const auto& pre = eye_it->second.at(core::Stage::PRE);
        const auto dyn = eye_dynamics(eye_it->second, horizon, cfg);
        std::vector<std::optional<double>> rv;
        auto opt_if = [](bool ok, double v) {
            return ok ? std::optional<double>(v) : std::nullopt;
        };
        rv.push_back(opt_if(pre.hole_present, pre.mld_um));
        rv.push_back(opt_if(pre.hole_present, pre.bd_um));
        rv.push_back(opt_if(pre.hole_present, pre.e_um));
        rv.push_back(opt_if(pre.hole_present, pre.height_um));
        rv.push_back(pre.hole_area_um2);
        rv.push_back(pre.pseudocyst_area_um2);
        rv.push_back(pre.elm_defect_um);
        rv.push_back(pre.ez_defect_um);
        rv.push_back(pre.composites.mhi);
        rv.push_back(pre.composites.thi);
        rv.push_back(pre.composites.dhi);
        rv.push_back(pre.composites.area_ratio);
        rv.push_back(pre.erm_present ? 1.0 : 0.0);
        rv.push_back(pre.traction_space_present ? 1.0 : 0.0);
        auto push_rate = [&](const std::optional<morphometry::RecoveryRateValue>& r) {
            rv.push_back(r ? std::optional<double>(r->weighted) : std::nullopt);
            rv.push_back(r ? std::optional<double>(r->censored ? 1.0 : 0.0) : std::nullopt);
        };
        push_rate(dyn.hole);
        push_rate(dyn.cyst);
        push_rate(dyn.elm);
        push_rate(dyn.ez);
        raw_v.push_back(std::move(rv));

        out.samples.push_back(std::move(s));
    }
    if (out.samples.empty()) throw EmptyInputError("no eye qualified for fusion training");

    impute_and_standardize(raw_c, out.clinical_mean, out.clinical_sd);
    impute_and_standardize(raw_v, out.values_mean, out.values_sd);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        for (const auto& v : raw_c[i]) out.samples[i].v_c.push_back(*v);
        for (const auto& v : raw_v[i]) out.samples[i].v_v.push_back(*v);
    }
    return out;
}

}  // namespace detail

/// Trains the multimodal classifier at one horizon: runs the six-row
/// modality/DP ablation grid (harness_<h>.json), then fits a deployment
/// model on every sample at the grid's tri-modal learning rate
/// (fusion_<h>.json) plus the preprocessing constants a caller needs to
/// standardize new inputs (fusion_<h>_preprocess.json).
inline int cmd_train_fusion(const RunConfig& cfg, core::Stage horizon, std::ostream& log) {
    bool partial = false;
    const auto manifest = detail::load_manifest_checked(cfg, log, partial);
    auto extracted = detail::obtain_table(manifest, cfg, log);
    partial = partial || extracted.partial;

    auto data = detail::build_fusion_dataset(manifest, extracted.table, horizon, cfg, log);
    partial = partial || data.partial;

    fusion::FusionConfig base = cfg.fusion;
    base.modality = fusion::ModalityMode::TriModal;
    base.clinical_dim = static_cast<int>(data.clinical_mean.size());
    base.values_dim = static_cast<int>(data.values_mean.size());
    base.seed = cfg.seed;
    base.validate();

    fusion::HarnessOptions opt;
    opt.test_fraction = cfg.fusion_test_fraction;
    opt.k_folds = cfg.fusion_k_folds;
    opt.lr_candidates = cfg.fusion_lr_candidates;
    opt.cv_epochs = cfg.fusion_cv_epochs;
    opt.final_epochs = cfg.fusion_final_epochs;
    opt.batch_size = cfg.fusion_batch;
    opt.seed = cfg.seed;

    auto rep = fusion::evaluate_harness({data.samples, data.dp_value_indices}, base, opt);
    rep.context_reference_auc = context_auc(horizon);

    const std::string h = horizon_name(horizon);
    write_json_file(detail::out_path(cfg, "harness_" + h + ".json").string(),
                    to_json(rep, h));

    // Deployment model: every sample, tri-modal, at the learning rate the
    // grid chose for that configuration.
    fusion::TrainOptions topt;
    topt.epochs = cfg.fusion_final_epochs;
    topt.lr = rep.rows.front().chosen_lr;
    topt.batch_size = cfg.fusion_batch;
    const auto trained = fusion::train(data.samples, base, topt);
    fusion::save_checkpoint(detail::out_path(cfg, "fusion_" + h + ".json").string(), base,
                            trained.params);

    nlohmann::json pre{{"clinical_columns", data.clinical_columns},
                       {"clinical_mean", data.clinical_mean},
                       {"clinical_sd", data.clinical_sd},
                       {"value_columns", data.value_columns},
                       {"values_mean", data.values_mean},
                       {"values_sd", data.values_sd},
                       {"image_size", cfg.fusion.image_size},
                       {"label_scale", core::kNumClassLabels - 1}};
    write_json_file(detail::out_path(cfg, "fusion_" + h + "_preprocess.json").string(), pre);

    log << "wrote harness_" << h << ".json, fusion_" << h << ".json ("
        << data.samples.size() << " samples, " << rep.rows.size() << " grid rows)\n";
    return partial ? kPartial : kOk;
}

/// Scores one sample with a saved checkpoint and prints P(Superior).
/// The sample file carries model-space inputs: "image" is the flattened
/// image_size x image_size grid of label codes scaled to [0, 1], "v_c" and
/// "v_v" are the standardized vectors (see fusion_<h>_preprocess.json).
inline int cmd_predict(const std::string& checkpoint_path, const std::string& sample_path,
                       std::ostream& out) {
    const auto [cfg, params] = fusion::load_checkpoint(checkpoint_path);

    std::ifstream in(sample_path);
    if (!in) throw FileNotFoundError(sample_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("predict: malformed sample json: " + std::string(e.what()));
    }

    fusion::Sample s;
    auto read_vec = [&](const char* key, std::vector<double>& dst, bool required) {
        if (!j.contains(key)) {
            if (required) throw Error(std::string("predict: sample is missing \"") + key + "\"");
            return;
        }
        if (!j[key].is_array()) throw Error(std::string("predict: \"") + key + "\" must be an array");
        dst = j[key].get<std::vector<double>>();
    };
    const bool needs_image = cfg.modality != fusion::ModalityMode::VectorsOnly;
    const bool needs_vectors = cfg.modality != fusion::ModalityMode::ImageOnly;
    read_vec("image", s.image, needs_image);
    read_vec("v_c", s.v_c, needs_vectors);
    read_vec("v_v", s.v_v, needs_vectors);

    const auto res = fusion::forward(cfg, params, s);
    out << core::csv::format_double(res.p_superior) << '\n';
    return kOk;
}

/// Human-readable summary of a fit artifact plus a refreshed ROC SVG.
inline int cmd_report(const RunConfig& cfg, core::Stage horizon, std::ostream& out) {
    const std::string h = horizon_name(horizon);
    const auto fit_path = std::filesystem::path(cfg.out_dir) / ("fit_" + h + ".json");
    std::ifstream in(fit_path);
    if (!in) throw FileNotFoundError(fit_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("report: malformed fit json: " + std::string(e.what()));
    }

    const auto roc_path = std::filesystem::path(cfg.out_dir) / ("roc_" + h + ".csv");
    std::ifstream roc_in(roc_path);
    if (!roc_in) throw FileNotFoundError(roc_path.string());
    stats::RocCurve roc;
    roc.auc = j.value("roc_auc", 0.0);
    std::string line;
    std::getline(roc_in, line);  // header
    int lineno = 1;
    while (std::getline(roc_in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = core::csv::split_line(line);
        if (cells.size() != 3) throw MalformedRowError(lineno, "expected 3 cells");
        stats::RocPoint p;
        p.threshold = *core::csv::parse_cell(cells[0], lineno, "threshold");
        p.fpr = *core::csv::parse_cell(cells[1], lineno, "fpr");
        p.tpr = *core::csv::parse_cell(cells[2], lineno, "tpr");
        roc.points.push_back(p);
    }
    write_roc_svg((std::filesystem::path(cfg.out_dir) / ("roc_" + h + ".svg")).string(), roc,
                  "outcome model, horizon " + h);

    out << "Outcome model, horizon " << h << "\n";
    out << "  eyes: " << j.value("n_rows", 0)
        << ", missing outcomes dropped: " << j["cleaning"].value("dropped_outcome_rows", 0)
        << "\n";
    auto fmt = [](const nlohmann::json& v) {
        return v.is_number() ? core::csv::format_double(v.get<double>()) : std::string("-");
    };
    out << "  term  OR [95% CI]  p\n";
    const auto& fit = j["multivariate"];
    auto print_term = [&](const nlohmann::json& t) {
        out << "    " << t.value("name", std::string("(intercept)")) << "  "
            << fmt(t["odds_ratio"]) << " [" << fmt(t["ci_low"]) << ", " << fmt(t["ci_high"])
            << "]  " << fmt(t["p"]) << "\n";
    };
    print_term(fit["intercept"]);
    for (const auto& t : fit["terms"]) print_term(t);
    out << "  nagelkerke_r2: " << fmt(fit["nagelkerke_r2"]) << "\n";
    out << "  in-sample auc: " << fmt(j["roc_auc"]);
    if (j.contains("context_reference_auc"))
        out << " (externally reported deep-model reference: "
            << fmt(j["context_reference_auc"]) << ")";
    out << "\n";
    if (j.contains("dp_comparison")) {
        const auto& c = j["dp_comparison"];
        out << "  dynamic parameters: auc " << fmt(c["without_dp"]["auc"]) << " -> "
            << fmt(c["with_dp"]["auc"]) << ", likelihood-ratio p " << fmt(c["lr_p"]) << "\n";
    }
    return kOk;
}

}  // namespace mhquant::pipeline
