#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mhquant/errors.hpp"
#include "mhquant/fusion/model.hpp"
#include "mhquant/fusion/train.hpp"
#include "mhquant/stats/roc.hpp"
#include "mhquant/stats/split.hpp"

namespace mhquant::fusion {

/// Samples plus the bookkeeping the ablation grid needs: which entries of
/// the values vector are dynamic recovery-rate columns (removed for the
/// "without dynamic parameters" rows).
struct HarnessDataset {
    std::vector<Sample> samples;
    std::vector<int> dp_value_indices;
};

struct HarnessOptions {
    double test_fraction = 0.2;
    int k_folds = 5;
    std::vector<double> lr_candidates = {0.05, 0.01};
    int cv_epochs = 40;     ///< epochs per fold fit during selection
    int final_epochs = 120; ///< epochs for the full training-portion fit
    int batch_size = 8;
    std::uint64_t seed = 1;
};

struct AblationRow {
    ModalityMode modality = ModalityMode::TriModal;
    bool with_dp = true;
    double chosen_lr = 0.0;
    double cv_auc = 0.0;  ///< mean held-fold AUC at the chosen learning rate
    double test_auc = 0.0;
    double test_accuracy = 0.0;
    double test_sensitivity = 0.0;
    double test_specificity = 0.0;
    stats::RocCurve roc;  ///< held-out test ROC
};

struct HarnessReport {
    std::vector<AblationRow> rows;
    int n_train = 0;
    int n_test = 0;
    /// Externally reported AUC for the same horizon, carried for context in
    /// emitted reports; never an assertion target.
    std::optional<double> context_reference_auc;
};

namespace detail {

inline Sample strip_dp(const Sample& s, const std::vector<int>& dp_idx) {
    Sample out = s;
    out.v_v.clear();
    for (int i = 0; i < static_cast<int>(s.v_v.size()); ++i)
        if (std::find(dp_idx.begin(), dp_idx.end(), i) == dp_idx.end())
            out.v_v.push_back(s.v_v[i]);
    return out;
}

inline std::vector<Sample> gather(const std::vector<Sample>& all,
                                  const std::vector<std::size_t>& idx) {
    std::vector<Sample> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(all[i]);
    return out;
}

inline std::vector<int> labels_of(const std::vector<Sample>& samples) {
    std::vector<int> y;
    y.reserve(samples.size());
    for (const auto& s : samples) y.push_back(s.label);
    return y;
}

}  // namespace detail

/// One model evaluation: stratified train/test split, k-fold cross-validated
/// learning-rate selection on the training portion, final fit, held-out
/// metrics. Deterministic given (options.seed, config, data).
inline AblationRow run_ablation(const std::vector<Sample>& samples, FusionConfig cfg,
                                ModalityMode modality, bool with_dp,
                                const std::vector<std::size_t>& train_idx,
                                const std::vector<std::size_t>& test_idx,
                                const HarnessOptions& opt, std::uint64_t combo_seed) {
    cfg.modality = modality;
    cfg.seed = combo_seed;
    cfg.validate();

    auto train_set = detail::gather(samples, train_idx);
    auto test_set = detail::gather(samples, test_idx);
    const auto train_labels = detail::labels_of(train_set);

    if (opt.lr_candidates.empty()) throw std::invalid_argument("no learning-rate candidates");

    AblationRow row;
    row.modality = modality;
    row.with_dp = with_dp;

    // Model selection: mean held-fold AUC per candidate learning rate.
    const auto folds = stats::stratified_kfold(train_labels, opt.k_folds, opt.seed + 17);
    double best_auc = -1.0;
    for (std::size_t li = 0; li < opt.lr_candidates.size(); ++li) {
        double auc_sum = 0.0;
        for (int k = 0; k < opt.k_folds; ++k) {
            std::vector<Sample> fit_part, held_part;
            for (std::size_t i = 0; i < train_set.size(); ++i)
                (folds[i] == k ? held_part : fit_part).push_back(train_set[i]);
            const auto held_labels = detail::labels_of(held_part);
            const int held_pos =
                static_cast<int>(std::count(held_labels.begin(), held_labels.end(), 1));
            if (held_pos == 0 || held_pos == static_cast<int>(held_labels.size()))
                throw InsufficientDataError("cross-validation fold lacks both classes");

            TrainOptions topt;
            topt.epochs = opt.cv_epochs;
            topt.lr = opt.lr_candidates[li];
            topt.batch_size = opt.batch_size;
            FusionConfig fold_cfg = cfg;
            fold_cfg.seed = combo_seed + 1000 + static_cast<std::uint64_t>(k);
            auto fit = train(fit_part, fold_cfg, topt);
            auc_sum += stats::roc_auc(predict_scores(fold_cfg, fit.params, held_part),
                                      held_labels);
        }
        const double mean_auc = auc_sum / opt.k_folds;
        if (mean_auc > best_auc) {
            best_auc = mean_auc;
            row.chosen_lr = opt.lr_candidates[li];
        }
    }
    row.cv_auc = best_auc;

    // Final fit on the whole training portion, evaluated on the held-out set.
    TrainOptions topt;
    topt.epochs = opt.final_epochs;
    topt.lr = row.chosen_lr;
    topt.batch_size = opt.batch_size;
    auto final_fit = train(train_set, cfg, topt);
    const auto scores = predict_scores(cfg, final_fit.params, test_set);
    const auto test_labels = detail::labels_of(test_set);
    row.test_auc = stats::roc_auc(scores, test_labels);
    row.roc = stats::roc_curve(scores, test_labels);
    const auto conf = stats::confusion_at(scores, test_labels, 0.5);
    row.test_accuracy = conf.accuracy;
    row.test_sensitivity = conf.sensitivity;
    row.test_specificity = conf.specificity;
    return row;
}

/// The six-row ablation grid: {tri-modal, image-only, vectors-only} crossed
/// with {with, without} the dynamic recovery-rate columns. All rows share
/// one stratified train/test split so their test metrics are comparable.
/// Image-only rows ignore the vectors, so the DP switch cannot change them;
/// both rows are still emitted to keep the grid rectangular.
inline HarnessReport evaluate_harness(const HarnessDataset& data, const FusionConfig& base,
                                      const HarnessOptions& opt = {}) {
    if (data.samples.empty()) throw EmptyInputError("evaluate_harness: no samples");
    const auto labels = detail::labels_of(data.samples);
    auto split = stats::stratified_split(labels, opt.test_fraction, opt.seed);

    // The without-DP variants operate on a parallel sample set with the
    // dynamic entries cut out of every values vector.
    std::vector<Sample> stripped;
    stripped.reserve(data.samples.size());
    for (const auto& s : data.samples) stripped.push_back(detail::strip_dp(s, data.dp_value_indices));
    const int stripped_dim =
        static_cast<int>(data.samples.front().v_v.size() - data.dp_value_indices.size());

    HarnessReport rep;
    rep.n_train = static_cast<int>(split.train.size());
    rep.n_test = static_cast<int>(split.test.size());

    const ModalityMode modes[] = {ModalityMode::TriModal, ModalityMode::ImageOnly,
                                  ModalityMode::VectorsOnly};
    std::uint64_t combo = 0;
    for (auto mode : modes) {
        for (bool with_dp : {true, false}) {
            FusionConfig cfg = base;
            const auto& samples = with_dp ? data.samples : stripped;
            if (!with_dp) cfg.values_dim = stripped_dim;
            rep.rows.push_back(run_ablation(samples, cfg, mode, with_dp, split.train,
                                            split.test, opt, opt.seed * 100 + combo));
            ++combo;
        }
    }
    return rep;
}

}  // namespace mhquant::fusion
