// Generates the deterministic synthetic study fixture used by the CLI
// integration tests and the acceptance suite: a manifest plus paired
// horizontal/vertical segmentation masks for every visit of every eye.
//
// The cohort is built from three recovery archetypes so each horizon sees
// both outcome classes and the covariates carry real signal: fast healers
// (small holes, quick resolution, early large acuity gains), gradual
// healers (mixed), and poor responders (large persistent lesions, gains
// that rarely reach the Superior threshold). Every lesion dimension gets
// its own independent jitter and a fifth of the eyes mismatch anatomy and
// acuity, so the covariates correlate without being collinear and no
// single column separates the outcome.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mhquant/core/class_label.hpp"
#include "mhquant/core/rng.hpp"
#include "mhquant/core/scan.hpp"
#include "mhquant/core/scan_io.hpp"
#include "mhquant/core/stage.hpp"

namespace {

using mhquant::core::ClassLabel;
using mhquant::core::SplitMix64;
using mhquant::core::Stage;

constexpr int kStageDays[] = {0, 14, 90, 180, 365};

enum class Archetype { Fast, Gradual, Poor };

struct EyePlan {
    std::string id;
    Archetype anatomy = Archetype::Gradual;
    double hole_scale = 1.0;  // lesion size multiplier at baseline
    double top_unit = 7.0;    // aperture half-width at unit scale, px
    double waist_unit = 4.0;  // narrowest half-width, somewhere mid-depth
    double waist_pos = 0.45;  // waist depth as a fraction of hole height
    double base_unit = 16.0;  // base half-width at unit scale, px
    double elm_extra = 6.0;   // band defect overhang beyond the base, px
    double ez_extra = 11.0;
    double tau = 100.0;       // acuity recovery time constant, days
    double max_gain = 20.0;   // asymptotic acuity gain, letters
    int bcva_pre = 40;
    double duration_days = 180;
    double age = 68;
    int cx_jitter = 0;
    int hole_top = 18;  // top row of the hole at baseline
    int cyst_count = 2;
    int cyst_radius = 3;
    bool has_cysts = true;
    bool has_erm = false;
    bool has_space = false;
    bool has_vmt = false;
    // Fraction of each lesion remaining at each stage (index order PRE, W2,
    // M3, M6, M12); 0 means resolved. The families heal on their own
    // schedules: a closed hole with a persistent band defect and the
    // reverse both occur, so no two resolution patterns coincide exactly.
    double rem_hole[5] = {1, 1, 1, 1, 1};
    double rem_elm[5] = {1, 1, 1, 1, 1};
    double rem_ez[5] = {1, 1, 1, 1, 1};
    double rem_cyst[5] = {1, 1, 1, 1, 1};
};

struct MaskSpec {
    int width = 96;
    int height = 64;
};

class MaskPainter {
public:
    explicit MaskPainter(const MaskSpec& spec) : w_(spec.width), h_(spec.height) {
        labels_.assign(static_cast<std::size_t>(w_) * h_,
                       static_cast<std::uint8_t>(ClassLabel::Background));
    }

    void put(int x, int y, ClassLabel c) {
        if (x < 0 || x >= w_ || y < 0 || y >= h_) return;
        labels_[static_cast<std::size_t>(y) * w_ + x] = static_cast<std::uint8_t>(c);
    }

    void hband(int y0, int y1, ClassLabel c) {
        for (int y = y0; y <= y1; ++y)
            for (int x = 0; x < w_; ++x) put(x, y, c);
    }

    void clear_span(int y0, int y1, int cx, int half) {
        for (int y = y0; y <= y1; ++y)
            for (int x = cx - half; x <= cx + half; ++x) put(x, y, ClassLabel::Background);
    }

    void blob(int cx, int cy, int rx, int ry, ClassLabel c) {
        for (int y = cy - ry; y <= cy + ry; ++y)
            for (int x = cx - rx; x <= cx + rx; ++x) {
                const double dx = (x - cx) / double(rx), dy = (y - cy) / double(ry);
                if (dx * dx + dy * dy <= 1.0) put(x, y, c);
            }
    }

    mhquant::core::LabeledScan finish(mhquant::core::Orientation o) const {
        return {w_, h_, labels_, o, {}};
    }

private:
    int w_, h_;
    std::vector<std::uint8_t> labels_;
};

/// One segmentation mask. `squeeze` differentiates the vertical scan from
/// the horizontal one of the same visit.
mhquant::core::LabeledScan paint_mask(const MaskSpec& spec, const EyePlan& eye, int stage_idx,
                                      double squeeze, mhquant::core::Orientation orient) {
    MaskPainter m(spec);
    const int cx = spec.width / 2 + eye.cx_jitter;
    const double hole_rem = eye.rem_hole[stage_idx];

    // Outer-retina bands near the bottom; the hole opens onto them.
    const int elm_y0 = 41, elm_y1 = 42;
    const int ez_y0 = 43, ez_y1 = 44;
    const int rpe_y0 = 45, rpe_y1 = 47;
    m.hband(elm_y0, elm_y1, ClassLabel::ELM);
    m.hband(ez_y0, ez_y1, ClassLabel::EZ);
    m.hband(rpe_y0, rpe_y1, ClassLabel::RPE);

    const double s = eye.hole_scale * squeeze;

    // The full-thickness hole: an hourglass profile whose narrowest row sits
    // mid-depth, drawn only while any lesion remains.
    if (hole_rem > 0.0) {
        const int top_half =
            std::max(2, static_cast<int>(std::lround(eye.top_unit * s * hole_rem)));
        const int waist_half =
            std::max(1, static_cast<int>(std::lround(eye.waist_unit * s * hole_rem)));
        const int bot_half =
            std::max(3, static_cast<int>(std::lround(eye.base_unit * s * hole_rem)) + 1);
        const int y0 = eye.hole_top + static_cast<int>(std::lround(8 * (1 - hole_rem)));
        const int y1 = 40;
        for (int y = y0; y <= y1; ++y) {
            const double t = (y - y0) / double(std::max(1, y1 - y0));
            double half;
            if (t < eye.waist_pos)
                half = top_half + (waist_half - top_half) * (t / eye.waist_pos);
            else
                half = waist_half +
                       (bot_half - waist_half) * ((t - eye.waist_pos) / (1 - eye.waist_pos));
            const int ihalf = static_cast<int>(std::lround(half));
            for (int x = cx - ihalf; x <= cx + ihalf; ++x) m.put(x, y, ClassLabel::MacularHole);
        }
    }

    // Band defects heal on their own schedules; each has an independently
    // drawn overhang beyond the hole base.
    const double base = eye.base_unit * s;
    if (eye.rem_elm[stage_idx] > 0.0) {
        const int elm_half = std::max(
            1, static_cast<int>(std::lround((base + eye.elm_extra) * eye.rem_elm[stage_idx])));
        m.clear_span(elm_y0, elm_y1, cx, elm_half);
    }
    if (eye.rem_ez[stage_idx] > 0.0) {
        const int ez_half = std::max(
            2, static_cast<int>(std::lround((base + eye.ez_extra) * eye.rem_ez[stage_idx])));
        m.clear_span(ez_y0, ez_y1, cx, ez_half);
    }

    // Pseudocysts flank the hole and drain on their own schedule.
    const double cyst_rem = eye.rem_cyst[stage_idx];
    if (eye.has_cysts && cyst_rem > 0.15) {
        const int off = static_cast<int>(std::lround(eye.base_unit * s)) + 8;
        const int r = std::max(2, static_cast<int>(std::lround(eye.cyst_radius * cyst_rem)));
        m.blob(cx - off, 26, r, r, ClassLabel::Pseudocysts);
        if (eye.cyst_count > 1) m.blob(cx + off, 30, r + 1, r, ClassLabel::Pseudocysts);
        if (eye.cyst_count > 2 && cyst_rem > 0.5)
            m.blob(cx + off + 9, 24, r, std::max(2, r - 1), ClassLabel::Pseudocysts);
    }

    // Qualitative companions: a membrane line on top, a traction space, a
    // small adhesion peak. Stable across the series.
    if (eye.has_erm) m.hband(2, 3, ClassLabel::ERM);
    if (eye.has_space) m.blob(cx - 18, 8, 7, 3, ClassLabel::Space);
    if (eye.has_vmt) m.blob(cx + 14, 6, 5, 4, ClassLabel::VMT);

    return m.finish(orient);
}

double base_remaining(Archetype k, int stage_idx, double slack) {
    // slack in [0,1) perturbs the trajectory per eye without changing its class.
    switch (k) {
        case Archetype::Fast: {
            const double r[5] = {1.0, 0.30, 0.0, 0.0, 0.0};
            return stage_idx == 1 ? r[1] + 0.15 * slack : r[stage_idx];
        }
        case Archetype::Gradual: {
            const double r[5] = {1.0, 0.80, 0.50, 0.25, 0.0};
            // A third of gradual healers keep a remnant: censored rates.
            if (slack > 0.66 && stage_idx == 4) return 0.12;
            return r[stage_idx] + (stage_idx > 0 && stage_idx < 4 ? 0.1 * slack : 0.0);
        }
        case Archetype::Poor: {
            const double r[5] = {1.0, 0.95, 0.88, 0.82, 0.78};
            return r[stage_idx] + 0.04 * slack;
        }
    }
    return 1.0;
}

void draw_acuity(EyePlan& e, Archetype kind, SplitMix64& rng) {
    switch (kind) {
        case Archetype::Fast:
            e.tau = 5 + 5 * rng.uniform();
            e.max_gain = 30 + 15 * rng.uniform();
            break;
        case Archetype::Gradual:
            e.tau = 50 + 140 * rng.uniform();
            e.max_gain = 14 + 24 * rng.uniform();
            break;
        case Archetype::Poor:
            e.tau = 100 + 140 * rng.uniform();
            e.max_gain = 2 + 16 * rng.uniform();
            break;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic longitudinal OCT study fixture"};
    std::string out_dir;
    int n_eyes = 60;
    std::uint64_t seed = 2024;
    MaskSpec spec;
    app.add_option("out_dir", out_dir, "directory to create")->required();
    app.add_option("--eyes", n_eyes, "number of eyes")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--width", spec.width, "mask width in pixels");
    app.add_option("--height", spec.height, "mask height in pixels");
    CLI11_PARSE(app, argc, argv);

    try {
        namespace fs = std::filesystem;
        fs::create_directories(fs::path(out_dir) / "scans");

        SplitMix64 rng(seed);
        std::vector<EyePlan> eyes;
        for (int i = 0; i < n_eyes; ++i) {
            EyePlan e;
            char buf[16];
            std::snprintf(buf, sizeof buf, "EYE%03d", i + 1);
            e.id = buf;
            const double pick = rng.uniform();
            if (pick < 0.32) {
                e.anatomy = Archetype::Fast;
                e.hole_scale = 0.35 + 0.20 * rng.uniform();
            } else if (pick < 0.62) {
                e.anatomy = Archetype::Poor;
                e.hole_scale = 0.78 + 0.22 * rng.uniform();
            } else {
                e.anatomy = Archetype::Gradual;
                e.hole_scale = 0.50 + 0.35 * rng.uniform();
            }
            // Symptom duration trends with lesion size but keeps enough
            // independent spread to stay out of collinearity trouble.
            e.duration_days = 30 + 260 * (e.hole_scale - 0.35) / 0.65 + 180 * rng.uniform();

            // Acuity usually follows the anatomy, but a fifth of the eyes
            // recover vision out of step with their scans. That keeps any
            // single covariate from separating the outcome on its own.
            Archetype acuity = e.anatomy;
            if (rng.uniform() < 0.20) {
                const Archetype all[] = {Archetype::Fast, Archetype::Gradual, Archetype::Poor};
                acuity = all[rng.below(3)];
            }
            draw_acuity(e, acuity, rng);

            // Independent jitter for every measured dimension.
            e.top_unit = 6.0 + 4.0 * rng.uniform();
            e.waist_unit = 3.0 + 2.5 * rng.uniform();
            e.waist_pos = 0.25 + 0.45 * rng.uniform();
            e.base_unit = 13.0 + 7.0 * rng.uniform();
            e.elm_extra = 2.0 + 8.0 * rng.uniform();
            e.ez_extra = e.elm_extra + 2.0 + 8.0 * rng.uniform();
            e.bcva_pre = 30 + static_cast<int>(rng.below(26));
            e.age = 55 + 27 * rng.uniform();
            e.cx_jitter = static_cast<int>(rng.below(13)) - 6;
            e.hole_top = 14 + static_cast<int>(rng.below(8));
            e.cyst_count = 1 + static_cast<int>(rng.below(3));
            e.cyst_radius = 2 + static_cast<int>(rng.below(3));
            e.has_cysts = i % 17 != 5;  // a couple of eyes, always under 10%
            e.has_erm = rng.uniform() < 0.40;
            e.has_space = rng.uniform() < 0.25;
            e.has_vmt = rng.uniform() < 0.15;

            // Each lesion family heals on its own schedule. Band defects can
            // outlive a closed hole (shift +1 stage) or run ahead of it
            // (shift -1); pseudocysts likewise. The wobble never resurrects
            // a resolved lesion.
            auto fill = [&](double* rem, int shift) {
                const double slack = rng.uniform();
                for (int k = 0; k < 5; ++k) {
                    const int kk = std::clamp(k - shift, 0, 4);
                    double r = base_remaining(e.anatomy, kk, slack);
                    if (k > 0 && r > 0.0)
                        r *= std::clamp(1.0 + 0.10 * rng.normal(), 0.75, 1.25);
                    rem[k] = std::clamp(r, 0.0, 1.0);
                }
                rem[0] = std::clamp(base_remaining(e.anatomy, 0, slack), 0.0, 1.0);
            };
            auto draw_shift = [&] {
                const double u = rng.uniform();
                return u < 0.25 ? 1 : (u < 0.45 ? -1 : 0);
            };
            fill(e.rem_hole, 0);
            fill(e.rem_elm, draw_shift());
            fill(e.rem_ez, draw_shift());
            fill(e.rem_cyst, draw_shift());
            eyes.push_back(e);
        }

        std::ofstream man(fs::path(out_dir) / "manifest.csv", std::ios::binary);
        if (!man) {
            std::fprintf(stderr, "cannot write manifest in %s\n", out_dir.c_str());
            return 2;
        }
        man << "eye_id,stage,bcva_etdrs,scan_h,scan_v,duration_days,age\n";

        for (std::size_t i = 0; i < eyes.size(); ++i) {
            const auto& e = eyes[i];
            for (int k = 0; k < 5; ++k) {
                const Stage stage = mhquant::core::kAllStages[k];
                const char* sname = mhquant::core::to_string(stage);

                const double gain = e.max_gain * (1.0 - std::exp(-kStageDays[k] / e.tau));
                const double noise = 3.0 * rng.normal();
                int bcva = e.bcva_pre;
                if (k > 0) bcva = static_cast<int>(std::lround(e.bcva_pre + gain + noise));
                bcva = std::clamp(bcva, 0, 100);

                const std::string h_rel = "scans/" + e.id + "_" + sname + "_h.pgm";
                const std::string v_rel = "scans/" + e.id + "_" + sname + "_v.pgm";
                mhquant::core::write_scan(
                    paint_mask(spec, e, k, 1.0, mhquant::core::Orientation::Horizontal),
                    fs::path(out_dir) / h_rel);
                mhquant::core::write_scan(
                    paint_mask(spec, e, k, 0.9, mhquant::core::Orientation::Vertical),
                    fs::path(out_dir) / v_rel);

                // Controlled missingness: one eye lacks a mid-series acuity,
                // two others lack one clinical value each. All stay below the
                // imputation threshold.
                std::string bcva_cell = std::to_string(bcva);
                if (i == 7 && stage == Stage::M3) bcva_cell.clear();
                std::string dur_cell =
                    std::to_string(static_cast<int>(std::lround(e.duration_days)));
                if (i == 13) dur_cell.clear();
                std::string age_cell = std::to_string(static_cast<int>(std::lround(e.age)));
                if (i == 21) age_cell.clear();

                man << e.id << ',' << sname << ',' << bcva_cell << ',' << h_rel << ','
                    << v_rel << ',' << dur_cell << ',' << age_cell << '\n';
            }
        }
        man.close();
        std::fprintf(stderr, "fixture: %d eyes, %d visits in %s\n", n_eyes, n_eyes * 5,
                     out_dir.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
