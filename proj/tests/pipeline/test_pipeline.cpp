#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "mhquant/fusion/checkpoint.hpp"
#include "mhquant/pipeline/commands.hpp"

using namespace mhquant;
using namespace mhquant::pipeline;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mhq_pipe_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

RunConfig base_config(const fs::path& dir) {
    RunConfig cfg;
    cfg.manifest = (dir / "manifest.csv").string();
    cfg.out_dir = (dir / "out").string();
    cfg.finalize();
    return cfg;
}

/// A scan with full-width ELM/EZ/RPE bands and, when half > 0, a rectangular
/// hole plus band defects above it. Heavier geometry is the morphometry
/// suite's business; the pipeline tests only need stages that shrink.
core::LabeledScan stage_scan(int half) {
    using core::ClassLabel;
    auto s = core::LabeledScan::filled(64, 48, ClassLabel::Background,
                                       core::Orientation::Horizontal, {10.0, 4.0});
    for (int x = 0; x < 64; ++x) {
        s.set(x, 40, ClassLabel::ELM);
        s.set(x, 41, ClassLabel::EZ);
        s.set(x, 42, ClassLabel::RPE);
        s.set(x, 43, ClassLabel::RPE);
    }
    if (half > 0) {
        for (int y = 12; y <= 39; ++y)
            for (int x = 32 - half; x < 32 + half; ++x)
                s.set(x, y, ClassLabel::MacularHole);
        // Defects in both outer bands, slightly wider than the hole.
        for (int x = 32 - half - 2; x < 32 + half + 2; ++x) {
            s.set(x, 40, ClassLabel::Background);
            s.set(x, 41, ClassLabel::Background);
        }
    }
    return s;
}

/// Writes h and v scans for one visit and returns the two manifest cells.
std::pair<std::string, std::string> write_visit_scans(const fs::path& dir,
                                                      const std::string& tag, int half) {
    fs::create_directories(dir / "scans");
    const std::string h = "scans/" + tag + "_h.pgm";
    const std::string v = "scans/" + tag + "_v.pgm";
    core::write_scan(stage_scan(half), dir / h);
    core::write_scan(stage_scan(half), dir / v);
    return {h, v};
}

/// Manifest with two eyes over all five stages. E1's hole closes by M6 and
/// gains 30 letters; E2's never closes and gains 5.
void write_small_study(const fs::path& dir) {
    const int e1_half[5] = {10, 6, 3, 0, 0};
    const int e2_half[5] = {12, 11, 10, 10, 9};
    const int e1_bcva[5] = {40, 48, 60, 66, 70};
    const int e2_bcva[5] = {50, 51, 53, 54, 55};

    std::ostringstream m;
    m << "eye_id,stage,bcva_etdrs,scan_h,scan_v,duration_days,age\n";
    for (int k = 0; k < 5; ++k) {
        const auto stage = core::kAllStages[k];
        const auto [h1, v1] =
            write_visit_scans(dir, "E1_" + std::string(core::to_string(stage)), e1_half[k]);
        m << "E1," << core::to_string(stage) << ',' << e1_bcva[k] << ',' << h1 << ',' << v1
          << ",120,63\n";
        const auto [h2, v2] =
            write_visit_scans(dir, "E2_" + std::string(core::to_string(stage)), e2_half[k]);
        m << "E2," << core::to_string(stage) << ',' << e2_bcva[k] << ',' << h2 << ',' << v2
          << ",300,71\n";
    }
    write_file(dir / "manifest.csv", m.str());
}

morphometry::FeatureVector make_row(const std::string& eye, core::Stage stage, double hole_area,
                                    double elm_defect) {
    morphometry::FeatureVector f;
    f.eye_id = eye;
    f.stage = stage;
    f.hole_present = hole_area > 0.0;
    if (f.hole_present) {
        f.mld_um = 50.0;
        f.bd_um = 100.0;
        f.e_um = 40.0;
        f.height_um = 80.0;
        f.composites.mhi = 0.8;
        f.composites.thi = 1.6;
        f.composites.dhi = 0.5;
    }
    f.hole_area_um2 = hole_area;
    f.pseudocyst_area_um2 = 0.0;
    f.elm_band_present = true;
    f.ez_band_present = true;
    f.elm_defect_um = elm_defect;
    f.ez_defect_um = elm_defect;
    return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// run configuration

TEST_CASE("run config parses key=value files with comments") {
    std::istringstream in(
        "# comment line\n"
        "\n"
        "out_dir = results   # trailing comment\n"
        "spacing_x_um = 11.5\n"
        "lambda = 0.5\n"
        "profile = extended\n"
        "dp_wiring = truncated\n"
        "seed = 99\n"
        "fusion_image_size = 32\n"
        "fusion_lr_candidates = 0.1, 0.02\n");
    RunConfig cfg = parse_run_config(in, "run.cfg");
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.spacing.um_per_px_x == 11.5);
    CHECK(cfg.lambda == 0.5);
    CHECK(cfg.lambda_set);
    CHECK(cfg.profile == "extended");
    CHECK(cfg.dp_wiring == DpWiring::TruncatedAtHorizon);
    CHECK(cfg.seed == 99);
    CHECK(cfg.fusion.image_size == 32);
    CHECK(cfg.fusion_lr_candidates == std::vector<double>{0.1, 0.02});

    // Explicit lambda survives the extended profile's default.
    cfg.finalize();
    CHECK(cfg.lambda == 0.5);
}

TEST_CASE("run config errors carry origin and line number") {
    SECTION("missing equals sign") {
        std::istringstream in("out_dir = x\nnot a pair\n");
        CHECK_THROWS_WITH(parse_run_config(in, "bad.cfg"),
                          Catch::Matchers::ContainsSubstring("bad.cfg:2"));
    }
    SECTION("unknown key") {
        std::istringstream in("no_such_key = 1\n");
        CHECK_THROWS_WITH(parse_run_config(in, "bad.cfg"),
                          Catch::Matchers::ContainsSubstring("unknown config key"));
    }
    SECTION("non-numeric value") {
        std::istringstream in("vif_limit = soon\n");
        CHECK_THROWS_AS(parse_run_config(in, "bad.cfg"), ConfigError);
    }
}

TEST_CASE("profiles pin or default the shape weight") {
    RunConfig cfg;
    cfg.lambda = 2.0;
    cfg.lambda_set = true;
    cfg.superior_threshold = 15;
    cfg.finalize();  // paper-replication
    CHECK(cfg.lambda == 0.0);
    CHECK(cfg.superior_threshold == 20);

    RunConfig ext;
    ext.profile = "extended";
    ext.finalize();
    CHECK(ext.lambda == 1.0);  // default when unset

    RunConfig bad;
    bad.profile = "fast";
    CHECK_THROWS_AS(bad.finalize(), ConfigError);
}

TEST_CASE("finalize validates numeric ranges") {
    auto expect_bad = [](auto&& tweak) {
        RunConfig cfg;
        tweak(cfg);
        CHECK_THROWS_AS(cfg.finalize(), ConfigError);
    };
    expect_bad([](RunConfig& c) { c.classification_threshold = 1.0; });
    expect_bad([](RunConfig& c) { c.vif_limit = 1.0; });
    expect_bad([](RunConfig& c) { c.screen_alpha = 0.0; });
    expect_bad([](RunConfig& c) { c.missing_threshold = 0.0; });
    expect_bad([](RunConfig& c) { c.epsilon_elm = -1.0; });
    expect_bad([](RunConfig& c) { c.fusion_lr_candidates.clear(); });
}

TEST_CASE("horizon and wiring names parse strictly") {
    CHECK(parse_horizon("w2") == core::Stage::W2);
    CHECK(parse_horizon("m12") == core::Stage::M12);
    CHECK_THROWS_AS(parse_horizon("pre"), ConfigError);
    CHECK_THROWS_AS(parse_horizon("M12"), ConfigError);
    CHECK(parse_dp_wiring("full") == DpWiring::Full);
    CHECK_THROWS_AS(parse_dp_wiring("Full"), ConfigError);
    CHECK(horizon_name(core::Stage::M6) == "m6");
}

TEST_CASE("scan root defaults to the manifest directory") {
    RunConfig cfg;
    cfg.manifest = "/data/study/manifest.csv";
    CHECK(cfg.resolved_scan_root() == fs::path("/data/study"));
    cfg.scan_root = "/elsewhere";
    CHECK(cfg.resolved_scan_root() == fs::path("/elsewhere"));
}

// ---------------------------------------------------------------------------
// feature table serialization

TEST_CASE("feature csv round-trips measurements and dynamics") {
    FeatureTable table;
    table.has_dynamics = true;

    auto pre = make_row("E1", core::Stage::PRE, 4000.0, 300.0);
    pre.composites.area_ratio = 2.5;
    pre.hole_circularity = 0.61;
    pre.erm_present = true;
    morphometry::RecoveryRateValue rr;
    rr.rate = 44.44;
    rr.weighted = 44.44;
    rr.resolution_day = 90;
    pre.dyn.hole = rr;
    morphometry::RecoveryRateValue censored;
    censored.censored = true;
    pre.dyn.elm = censored;
    table.rows.push_back(pre);

    auto w2 = make_row("E1", core::Stage::W2, 0.0, 120.0);  // hole gone: no scalars
    table.rows.push_back(w2);

    std::ostringstream out;
    write_feature_csv(out, table);
    std::istringstream in(out.str());
    FeatureTable back = read_feature_csv(in, "mem");

    REQUIRE(back.rows.size() == 2);
    CHECK(back.has_dynamics);
    const auto& b0 = back.rows[0];
    CHECK(b0.eye_id == "E1");
    CHECK(b0.stage == core::Stage::PRE);
    CHECK(b0.hole_present);
    CHECK(b0.mld_um == 50.0);
    CHECK(b0.hole_area_um2 == 4000.0);
    CHECK(b0.composites.area_ratio == 2.5);
    CHECK(b0.hole_circularity == 0.61);
    CHECK(b0.erm_present);
    REQUIRE(b0.dyn.hole);
    CHECK(b0.dyn.hole->rate == 44.44);
    CHECK_FALSE(b0.dyn.hole->censored);
    // The table stores the rate triple only; the resolution day is an
    // intermediate that does not survive serialization.
    CHECK_FALSE(b0.dyn.hole->resolution_day);
    REQUIRE(b0.dyn.elm);
    CHECK(b0.dyn.elm->censored);
    CHECK(b0.dyn.elm->rate == 0.0);
    CHECK_FALSE(b0.dyn.cyst);  // absent stays absent

    const auto& b1 = back.rows[1];
    CHECK_FALSE(b1.hole_present);
    CHECK_FALSE(b1.composites.mhi);
    CHECK_FALSE(b1.dyn.any());
}

TEST_CASE("feature csv without dynamics keeps the short header") {
    FeatureTable table;
    table.rows.push_back(make_row("E1", core::Stage::PRE, 100.0, 10.0));
    std::ostringstream out;
    write_feature_csv(out, table);
    const std::string text = out.str();
    CHECK(text.find("rr_hole") == std::string::npos);

    std::istringstream in(text);
    CHECK_FALSE(read_feature_csv(in, "mem").has_dynamics);
}

TEST_CASE("feature csv rejects foreign headers") {
    std::istringstream in("eye,visit\nE1,PRE\n");
    CHECK_THROWS_AS(read_feature_csv(in, "mem"), MalformedRowError);
}

TEST_CASE("group_by_eye rejects duplicate visits") {
    FeatureTable table;
    table.rows.push_back(make_row("E1", core::Stage::PRE, 100.0, 10.0));
    table.rows.push_back(make_row("E1", core::Stage::PRE, 200.0, 20.0));
    CHECK_THROWS_AS(group_by_eye(table), DuplicateStageError);
}

// ---------------------------------------------------------------------------
// design assembly

namespace {

/// Three measured eyes plus one manifest-only eye:
///   A: complete series, hole resolves at M6, ELM at M12, +30 letters
///   B: no M3 feature row, lesions persist, +5 letters
///   C: no hole at PRE, M3 BCVA missing
///   D: appears in the manifest with no feature rows at all
struct DesignFixture {
    FeatureTable table;
    core::Manifest manifest;

    DesignFixture() {
        auto add_eye = [&](const std::string& id, std::optional<int> pre_bcva,
                           std::map<core::Stage, std::optional<int>> post) {
            core::LongitudinalSeries s;
            s.eye_id = id;
            core::StudyRecord pre;
            pre.eye_id = id;
            pre.stage = core::Stage::PRE;
            pre.bcva_etdrs = pre_bcva;
            pre.clinical["duration_days"] = 100.0;
            pre.clinical["age"] = 65.0;
            s.records[core::Stage::PRE] = pre;
            for (auto& [stage, bcva] : post) {
                core::StudyRecord r;
                r.eye_id = id;
                r.stage = stage;
                r.bcva_etdrs = bcva;
                s.records[stage] = r;
            }
            manifest.series.push_back(s);
        };
        manifest.clinical_columns = {"duration_days", "age"};
        add_eye("A", 40, {{core::Stage::M3, 70}, {core::Stage::M12, 72}});
        add_eye("B", 50, {{core::Stage::M3, 55}});
        add_eye("C", 45, {{core::Stage::M3, std::nullopt}});
        add_eye("D", 40, {{core::Stage::M3, 60}});

        const core::Stage all[] = {core::Stage::PRE, core::Stage::W2, core::Stage::M3,
                                   core::Stage::M6, core::Stage::M12};
        const double a_hole[] = {4000, 2000, 1000, 0, 0};
        const double a_elm[] = {300, 200, 100, 50, 0};
        for (int k = 0; k < 5; ++k)
            table.rows.push_back(make_row("A", all[k], a_hole[k], a_elm[k]));
        const double b_hole[] = {5000, 4500, 4000, 3800};
        const double b_elm[] = {400, 380, 360, 350};
        const core::Stage b_stages[] = {core::Stage::PRE, core::Stage::W2, core::Stage::M6,
                                        core::Stage::M12};
        for (int k = 0; k < 4; ++k)
            table.rows.push_back(make_row("B", b_stages[k], b_hole[k], b_elm[k]));
        for (int k = 0; k < 5; ++k)
            table.rows.push_back(make_row("C", all[k], 0.0, 80.0 - 20.0 * k));
    }
};

}  // namespace

TEST_CASE("assemble_design lays out clinical, baseline, horizon and dynamic columns") {
    DesignFixture fx;
    RunConfig cfg;
    cfg.finalize();

    DesignResult d = assemble_design(fx.table, fx.manifest, core::Stage::M3, cfg);
    const auto& m = d.matrix;

    const std::vector<std::string> expected = {
        "duration_days", "age",
        "mld_um", "bd_um", "e_um", "height_um", "hole_area_um2", "pseudocyst_area_um2",
        "elm_defect_um", "ez_defect_um", "mhi", "thi", "dhi", "area_ratio",
        "erm_present", "traction_space_present",
        "m3_elm_defect_um", "m3_ez_defect_um",
        "rr_hole_w", "rr_hole_censored", "rr_cyst_w", "rr_cyst_censored",
        "rr_elm_w", "rr_elm_censored", "rr_ez_w", "rr_ez_censored",
    };
    CHECK(m.columns == expected);
    CHECK(d.dp_columns == stats::dynamic_parameter_columns());

    REQUIRE(m.n_rows() == 3);
    CHECK(m.row_ids == std::vector<std::string>{"A", "B", "C"});
    CHECK(d.skipped_eyes == std::vector<std::string>{"D"});

    // Outcomes: A gains 30 (Superior), B gains 5, C has no M3 reading.
    REQUIRE(m.outcomes.size() == 3);
    REQUIRE(m.outcomes[0]);
    CHECK(m.outcomes[0]->value == core::Outcome::Superior);
    CHECK(m.outcomes[0]->delta_letters == 30);
    REQUIRE(m.outcomes[1]);
    CHECK(m.outcomes[1]->value == core::Outcome::NotSuperior);
    CHECK_FALSE(m.outcomes[2]);
    CHECK(d.missing_outcomes == 1);

    const int c_dur = m.col("duration_days");
    const int c_mld = m.col("mld_um");
    const int c_area = m.col("hole_area_um2");
    const int c_elm3 = m.col("m3_elm_defect_um");
    CHECK(m.rows[0][c_dur] == 100.0);
    CHECK(m.rows[0][c_mld] == 50.0);
    CHECK(m.rows[0][c_elm3] == 100.0);

    // B has no M3 feature row: the horizon band columns stay empty.
    CHECK_FALSE(m.rows[1][c_elm3]);
    // C never had a hole: per-hole scalars empty, area stays 0.
    CHECK_FALSE(m.rows[2][c_mld]);
    CHECK(m.rows[2][c_area] == 0.0);
}

TEST_CASE("assemble_design without the dynamic block") {
    DesignFixture fx;
    RunConfig cfg;
    cfg.finalize();
    DesignResult d = assemble_design(fx.table, fx.manifest, core::Stage::M3, cfg, true);
    CHECK(d.dp_columns.empty());
    CHECK(d.matrix.n_cols() == 18);
    for (const auto& c : d.matrix.columns) CHECK(c.rfind("rr_", 0) != 0);
}

TEST_CASE("dp wiring decides whether late resolutions count") {
    DesignFixture fx;
    RunConfig cfg;
    cfg.finalize();

    // Eye A's ELM defect only reaches zero at M12.
    DesignResult full = assemble_design(fx.table, fx.manifest, core::Stage::M3, cfg);
    const int c_w = full.matrix.col("rr_elm_w");
    const int c_cens = full.matrix.col("rr_elm_censored");
    REQUIRE(full.matrix.rows[0][c_w]);
    CHECK(*full.matrix.rows[0][c_w] > 0.0);
    CHECK(*full.matrix.rows[0][c_cens] == 0.0);

    cfg.dp_wiring = DpWiring::TruncatedAtHorizon;
    DesignResult trunc = assemble_design(fx.table, fx.manifest, core::Stage::M3, cfg);
    CHECK(*trunc.matrix.rows[0][c_w] == 0.0);
    CHECK(*trunc.matrix.rows[0][c_cens] == 1.0);

    // The hole itself resolved at M6; at the M6 horizon both wirings agree.
    DesignResult at_m6 = assemble_design(fx.table, fx.manifest, core::Stage::M6, cfg);
    const int h_cens = at_m6.matrix.col("rr_hole_censored");
    CHECK(*at_m6.matrix.rows[0][h_cens] == 0.0);
}

TEST_CASE("assemble_design refuses a preoperative horizon and empty input") {
    DesignFixture fx;
    RunConfig cfg;
    cfg.finalize();
    CHECK_THROWS_AS(assemble_design(fx.table, fx.manifest, core::Stage::PRE, cfg), ConfigError);

    FeatureTable empty;
    core::Manifest none;
    CHECK_THROWS_AS(assemble_design(empty, none, core::Stage::M3, cfg), EmptyInputError);
}

// ---------------------------------------------------------------------------
// commands on a small on-disk study

TEST_CASE("extract measures every visit with scans") {
    TempDir tmp;
    write_small_study(tmp.path);
    RunConfig cfg = base_config(tmp.path);
    std::ostringstream log;

    CHECK(cmd_extract(cfg, log) == kOk);
    CHECK(log.str().find("(10 rows)") != std::string::npos);
    CHECK(log.str().find("warning") == std::string::npos);

    FeatureTable t = read_feature_csv(fs::path(cfg.out_dir) / "features.csv");
    REQUIRE(t.rows.size() == 10);
    CHECK_FALSE(t.has_dynamics);
    CHECK(t.rows[0].eye_id == "E1");
    CHECK(t.rows[0].stage == core::Stage::PRE);
    CHECK(t.rows[0].hole_present);
    CHECK(t.rows[0].hole_area_um2 > 0.0);
    // E1's M6 visit has no hole left.
    const auto by_eye = group_by_eye(t);
    CHECK_FALSE(by_eye.at("E1").at(core::Stage::M6).hole_present);
    CHECK(by_eye.at("E2").at(core::Stage::M12).hole_present);
}

TEST_CASE("extract degrades gracefully when scans are missing") {
    TempDir tmp;
    write_small_study(tmp.path);
    RunConfig cfg = base_config(tmp.path);

    SECTION("one of two scans unreadable: visit still measured, run partial") {
        fs::remove(tmp.path / "scans/E1_W2_v.pgm");
        std::ostringstream log;
        CHECK(cmd_extract(cfg, log) == kPartial);
        CHECK(log.str().find("scan skipped") != std::string::npos);
        FeatureTable t = read_feature_csv(fs::path(cfg.out_dir) / "features.csv");
        CHECK(t.rows.size() == 10);
    }
    SECTION("both scans unreadable: visit dropped with a warning") {
        fs::remove(tmp.path / "scans/E1_W2_v.pgm");
        fs::remove(tmp.path / "scans/E1_W2_h.pgm");
        std::ostringstream log;
        CHECK(cmd_extract(cfg, log) == kPartial);
        CHECK(log.str().find("visit skipped") != std::string::npos);
        FeatureTable t = read_feature_csv(fs::path(cfg.out_dir) / "features.csv");
        CHECK(t.rows.size() == 9);
        for (const auto& r : t.rows)
            CHECK_FALSE((r.eye_id == "E1" && r.stage == core::Stage::W2));
    }
}

TEST_CASE("extract fails fast on unusable manifests") {
    TempDir tmp;
    RunConfig cfg = base_config(tmp.path);
    std::ostringstream log;

    SECTION("header-only manifest") {
        write_file(tmp.path / "manifest.csv", "eye_id,stage,bcva_etdrs,scan_h\n");
        CHECK_THROWS_AS(cmd_extract(cfg, log), EmptyInputError);
    }
    SECTION("bad rows are skipped with a warning, good rows survive") {
        write_small_study(tmp.path);
        std::ifstream in(tmp.path / "manifest.csv");
        std::stringstream buf;
        buf << in.rdbuf();
        write_file(tmp.path / "manifest.csv",
                   buf.str() + "E3,SOMEDAY,50,scans/E1_PRE_h.pgm,,1,1\n");
        CHECK(cmd_extract(cfg, log) == kPartial);
        CHECK(log.str().find("row skipped") != std::string::npos);
        CHECK(read_feature_csv(fs::path(cfg.out_dir) / "features.csv").rows.size() == 10);
    }
}

TEST_CASE("dynamics command augments the feature table") {
    TempDir tmp;
    write_small_study(tmp.path);
    RunConfig cfg = base_config(tmp.path);
    std::ostringstream log;

    REQUIRE(cmd_extract(cfg, log) == kOk);
    REQUIRE(cmd_dynamics(cfg, log) == kOk);

    FeatureTable t = read_feature_csv(fs::path(cfg.out_dir) / "features_dynamics.csv");
    REQUIRE(t.has_dynamics);
    const auto by_eye = group_by_eye(t);

    const auto& e1 = by_eye.at("E1").at(core::Stage::PRE).dyn;
    REQUIRE(e1.hole);
    CHECK_FALSE(e1.hole->censored);
    // E1's hole first vanishes at M6 (day 180). PRE area: 28 rows x 20 px
    // at the run default of 1 um per pixel edge.
    CHECK(e1.hole->rate == Catch::Approx(28 * 20 / 180.0));
    CHECK(e1.hole->weighted == e1.hole->rate);  // paper-replication: lambda 0

    const auto& e2 = by_eye.at("E2").at(core::Stage::PRE).dyn;
    REQUIRE(e2.hole);
    CHECK(e2.hole->censored);
    CHECK(e2.hole->rate == 0.0);

    // Only baseline rows carry rates.
    CHECK_FALSE(by_eye.at("E1").at(core::Stage::M3).dyn.any());
}

TEST_CASE("fit refuses degenerate studies") {
    TempDir tmp;
    std::ostringstream log;

    SECTION("fewer than three usable rows") {
        write_small_study(tmp.path);
        RunConfig cfg = base_config(tmp.path);
        CHECK_THROWS_AS(cmd_fit(cfg, core::Stage::M12, false, log), InsufficientDataError);
    }
    SECTION("every eye lands in the same class") {
        // Three eyes that all gain 30 letters, sharing one set of scans.
        const int halves[5] = {10, 6, 3, 0, 0};
        std::ostringstream m;
        m << "eye_id,stage,bcva_etdrs,scan_h,scan_v,duration_days,age\n";
        for (int k = 0; k < 5; ++k) {
            const auto stage = core::kAllStages[k];
            const auto [h, v] =
                write_visit_scans(tmp.path, std::string("S_") + core::to_string(stage),
                                  halves[k]);
            for (int e = 1; e <= 3; ++e)
                m << 'E' << e << ',' << core::to_string(stage) << ',' << 40 + 30 * (k > 0)
                  << ',' << h << ',' << v << ',' << 100 + e << ',' << 60 + e << '\n';
        }
        write_file(tmp.path / "manifest.csv", m.str());
        RunConfig cfg = base_config(tmp.path);
        CHECK_THROWS_AS(cmd_fit(cfg, core::Stage::M12, false, log), OneClassOnlyError);
    }
}

TEST_CASE("segmetrics pairs prediction and truth directories") {
    TempDir tmp;
    write_file(tmp.path / "manifest.csv", "eye_id,stage\n");  // unused by segmetrics
    RunConfig cfg;
    cfg.manifest = (tmp.path / "manifest.csv").string();
    cfg.out_dir = (tmp.path / "out").string();
    cfg.finalize();

    const fs::path pred = tmp.path / "pred";
    const fs::path truth = tmp.path / "truth";
    fs::create_directories(pred);
    fs::create_directories(truth);

    std::ostringstream log;
    SECTION("matched pairs produce one csv row per class plus the mean") {
        core::write_scan(stage_scan(8), pred / "a.pgm");
        core::write_scan(stage_scan(10), truth / "a.pgm");
        core::write_scan(stage_scan(0), pred / "b.png");
        core::write_scan(stage_scan(4), truth / "b.png");
        CHECK(cmd_segmetrics(cfg, pred.string(), truth.string(), log) == kOk);

        std::ifstream csv(fs::path(cfg.out_dir) / "segmetrics.csv");
        REQUIRE(csv.good());
        std::string line;
        std::vector<std::string> lines;
        while (std::getline(csv, line)) lines.push_back(line);
        REQUIRE(lines.size() == 11);  // header + 9 classes + mean
        CHECK(lines[0] == "class,dice,iou,accuracy,f1,roc_auc,support,auc_is_fallback");
        CHECK(lines[1].rfind("MacularHole,", 0) == 0);
        CHECK(lines[10].rfind("Mean,", 0) == 0);
    }
    SECTION("an unpaired file on either side is fatal") {
        core::write_scan(stage_scan(8), pred / "a.pgm");
        core::write_scan(stage_scan(10), truth / "a.pgm");
        core::write_scan(stage_scan(5), pred / "extra.pgm");
        CHECK_THROWS_AS(cmd_segmetrics(cfg, pred.string(), truth.string(), log),
                        UnpairedFileError);
    }
    SECTION("empty directories are fatal") {
        CHECK_THROWS_AS(cmd_segmetrics(cfg, pred.string(), truth.string(), log),
                        EmptyInputError);
    }
}

TEST_CASE("predict runs a checkpoint over a sample file") {
    TempDir tmp;
    fusion::FusionConfig cfg;
    cfg.image_size = 16;
    cfg.patch = 8;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_encoder_blocks = 1;
    cfg.head_hidden = 8;
    cfg.modality = fusion::ModalityMode::ImageOnly;
    cfg.validate();
    fusion::ParamStore params = fusion::init_params(cfg);
    const fs::path ckpt = tmp.path / "model.json";
    fusion::save_checkpoint(ckpt, cfg, params);

    SECTION("fresh parameters sit exactly on the decision boundary") {
        // The classifier head's output row starts at zero, so an untrained
        // model scores 0.5 no matter the image.
        nlohmann::json sample;
        sample["image"] = std::vector<double>(16 * 16, 0.25);
        write_file(tmp.path / "sample.json", sample.dump());
        std::ostringstream out;
        CHECK(cmd_predict(ckpt.string(), (tmp.path / "sample.json").string(), out) == kOk);
        CHECK(out.str() == "0.5\n");
    }
    SECTION("malformed sample json is reported as such") {
        write_file(tmp.path / "sample.json", "{not json");
        std::ostringstream out;
        CHECK_THROWS_WITH(cmd_predict(ckpt.string(), (tmp.path / "sample.json").string(), out),
                          Catch::Matchers::ContainsSubstring("malformed sample json"));
    }
    SECTION("a missing required modality is reported by name") {
        write_file(tmp.path / "sample.json", "{\"v_c\": [1, 2]}");
        std::ostringstream out;
        CHECK_THROWS_WITH(cmd_predict(ckpt.string(), (tmp.path / "sample.json").string(), out),
                          Catch::Matchers::ContainsSubstring("missing \"image\""));
    }
}

// ---------------------------------------------------------------------------
// report serialization details

TEST_CASE("context reference AUCs exist for every horizon") {
    CHECK(context_auc(core::Stage::W2) == 0.94);
    CHECK(context_auc(core::Stage::M3) == 0.90);
    CHECK(context_auc(core::Stage::M6) == 0.91);
    CHECK(context_auc(core::Stage::M12) == 0.89);
    CHECK_FALSE(context_auc(core::Stage::PRE));
}

TEST_CASE("json number helper maps non-finite values to null") {
    CHECK(detail::num(1.5) == nlohmann::json(1.5));
    CHECK(detail::num(std::numeric_limits<double>::quiet_NaN()).is_null());
    CHECK(detail::num(std::numeric_limits<double>::infinity()).is_null());
}

TEST_CASE("roc csv writer emits one row per point") {
    stats::RocCurve roc;
    roc.points = {{std::numeric_limits<double>::infinity(), 0.0, 0.0},
                  {0.7, 0.0, 0.5},
                  {0.2, 0.5, 1.0},
                  {-std::numeric_limits<double>::infinity(), 1.0, 1.0}};
    roc.auc = 0.75;
    TempDir tmp;
    write_roc_csv((tmp.path / "roc.csv").string(), roc);
    std::ifstream in(tmp.path / "roc.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "threshold,fpr,tpr");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
}
