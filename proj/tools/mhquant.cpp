// Command-line front end. Subcommand implementations live in
// mhquant/pipeline/commands.hpp; this file only handles argument parsing.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/pipeline/commands.hpp"
#include "mhquant/pipeline/run_config.hpp"

namespace {

// Options every data-processing subcommand shares. Values given on the
// command line win over the config file, which wins over defaults.
struct CommonArgs {
    std::string config;
    std::vector<std::string> overrides;  // raw key=value pairs, -D style
    std::string manifest, scan_root, out_dir, profile;
    std::string seed;  // string so "not given" is distinguishable
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("-c,--config", a.config, "run configuration file (key=value lines)")
        ->check(CLI::ExistingFile);
    cmd->add_option("-D,--define", a.overrides,
                    "override a config key, e.g. -D lambda=0.5 (repeatable)");
    cmd->add_option("--manifest", a.manifest, "study manifest CSV");
    cmd->add_option("--scan-root", a.scan_root, "directory scan paths are relative to");
    cmd->add_option("-o,--out", a.out_dir, "output directory");
    cmd->add_option("--profile", a.profile, "paper-replication or extended");
    cmd->add_option("--seed", a.seed, "RNG seed for splits and training");
}

mhquant::pipeline::RunConfig build_config(const CommonArgs& a) {
    using mhquant::pipeline::RunConfig;
    RunConfig cfg;
    if (!a.config.empty()) cfg = mhquant::pipeline::load_run_config(a.config);
    auto set = [&](const std::string& key, const std::string& value) {
        if (!value.empty()) mhquant::pipeline::detail::apply_key(cfg, key, value);
    };
    for (const auto& kv : a.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw mhquant::ConfigError("override must look like key=value: " + kv);
        mhquant::pipeline::detail::apply_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    set("manifest", a.manifest);
    set("scan_root", a.scan_root);
    set("out_dir", a.out_dir);
    set("profile", a.profile);
    set("seed", a.seed);
    cfg.finalize();
    if (cfg.manifest.empty())
        throw mhquant::ConfigError("no manifest given (config key 'manifest' or --manifest)");
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"macular-hole OCT morphometry, outcome models and the multimodal classifier"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string horizon = "m12";
    bool without_dp = false;
    std::string pred_dir, truth_dir;
    std::string checkpoint_path, sample_path;

    auto* extract = app.add_subcommand("extract", "morphometry for every visit with scans");
    add_common(extract, args);

    auto* dynamics = app.add_subcommand("dynamics", "recovery rates over each eye's series");
    add_common(dynamics, args);

    auto* fit = app.add_subcommand("fit", "outcome-model protocol at one horizon");
    add_common(fit, args);
    fit->add_option("--horizon", horizon, "w2, m3, m6 or m12")->capture_default_str();
    fit->add_flag("--without-dp", without_dp, "drop the dynamic recovery-rate columns");

    auto* seg = app.add_subcommand("segmetrics", "segmentation quality for paired mask dirs");
    add_common(seg, args);
    seg->add_option("--pred", pred_dir, "directory of predicted masks")->required();
    seg->add_option("--truth", truth_dir, "directory of ground-truth masks")->required();

    auto* trainf = app.add_subcommand("train-fusion", "multimodal classifier at one horizon");
    add_common(trainf, args);
    trainf->add_option("--horizon", horizon, "w2, m3, m6 or m12")->capture_default_str();

    auto* predict = app.add_subcommand("predict", "score one sample with a saved checkpoint");
    predict->add_option("--checkpoint", checkpoint_path, "checkpoint json")->required();
    predict->add_option("--sample", sample_path, "sample json with image/v_c/v_v")->required();

    auto* report = app.add_subcommand("report", "summarize a fit artifact");
    add_common(report, args);
    report->add_option("--horizon", horizon, "w2, m3, m6 or m12")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // CLI11 reports help/version as "errors" with code 0; anything else
        // is a usage problem and lands on the fatal exit code.
        return code == 0 ? 0 : 2;
    }

    try {
        using namespace mhquant::pipeline;
        if (extract->parsed()) return cmd_extract(build_config(args), std::cerr);
        if (dynamics->parsed()) return cmd_dynamics(build_config(args), std::cerr);
        if (fit->parsed())
            return cmd_fit(build_config(args), parse_horizon(horizon), without_dp, std::cerr);
        if (seg->parsed()) return cmd_segmetrics(build_config(args), pred_dir, truth_dir, std::cerr);
        if (trainf->parsed())
            return cmd_train_fusion(build_config(args), parse_horizon(horizon), std::cerr);
        if (predict->parsed()) return cmd_predict(checkpoint_path, sample_path, std::cout);
        if (report->parsed())
            return cmd_report(build_config(args), parse_horizon(horizon), std::cout);
    } catch (const mhquant::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;  // unreachable: require_subcommand(1) guarantees one branch
}
