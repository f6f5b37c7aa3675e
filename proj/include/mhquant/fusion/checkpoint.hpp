#pragma once

#include <fstream>
#include <string>
#include <utility>

#include "json.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/fusion/config.hpp"
#include "mhquant/fusion/params.hpp"

namespace mhquant::fusion {

inline constexpr int kCheckpointFormatVersion = 1;

namespace detail {

inline nlohmann::json config_to_json(const FusionConfig& c) {
    return nlohmann::json{{"image_size", c.image_size},
                          {"patch", c.patch},
                          {"d_model", c.d_model},
                          {"n_heads", c.n_heads},
                          {"n_encoder_blocks", c.n_encoder_blocks},
                          {"clinical_dim", c.clinical_dim},
                          {"values_dim", c.values_dim},
                          {"head_hidden", c.head_hidden},
                          {"modality", to_string(c.modality)},
                          {"ca_direction", to_string(c.ca_direction)},
                          {"seed", c.seed}};
}

inline FusionConfig config_from_json(const nlohmann::json& j) {
    FusionConfig c;
    c.image_size = j.at("image_size").get<int>();
    c.patch = j.at("patch").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.n_encoder_blocks = j.at("n_encoder_blocks").get<int>();
    c.clinical_dim = j.at("clinical_dim").get<int>();
    c.values_dim = j.at("values_dim").get<int>();
    c.head_hidden = j.at("head_hidden").get<int>();
    c.modality = parse_modality(j.at("modality").get<std::string>());
    c.ca_direction = parse_ca_direction(j.at("ca_direction").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace detail

/// Writes config + every named tensor as JSON. Doubles are emitted with
/// shortest round-trip formatting, so load restores them bit for bit.
inline void save_checkpoint(const std::string& path, const FusionConfig& cfg,
                            const ParamStore& params) {
    const std::string bad = params.first_non_finite();
    if (!bad.empty()) throw NonFiniteError(bad);

    nlohmann::json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["config"] = detail::config_to_json(cfg);
    nlohmann::json tensors = nlohmann::json::object();
    for (const auto& [name, t] : params.tensors)
        tensors[name] = nlohmann::json{{"shape", t.shape}, {"data", t.data}};
    j["tensors"] = std::move(tensors);

    std::ofstream out(path);
    if (!out) throw Error("cannot open checkpoint for writing: " + path);
    out << j.dump(1, '\t') << '\n';
    if (!out) throw Error("failed writing checkpoint: " + path);
}

inline std::pair<FusionConfig, ParamStore> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed checkpoint " + path + ": " + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
            throw Error("unsupported checkpoint format version in " + path);
        FusionConfig cfg = detail::config_from_json(j.at("config"));
        cfg.validate();
        ParamStore params;
        for (const auto& [name, tj] : j.at("tensors").items()) {
            Tensor t;
            t.shape = tj.at("shape").get<std::vector<int>>();
            t.data = tj.at("data").get<std::vector<double>>();
            std::size_t expect = 1;
            for (int d : t.shape) expect *= static_cast<std::size_t>(d);
            if (expect != t.data.size())
                throw Error("checkpoint tensor " + name + " has inconsistent shape");
            params.tensors.emplace(name, std::move(t));
        }
        return {cfg, std::move(params)};
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed checkpoint " + path + ": " + e.what());
    }
}

}  // namespace mhquant::fusion
