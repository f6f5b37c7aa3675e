#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mhquant/core/rng.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/fusion/config.hpp"

namespace mhquant::fusion {

/// Dense row-major tensor. Rank is 1 or 2 everywhere in this model; a
/// matrix [out, in] multiplies column vectors (y = W x + b).
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        data.assign(n, 0.0);
    }

    std::size_t numel() const { return data.size(); }
    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() > 1 ? shape[1] : 1; }

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
    double operator()(int r, int c) const {
        return data[static_cast<std::size_t>(r) * cols() + c];
    }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/// Named parameter collection. std::map keeps iteration order stable by
/// name, which makes optimizer sweeps and checkpoints deterministic.
struct ParamStore {
    std::map<std::string, Tensor> tensors;

    Tensor& at(const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw Error("unknown parameter tensor: " + name);
        return it->second;
    }
    const Tensor& at(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw Error("unknown parameter tensor: " + name);
        return it->second;
    }
    bool has(const std::string& name) const { return tensors.count(name) != 0; }

    std::size_t total_parameters() const {
        std::size_t n = 0;
        for (const auto& [_, t] : tensors) n += t.numel();
        return n;
    }

    /// Same tensor names with the same shapes, zero-filled (gradient /
    /// momentum buffers).
    ParamStore zeros_like() const {
        ParamStore z;
        for (const auto& [name, t] : tensors) z.tensors.emplace(name, Tensor(t.shape));
        return z;
    }

    /// Name of the first tensor containing a non-finite entry, or empty.
    std::string first_non_finite() const {
        for (const auto& [name, t] : tensors)
            if (!t.all_finite()) return name;
        return {};
    }
};

namespace detail {

inline void add_normal(ParamStore& p, core::SplitMix64& rng, const std::string& name,
                       std::vector<int> shape, double stddev) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = stddev * rng.normal();
    p.tensors.emplace(name, std::move(t));
}

inline void add_zeros(ParamStore& p, const std::string& name, std::vector<int> shape) {
    p.tensors.emplace(name, Tensor(std::move(shape)));
}

inline void add_ones(ParamStore& p, const std::string& name, int n) {
    Tensor t({n});
    for (auto& v : t.data) v = 1.0;
    p.tensors.emplace(name, std::move(t));
}

inline void add_linear(ParamStore& p, core::SplitMix64& rng, const std::string& prefix,
                       int out, int in, double stddev) {
    add_normal(p, rng, prefix + ".w", {out, in}, stddev);
    add_zeros(p, prefix + ".b", {out});
}

inline void add_attention(ParamStore& p, core::SplitMix64& rng, const std::string& prefix,
                          int d, double stddev) {
    for (const char* part : {"wq", "wk", "wv", "wo"})
        add_normal(p, rng, prefix + "." + part, {d, d}, stddev);
    for (const char* part : {"bq", "bk", "bv", "bo"})
        add_zeros(p, prefix + "." + part, {d});
}

}  // namespace detail

/// Fresh parameters for a configuration. Weight spreads scale with fan-in
/// (N(0, 1/fan_in)) so activations stay O(1) at any width; biases start at
/// zero, layer-norm scales at one, positional embeddings small. The
/// classifier layer is zero-initialized so an untrained model predicts
/// exactly (0.5, 0.5).
inline ParamStore init_params(const FusionConfig& cfg) {
    cfg.validate();
    core::SplitMix64 rng(cfg.seed);
    const auto fan = [](int n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
    ParamStore p;

    if (cfg.uses_image()) {
        detail::add_linear(p, rng, "patch_embed", cfg.d_model, cfg.patch_dim(),
                           fan(cfg.patch_dim()));
        detail::add_normal(p, rng, "pos_embed", {cfg.n_tokens(), cfg.d_model}, 0.02);
        for (int i = 0; i < cfg.n_encoder_blocks; ++i) {
            const std::string b = "enc" + std::to_string(i);
            detail::add_ones(p, b + ".ln1.g", cfg.d_model);
            detail::add_zeros(p, b + ".ln1.b", {cfg.d_model});
            detail::add_attention(p, rng, b + ".attn", cfg.d_model, fan(cfg.d_model));
            detail::add_ones(p, b + ".ln2.g", cfg.d_model);
            detail::add_zeros(p, b + ".ln2.b", {cfg.d_model});
            detail::add_linear(p, rng, b + ".ff.l1", cfg.ff_hidden(), cfg.d_model,
                               fan(cfg.d_model));
            detail::add_linear(p, rng, b + ".ff.l2", cfg.d_model, cfg.ff_hidden(),
                               fan(cfg.ff_hidden()));
        }
    }
    if (cfg.uses_vectors()) {
        detail::add_linear(p, rng, "mlp_c.l1", cfg.d_model, cfg.clinical_dim,
                           fan(cfg.clinical_dim));
        detail::add_linear(p, rng, "mlp_c.l2", cfg.d_model, cfg.d_model, fan(cfg.d_model));
        detail::add_linear(p, rng, "mlp_v.l1", cfg.d_model, cfg.values_dim,
                           fan(cfg.values_dim));
        detail::add_linear(p, rng, "mlp_v.l2", cfg.d_model, cfg.d_model, fan(cfg.d_model));
    }
    if (cfg.modality == ModalityMode::TriModal) {
        detail::add_attention(p, rng, "ca_c", cfg.d_model, fan(cfg.d_model));
        detail::add_attention(p, rng, "ca_v", cfg.d_model, fan(cfg.d_model));
    }
    detail::add_linear(p, rng, "head.mlp1", cfg.head_hidden, cfg.feature_width(),
                       fan(cfg.feature_width()));
    detail::add_linear(p, rng, "head.mlp2", cfg.head_hidden, cfg.head_hidden,
                       fan(cfg.head_hidden));
    detail::add_zeros(p, "head.cls.w", {2, cfg.head_hidden});
    detail::add_zeros(p, "head.cls.b", {2});
    return p;
}

}  // namespace mhquant::fusion
