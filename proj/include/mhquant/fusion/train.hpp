#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mhquant/core/rng.hpp"
#include "mhquant/errors.hpp"
#include "mhquant/fusion/model.hpp"

namespace mhquant::fusion {

struct TrainOptions {
    int epochs = 100;
    double lr = 0.01;
    int batch_size = 8;
    double momentum = 0.9;
};

struct TrainResult {
    ParamStore params;
    std::vector<double> epoch_losses;  ///< sample-weighted mean loss per epoch
};

/// Mini-batch gradient descent with classical momentum
/// (v <- momentum v + g, theta <- theta - lr v). Initialization and the
/// per-epoch shuffle both derive from cfg.seed, so identical
/// (seed, config, data) reproduce identical parameters bit for bit.
inline TrainResult train(const std::vector<Sample>& dataset, const FusionConfig& cfg,
                         const TrainOptions& opt = {}) {
    if (dataset.empty()) throw EmptyInputError("train: empty dataset");
    int n_pos = 0;
    for (const auto& s : dataset) n_pos += s.label != 0;
    if (n_pos == 0 || n_pos == static_cast<int>(dataset.size())) throw OneClassOnlyError();
    if (opt.epochs < 0 || opt.batch_size <= 0)
        throw std::invalid_argument("train: bad epochs or batch size");

    TrainResult res;
    res.params = init_params(cfg);
    ParamStore velocity = res.params.zeros_like();

    // Separate stream from the one init_params consumed.
    core::SplitMix64 shuffle_rng(cfg.seed + 0x9E3779B97F4A7C15ULL);
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<Sample> batch;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        core::shuffle(order, shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            batch.clear();
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
            for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);

            auto lg = loss_and_grads(cfg, res.params, batch);
            loss_sum += lg.loss * static_cast<double>(batch.size());
            for (auto& [name, v] : velocity.tensors) {
                const auto& g = lg.grads.at(name);
                auto& theta = res.params.at(name);
                for (std::size_t i = 0; i < v.numel(); ++i) {
                    v.data[i] = opt.momentum * v.data[i] + g.data[i];
                    theta.data[i] -= opt.lr * v.data[i];
                }
            }
        }
        const double epoch_loss = loss_sum / static_cast<double>(dataset.size());
        if (!std::isfinite(epoch_loss)) throw DivergedError("training loss is not finite");
        res.epoch_losses.push_back(epoch_loss);
    }
    return res;
}

/// Probability of the Superior class for each sample under fixed parameters.
inline std::vector<double> predict_scores(const FusionConfig& cfg, const ParamStore& params,
                                          const std::vector<Sample>& samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(forward(cfg, params, s).p_superior);
    return out;
}

}  // namespace mhquant::fusion
