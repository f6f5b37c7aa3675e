#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mhquant/core/rng.hpp"
#include "mhquant/errors.hpp"

namespace mhquant::stats {

struct TrainTestSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified train/test split: indices of each class are shuffled
/// independently (one Fisher-Yates per class, single shared RNG stream) and
/// the first round(n_c * test_fraction) of each class go to the test side,
/// clamped so both sides keep at least one member of every class. Classes
/// with fewer than two members cannot satisfy that and are an error.
inline TrainTestSplit stratified_split(const std::vector<int>& labels, double test_fraction,
                                       std::uint64_t seed) {
    if (labels.empty()) throw EmptyInputError("stratified_split");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("test_fraction must lie in (0, 1)");

    std::vector<std::vector<std::size_t>> by_class(2);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] != 0].push_back(i);

    core::SplitMix64 rng(seed);
    TrainTestSplit out;
    for (auto& members : by_class) {
        if (members.empty()) continue;
        if (members.size() < 2)
            throw InsufficientDataError("stratified_split: a class has fewer than 2 members");
        core::shuffle(members, rng);
        long n_test = std::lround(test_fraction * static_cast<double>(members.size()));
        n_test = std::max(1L, std::min(n_test, static_cast<long>(members.size()) - 1));
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < static_cast<std::size_t>(n_test) ? out.test : out.train).push_back(members[i]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

/// Stratified k-fold assignment: within each class the shuffled members are
/// dealt round-robin to folds 0..k-1, so fold class balance never drifts by
/// more than one sample. Returns fold index per sample. Every class must
/// have at least k members so each fold sees both classes.
inline std::vector<int> stratified_kfold(const std::vector<int>& labels, int k,
                                         std::uint64_t seed) {
    if (labels.empty()) throw EmptyInputError("stratified_kfold");
    if (k < 2) throw std::invalid_argument("stratified_kfold needs k >= 2");

    std::vector<std::vector<std::size_t>> by_class(2);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] != 0].push_back(i);

    core::SplitMix64 rng(seed);
    std::vector<int> fold(labels.size(), -1);
    for (auto& members : by_class) {
        if (members.empty()) continue;
        if (members.size() < static_cast<std::size_t>(k))
            throw InsufficientDataError("stratified_kfold: class smaller than fold count");
        core::shuffle(members, rng);
        for (std::size_t i = 0; i < members.size(); ++i)
            fold[members[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return fold;
}

}  // namespace mhquant::stats
