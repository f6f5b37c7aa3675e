#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "mhquant/errors.hpp"

namespace mhquant::core {

/// Segmentation classes, in mask-code order. The numeric value of each
/// enumerator is the pixel value used in label masks.
enum class ClassLabel : std::uint8_t {
    Background = 0,
    MacularHole = 1,
    Pseudocysts = 2,
    ERM = 3,
    Space = 4,
    VMT = 5,
    PVD = 6,
    ELM = 7,
    EZ = 8,
    RPE = 9,
};

inline constexpr int kNumClassLabels = 10;

inline constexpr std::array<ClassLabel, kNumClassLabels> kAllClassLabels = {
    ClassLabel::Background, ClassLabel::MacularHole, ClassLabel::Pseudocysts,
    ClassLabel::ERM,        ClassLabel::Space,       ClassLabel::VMT,
    ClassLabel::PVD,        ClassLabel::ELM,         ClassLabel::EZ,
    ClassLabel::RPE,
};

constexpr bool is_valid_label_code(int code) {
    return code >= 0 && code < kNumClassLabels;
}

constexpr std::uint8_t label_code(ClassLabel c) { return static_cast<std::uint8_t>(c); }

inline const char* to_string(ClassLabel c) {
    switch (c) {
        case ClassLabel::Background:  return "Background";
        case ClassLabel::MacularHole: return "MacularHole";
        case ClassLabel::Pseudocysts: return "Pseudocysts";
        case ClassLabel::ERM:         return "ERM";
        case ClassLabel::Space:       return "Space";
        case ClassLabel::VMT:         return "VMT";
        case ClassLabel::PVD:         return "PVD";
        case ClassLabel::ELM:         return "ELM";
        case ClassLabel::EZ:          return "EZ";
        case ClassLabel::RPE:         return "RPE";
    }
    return "?";
}

inline ClassLabel parse_class_label(const std::string& name) {
    for (ClassLabel c : kAllClassLabels)
        if (name == to_string(c)) return c;
    throw Error("unknown class label name: " + name);
}

}  // namespace mhquant::core
