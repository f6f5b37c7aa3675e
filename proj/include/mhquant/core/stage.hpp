#pragma once

#include <array>
#include <string>

#include "mhquant/errors.hpp"

namespace mhquant::core {

/// Follow-up stages of the longitudinal protocol, in temporal order.
enum class Stage { PRE = 0, W2, M3, M6, M12 };

inline constexpr int kNumStages = 5;

inline constexpr std::array<Stage, kNumStages> kAllStages = {
    Stage::PRE, Stage::W2, Stage::M3, Stage::M6, Stage::M12,
};

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::PRE: return "PRE";
        case Stage::W2:  return "W2";
        case Stage::M3:  return "M3";
        case Stage::M6:  return "M6";
        case Stage::M12: return "M12";
    }
    return "?";
}

/// Parses a stage name. Accepts the canonical upper-case form and the
/// lower-case form used by CLI flags (e.g. "m3").
inline Stage parse_stage(const std::string& text) {
    std::string up;
    up.reserve(text.size());
    for (char ch : text) up.push_back(static_cast<char>(ch >= 'a' && ch <= 'z' ? ch - 32 : ch));
    for (Stage s : kAllStages)
        if (up == to_string(s)) return s;
    throw Error("unknown stage: " + text);
}

inline bool is_postoperative(Stage s) { return s != Stage::PRE; }

/// Maps stages to nominal days after surgery. The defaults place surgery at
/// day 0 and use 14 / 90 / 180 / 365 for the follow-ups; all downstream
/// day arithmetic goes through this table so alternative visit calendars can
/// be configured in one place.
struct StageDayMap {
    std::array<int, kNumStages> days = {0, 14, 90, 180, 365};

    int day(Stage s) const { return days[static_cast<int>(s)]; }

    void validate() const {
        if (days[0] != 0) throw Error("stage day map: PRE must map to day 0");
        for (int i = 1; i < kNumStages; ++i)
            if (days[i] <= days[i - 1])
                throw Error("stage day map: days must be strictly increasing");
    }
};

}  // namespace mhquant::core
