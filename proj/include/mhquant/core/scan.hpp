#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mhquant/core/class_label.hpp"
#include "mhquant/errors.hpp"

namespace mhquant::core {

/// Physical size of one pixel in micrometres. x runs along scan width
/// (columns), y along scan depth (rows).
struct PixelSpacing {
    double um_per_px_x = 1.0;
    double um_per_px_y = 1.0;

    void validate() const {
        if (!(um_per_px_x > 0.0) || !(um_per_px_y > 0.0))
            throw Error("pixel spacing must be positive");
    }
};

/// B-scan direction through the fovea.
enum class Orientation { Horizontal, Vertical };

inline const char* to_string(Orientation o) {
    return o == Orientation::Horizontal ? "horizontal" : "vertical";
}

/// A segmented B-scan: a dense row-major grid of class codes plus the
/// physical pixel spacing. Pixel (x, y) is column x of row y.
class LabeledScan {
public:
    LabeledScan(int width, int height, std::vector<std::uint8_t> labels,
                Orientation orientation, PixelSpacing spacing)
        : width_(width), height_(height), labels_(std::move(labels)),
          orientation_(orientation), spacing_(spacing) {
        if (width_ < 1 || height_ < 1)
            throw Error("scan dimensions must be at least 1x1");
        if (labels_.size() != static_cast<std::size_t>(width_) * height_)
            throw Error("label buffer size does not match scan dimensions");
        spacing_.validate();
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (!is_valid_label_code(labels_[i]))
                throw UnknownLabelCodeError(labels_[i], static_cast<int>(i) % width_,
                                            static_cast<int>(i) / width_);
        }
    }

    /// Uniform scan filled with a single class.
    static LabeledScan filled(int width, int height, ClassLabel fill,
                              Orientation orientation, PixelSpacing spacing) {
        return LabeledScan(width, height,
                           std::vector<std::uint8_t>(
                               static_cast<std::size_t>(width) * height, label_code(fill)),
                           orientation, spacing);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    Orientation orientation() const { return orientation_; }
    const PixelSpacing& spacing() const { return spacing_; }
    const std::vector<std::uint8_t>& labels() const { return labels_; }

    ClassLabel at(int x, int y) const {
        return static_cast<ClassLabel>(labels_[static_cast<std::size_t>(y) * width_ + x]);
    }

    /// Set is unchecked for speed in tight construction loops; the value must
    /// be a valid class.
    void set(int x, int y, ClassLabel c) {
        labels_[static_cast<std::size_t>(y) * width_ + x] = label_code(c);
    }

    std::size_t count(ClassLabel c) const {
        std::size_t n = 0;
        for (std::uint8_t v : labels_)
            if (v == label_code(c)) ++n;
        return n;
    }

    bool same_shape(const LabeledScan& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> labels_;
    Orientation orientation_;
    PixelSpacing spacing_;
};

}  // namespace mhquant::core
