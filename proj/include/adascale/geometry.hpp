#pragma once

#include <algorithm>

namespace adascale {

// Axis-aligned box in continuous corner coordinates. Area has no +1 pixel term.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }

    bool valid() const;
    bool degenerate() const { return area() <= 0.0; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ImageSize {
    int width = 1;
    int height = 1;

    int shortest_side() const { return std::min(width, height); }
    int longest_side() const { return std::max(width, height); }
    long long pixel_count() const { return static_cast<long long>(width) * height; }

    friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct ResizeResult {
    ImageSize resized;
    double factor = 1.0;
};

/// Longer-side cap applied when resizing to a target scale.
inline constexpr int kMaxLongerSide = 2000;

/// Jaccard overlap. Zero when the union is empty.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Resize so the shortest side equals `target_scale`, unless that would push the
/// longer side past kMaxLongerSide, in which case the cap decides the factor.
/// Throws InvalidArgument for a non-positive scale or image size.
ResizeResult compute_resize(const ImageSize& src, int target_scale);

BoundingBox rescale_box(const BoundingBox& b, double factor);

BoundingBox clip_box(const BoundingBox& b, const ImageSize& image);

// Round half away from zero.
long long round_half_away(double v);

}  // namespace adascale
