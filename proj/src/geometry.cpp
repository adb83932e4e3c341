#include "adascale/geometry.hpp"

#include <cmath>
#include <string>

#include "adascale/errors.hpp"

namespace adascale {

bool BoundingBox::valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
           std::isfinite(y_max) && x_min <= x_max && y_min <= y_max;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) {
        return 0.0;
    }
    return std::clamp(inter / uni, 0.0, 1.0);
}

long long round_half_away(double v) {
    // std::llround rounds halfway cases away from zero.
    return std::llround(v);
}

ResizeResult compute_resize(const ImageSize& src, int target_scale) {
    if (target_scale < 1) {
        throw InvalidArgument("target scale must be >= 1, got " + std::to_string(target_scale));
    }
    if (src.width < 1 || src.height < 1) {
        throw InvalidArgument("image size must be positive");
    }
    const double by_short = static_cast<double>(target_scale) / src.shortest_side();
    const double by_long = static_cast<double>(kMaxLongerSide) / src.longest_side();
    ResizeResult out;
    out.factor = std::min(by_short, by_long);
    out.resized.width = static_cast<int>(std::max<long long>(1, round_half_away(src.width * out.factor)));
    out.resized.height = static_cast<int>(std::max<long long>(1, round_half_away(src.height * out.factor)));
    return out;
}

BoundingBox rescale_box(const BoundingBox& b, double factor) {
    if (!(factor > 0.0)) {
        throw InvalidArgument("rescale factor must be positive");
    }
    return {b.x_min * factor, b.y_min * factor, b.x_max * factor, b.y_max * factor};
}

BoundingBox clip_box(const BoundingBox& b, const ImageSize& image) {
    const double w = image.width;
    const double h = image.height;
    BoundingBox c{std::clamp(b.x_min, 0.0, w), std::clamp(b.y_min, 0.0, h),
                  std::clamp(b.x_max, 0.0, w), std::clamp(b.y_max, 0.0, h)};
    c.x_max = std::max(c.x_max, c.x_min);
    c.y_max = std::max(c.y_max, c.y_min);
    return c;
}

}  // namespace adascale
