#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "adascale/geometry.hpp"

namespace adascale {

/// A predicted box with a probability vector over background (index 0) and
/// K foreground classes. Construct through `Detection::make`, which validates the
/// scores and caches the arg-max.
class Detection {
public:
    Detection() = default;

    /// Throws InvalidArgument when a score is non-finite, outside [0,1], or the
    /// vector does not sum to 1 within 1e-6.
    static Detection make(const BoundingBox& box, std::vector<double> class_scores);

    const BoundingBox& box() const { return box_; }
    const std::vector<double>& class_scores() const { return scores_; }
    int predicted_class() const { return predicted_; }
    double confidence() const { return confidence_; }
    int num_classes() const { return static_cast<int>(scores_.size()) - 1; }

    /// Same scores, different box (used when mapping between image scales).
    Detection with_box(const BoundingBox& box) const;

    friend bool operator==(const Detection&, const Detection&) = default;

private:
    BoundingBox box_;
    std::vector<double> scores_;
    int predicted_ = 0;
    double confidence_ = 0.0;
};

/// Ground-truth box. Labels start at 1; background is never stored.
struct Annotation {
    BoundingBox box;
    int class_label = 1;

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Assignment {
    std::size_t detection_index = 0;
    std::optional<std::size_t> annotation_index;  // nullopt = background
    double overlap = 0.0;                         // max IoU over all annotations

    bool is_foreground() const { return annotation_index.has_value(); }
};

inline constexpr double kNmsThreshold = 0.3;
inline constexpr std::size_t kTopK = 300;
inline constexpr double kForegroundOverlap = 0.5;

/// Greedy per-class NMS. Survivors are returned by descending confidence (ties
/// by lower input index) and truncated to `top_k`.
std::vector<Detection> nms(std::span<const Detection> dets, double threshold = kNmsThreshold,
                           std::size_t top_k = kTopK);

/// Loss-side assignment: each detection takes the annotation of maximal IoU when
/// that IoU is strictly above `min_overlap`. Several detections may share one
/// annotation.
std::vector<Assignment> assign_foreground(std::span<const Detection> dets,
                                          std::span<const Annotation> gts,
                                          double min_overlap = kForegroundOverlap);

}  // namespace adascale
