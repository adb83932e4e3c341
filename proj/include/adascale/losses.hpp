#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "adascale/detcore.hpp"

namespace adascale {

struct LossConfig {
    double lambda_reg = 1.0;  // balance between classification and regression terms
};

struct PerBoxLoss {
    std::size_t detection_index = 0;
    double total = 0.0;
    double cls_part = 0.0;
    double reg_part = 0.0;
    bool is_foreground = false;
};

/// Center-offset / log-size residuals of `target` relative to `pred`.
std::array<double, 4> box_residuals(const BoundingBox& pred, const BoundingBox& target);

double smooth_l1(double x);

/// Detector loss of one predicted box: cross-entropy on the assigned class (background
/// when unmatched) plus lambda times smooth-L1 on the box residuals for foreground boxes.
/// Throws InvalidArgument on non-finite scores or a dangling annotation index.
PerBoxLoss box_loss(const Detection& det, const Assignment& assignment,
                    std::span<const Annotation> gts, const LossConfig& cfg = {});

/// Detections and their foreground assignment at one input scale. Boxes must share
/// a coordinate frame with the annotations passed to compute_scale_metric.
struct ScaleDetections {
    std::vector<Detection> detections;
    std::vector<Assignment> assignments;
};

struct ScaleMetricEntry {
    int scale = 0;
    std::size_t foreground_count = 0;
    std::vector<std::size_t> selected;  // detection indices, |selected| = n_min when defined
    std::optional<double> metric;       // nullopt for scales with no foreground
};

struct ScaleMetricReport {
    std::vector<ScaleMetricEntry> entries;  // descending scale
    std::size_t n_min = 0;
    bool degenerate = false;  // no scale had a foreground box
    int optimal_scale = 0;
};

/// Foreground-matched metric: every scale with at least one foreground box is scored
/// by the sum of its n_min smallest foreground losses, n_min being the smallest
/// foreground count among those scales. Throws InvalidArgument on an empty map or
/// a detection/assignment size mismatch.
ScaleMetricReport compute_scale_metric(const std::map<int, ScaleDetections>& per_scale,
                                       std::span<const Annotation> gts, const LossConfig& cfg = {});

/// Arg-min of the metric, ties to the smaller scale. A degenerate report yields the
/// largest scale.
int optimal_scale(const ScaleMetricReport& report);

}  // namespace adascale
