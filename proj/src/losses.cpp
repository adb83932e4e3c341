#include "adascale/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adascale/errors.hpp"

namespace adascale {

namespace {

constexpr double kMinProbability = 1e-12;
constexpr double kMinSide = 1e-9;

}  // namespace

std::array<double, 4> box_residuals(const BoundingBox& pred, const BoundingBox& target) {
    const double pw = std::max(pred.width(), kMinSide);
    const double ph = std::max(pred.height(), kMinSide);
    const double tw = std::max(target.width(), kMinSide);
    const double th = std::max(target.height(), kMinSide);
    return {(target.center_x() - pred.center_x()) / pw, (target.center_y() - pred.center_y()) / ph,
            std::log(tw / pw), std::log(th / ph)};
}

double smooth_l1(double x) {
    const double a = std::abs(x);
    return a < 1.0 ? 0.5 * a * a : a - 0.5;
}

PerBoxLoss box_loss(const Detection& det, const Assignment& assignment,
                    std::span<const Annotation> gts, const LossConfig& cfg) {
    const auto& scores = det.class_scores();
    for (double s : scores) {
        if (!std::isfinite(s)) {
            throw InvalidArgument("non-finite class score");
        }
    }
    if (!(cfg.lambda_reg >= 0.0)) {
        throw InvalidArgument("lambda_reg must be non-negative");
    }
    PerBoxLoss out;
    out.detection_index = assignment.detection_index;
    out.is_foreground = assignment.is_foreground();

    int label = 0;
    if (out.is_foreground) {
        const std::size_t g = *assignment.annotation_index;
        if (g >= gts.size()) {
            throw InvalidArgument("assignment refers to a missing annotation");
        }
        label = gts[g].class_label;
        if (label < 1 || label >= static_cast<int>(scores.size())) {
            throw InvalidArgument("annotation class outside the detector's class range");
        }
        for (double r : box_residuals(det.box(), gts[g].box)) {
            out.reg_part += smooth_l1(r);
        }
    }
    // -log(1) is +0.0; keep the sign clean for exact zero checks.
    out.cls_part = -std::log(std::max(scores[static_cast<std::size_t>(label)], kMinProbability)) + 0.0;
    out.total = out.cls_part + cfg.lambda_reg * out.reg_part;
    return out;
}

ScaleMetricReport compute_scale_metric(const std::map<int, ScaleDetections>& per_scale,
                                       std::span<const Annotation> gts, const LossConfig& cfg) {
    if (per_scale.empty()) {
        throw InvalidArgument("compute_scale_metric needs at least one scale");
    }
    struct Scored {
        int scale;
        std::vector<PerBoxLoss> foreground;  // ascending loss, ties by detection index
    };
    std::vector<Scored> scored;
    for (auto it = per_scale.rbegin(); it != per_scale.rend(); ++it) {
        const auto& [scale, sd] = *it;
        if (sd.detections.size() != sd.assignments.size()) {
            throw InvalidArgument("detections and assignments differ in length");
        }
        Scored s{scale, {}};
        for (const Assignment& a : sd.assignments) {
            if (a.is_foreground()) {
                if (a.detection_index >= sd.detections.size()) {
                    throw InvalidArgument("assignment refers to a missing detection");
                }
                s.foreground.push_back(box_loss(sd.detections[a.detection_index], a, gts, cfg));
            }
        }
        std::stable_sort(s.foreground.begin(), s.foreground.end(),
                         [](const PerBoxLoss& x, const PerBoxLoss& y) {
                             if (x.total != y.total) return x.total < y.total;
                             return x.detection_index < y.detection_index;
                         });
        scored.push_back(std::move(s));
    }

    ScaleMetricReport report;
    std::optional<std::size_t> n_min;
    for (const auto& s : scored) {
        if (!s.foreground.empty()) {
            n_min = std::min(n_min.value_or(s.foreground.size()), s.foreground.size());
        }
    }
    report.degenerate = !n_min.has_value();
    report.n_min = n_min.value_or(0);

    for (const auto& s : scored) {
        ScaleMetricEntry e;
        e.scale = s.scale;
        e.foreground_count = s.foreground.size();
        if (!s.foreground.empty()) {
            double sum = 0.0;
            for (std::size_t k = 0; k < report.n_min; ++k) {
                sum += s.foreground[k].total;
                e.selected.push_back(s.foreground[k].detection_index);
            }
            e.metric = sum;
        }
        report.entries.push_back(std::move(e));
    }
    report.optimal_scale = optimal_scale(report);
    return report;
}

int optimal_scale(const ScaleMetricReport& report) {
    if (report.entries.empty()) {
        throw InvalidArgument("empty scale metric report");
    }
    std::optional<int> best_scale;
    double best = 0.0;
    int largest = report.entries.front().scale;
    for (const auto& e : report.entries) {
        largest = std::max(largest, e.scale);
        if (!e.metric) continue;
        const double v = *e.metric;
        if (!best_scale || v < best || (v == best && e.scale < *best_scale)) {
            best_scale = e.scale;
            best = v;
        }
    }
    return best_scale.value_or(largest);
}

}  // namespace adascale
