#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adascale/detcore.hpp"

namespace adascale {

inline constexpr double kMatchOverlap = 0.5;
inline constexpr double kCountThreshold = 0.5;

/// Greedy one-to-one matching in confidence order (ties by input index). Each
/// detection claims the unclaimed same-class annotation of maximal IoU when that
/// IoU is at least `iou_threshold`. Result is aligned with `dets`; true = TP.
std::vector<bool> match_detections(std::span<const Detection> dets, std::span<const Annotation> gts,
                                   double iou_threshold = kMatchOverlap);

struct ScoredFlag {
    double confidence = 0.0;
    bool true_positive = false;
};

/// All-point interpolated AP. nullopt when `n_gt` is zero.
std::optional<double> average_precision(std::span<const ScoredFlag> flags, std::size_t n_gt);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
    double confidence = 0.0;
};

std::vector<PrPoint> precision_recall_curve(std::span<const ScoredFlag> flags, std::size_t n_gt);

struct TpFp {
    std::size_t tp = 0;
    std::size_t fp = 0;
};

/// Counts over detections with confidence >= threshold.
TpFp tp_fp_counts(std::span<const ScoredFlag> flags, double threshold = kCountThreshold);

struct Histogram {
    std::vector<double> edges;  // bins + 1 entries
    std::vector<std::size_t> counts;
};

/// Uniform bins over [lo, hi]; values outside are clamped into the end bins.
Histogram make_histogram(std::span<const int> values, double lo, double hi, int bins = 10);

struct ClassResult {
    int class_label = 0;
    std::size_t n_gt = 0;
    std::optional<double> ap;
    TpFp counts;
    std::vector<PrPoint> pr_curve;
};

struct ScaleTraceEntry {
    std::string snippet_id;
    int frame_index = 0;
    int scale = 0;
};

struct EvalReport {
    std::string policy;
    std::vector<ClassResult> classes;
    double map = 0.0;  // mean AP over classes with ground truth
    TpFp counts;
    double workload = 0.0;
    std::vector<ScaleTraceEntry> scale_trace;
    Histogram histogram;
};

/// Mean of per-class APs over classes that have ground truth; 0 when none do.
double mean_average_precision(std::span<const ClassResult> classes);

/// Accumulates per-frame detections (native coordinates) and builds an EvalReport.
class Evaluator {
public:
    explicit Evaluator(int num_classes, double iou_threshold = kMatchOverlap,
                       double count_threshold = kCountThreshold);

    void add_frame(std::span<const Detection> dets, std::span<const Annotation> gts);
    /// Per-class results and mAP; trace, workload and histogram are left to the caller.
    EvalReport finish() const;

private:
    int num_classes_;
    double iou_threshold_;
    double count_threshold_;
    std::map<int, std::vector<ScoredFlag>> flags_;
    std::map<int, std::size_t> n_gt_;
};

}  // namespace adascale
