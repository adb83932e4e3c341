#include "adascale/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adascale/errors.hpp"

namespace adascale {

std::vector<bool> match_detections(std::span<const Detection> dets, std::span<const Annotation> gts,
                                   double iou_threshold) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].confidence() > dets[b].confidence();
    });
    std::vector<bool> claimed(gts.size(), false);
    std::vector<bool> tp(dets.size(), false);
    for (std::size_t i : order) {
        std::optional<std::size_t> best;
        double best_iou = iou_threshold;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (claimed[g] || gts[g].class_label != dets[i].predicted_class()) continue;
            const double o = iou(dets[i].box(), gts[g].box);
            if (o >= best_iou && (!best || o > best_iou)) {
                best = g;
                best_iou = o;
            }
        }
        if (best) {
            claimed[*best] = true;
            tp[i] = true;
        }
    }
    return tp;
}

namespace {

std::vector<ScoredFlag> by_confidence(std::span<const ScoredFlag> flags) {
    std::vector<ScoredFlag> sorted(flags.begin(), flags.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ScoredFlag& a, const ScoredFlag& b) { return a.confidence > b.confidence; });
    return sorted;
}

}  // namespace

std::optional<double> average_precision(std::span<const ScoredFlag> flags, std::size_t n_gt) {
    if (n_gt == 0) return std::nullopt;
    const auto sorted = by_confidence(flags);
    std::vector<double> precision(sorted.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i].true_positive) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    // Precision envelope: best precision at any recall at or beyond this point.
    for (std::size_t i = precision.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    // Each TP raises recall by 1/n_gt; extra TPs beyond n_gt are impossible by matching.
    double ap = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i].true_positive) ap += precision[i] / static_cast<double>(n_gt);
    }
    return ap;
}

std::vector<PrPoint> precision_recall_curve(std::span<const ScoredFlag> flags, std::size_t n_gt) {
    std::vector<PrPoint> out;
    if (n_gt == 0) return out;
    const auto sorted = by_confidence(flags);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i].true_positive) ++tp;
        out.push_back({static_cast<double>(tp) / static_cast<double>(n_gt),
                       static_cast<double>(tp) / static_cast<double>(i + 1), sorted[i].confidence});
    }
    return out;
}

TpFp tp_fp_counts(std::span<const ScoredFlag> flags, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw InvalidArgument("count threshold must lie in [0,1]");
    }
    TpFp c;
    for (const auto& f : flags) {
        if (f.confidence < threshold) continue;
        if (f.true_positive) ++c.tp; else ++c.fp;
    }
    return c;
}

Histogram make_histogram(std::span<const int> values, double lo, double hi, int bins) {
    if (bins < 1 || !(hi > lo)) {
        throw InvalidArgument("histogram needs bins >= 1 and hi > lo");
    }
    Histogram h;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * b / bins);
    for (int v : values) {
        auto b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

double mean_average_precision(std::span<const ClassResult> classes) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : classes) {
        if (c.ap) {
            sum += *c.ap;
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

Evaluator::Evaluator(int num_classes, double iou_threshold, double count_threshold)
    : num_classes_(num_classes), iou_threshold_(iou_threshold), count_threshold_(count_threshold) {
    if (num_classes_ < 1) throw InvalidArgument("evaluator needs at least one class");
}

void Evaluator::add_frame(std::span<const Detection> dets, std::span<const Annotation> gts) {
    const auto tp = match_detections(dets, gts, iou_threshold_);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        flags_[dets[i].predicted_class()].push_back({dets[i].confidence(), tp[i]});
    }
    for (const auto& g : gts) ++n_gt_[g.class_label];
}

EvalReport Evaluator::finish() const {
    EvalReport r;
    for (int c = 1; c <= num_classes_; ++c) {
        ClassResult cr;
        cr.class_label = c;
        const auto g = n_gt_.find(c);
        cr.n_gt = g == n_gt_.end() ? 0 : g->second;
        const auto f = flags_.find(c);
        const std::vector<ScoredFlag> empty;
        const auto& flags = f == flags_.end() ? empty : f->second;
        cr.ap = average_precision(flags, cr.n_gt);
        cr.counts = tp_fp_counts(flags, count_threshold_);
        cr.pr_curve = precision_recall_curve(flags, cr.n_gt);
        r.counts.tp += cr.counts.tp;
        r.counts.fp += cr.counts.fp;
        r.classes.push_back(std::move(cr));
    }
    r.map = mean_average_precision(r.classes);
    return r;
}

}  // namespace adascale
