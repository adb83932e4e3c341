#include "adascale/detcore.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "adascale/errors.hpp"

namespace adascale {

Detection Detection::make(const BoundingBox& box, std::vector<double> class_scores) {
    if (class_scores.size() < 2) {
        throw InvalidArgument("detection needs background plus at least one class score");
    }
    if (!box.valid()) {
        throw InvalidArgument("detection box is not a valid box");
    }
    double sum = 0.0;
    for (double s : class_scores) {
        if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
            throw InvalidArgument("class score outside [0,1]");
        }
        sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw InvalidArgument("class scores must sum to 1");
    }
    Detection d;
    d.box_ = box;
    d.scores_ = std::move(class_scores);
    const auto it = std::max_element(d.scores_.begin(), d.scores_.end());
    d.predicted_ = static_cast<int>(it - d.scores_.begin());
    d.confidence_ = *it;
    return d;
}

Detection Detection::with_box(const BoundingBox& box) const {
    Detection d = *this;
    d.box_ = box;
    return d;
}

namespace {

std::vector<std::size_t> confidence_order(std::span<const Detection> dets) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].confidence() > dets[b].confidence();
    });
    return order;
}

}  // namespace

std::vector<Detection> nms(std::span<const Detection> dets, double threshold, std::size_t top_k) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw InvalidArgument("NMS threshold must lie in (0,1]");
    }
    const auto order = confidence_order(dets);

    std::map<int, std::vector<std::size_t>> kept_by_class;
    std::vector<std::size_t> survivors;
    for (std::size_t idx : order) {
        auto& kept = kept_by_class[dets[idx].predicted_class()];
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return iou(dets[k].box(), dets[idx].box()) > threshold;
        });
        if (!suppressed) {
            kept.push_back(idx);
            survivors.push_back(idx);
        }
    }
    // `order` is already confidence-descending with index tie-break, so survivors are too.
    if (survivors.size() > top_k) {
        survivors.resize(top_k);
    }
    std::vector<Detection> out;
    out.reserve(survivors.size());
    for (std::size_t idx : survivors) {
        out.push_back(dets[idx]);
    }
    return out;
}

std::vector<Assignment> assign_foreground(std::span<const Detection> dets,
                                          std::span<const Annotation> gts, double min_overlap) {
    std::vector<Assignment> out;
    out.reserve(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
        Assignment a;
        a.detection_index = i;
        std::optional<std::size_t> best;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            const double o = iou(dets[i].box(), gts[g].box);
            if (!best || o > a.overlap) {
                best = g;
                a.overlap = o;
            }
        }
        if (best && a.overlap > min_overlap) {
            a.annotation_index = best;
        }
        out.push_back(a);
    }
    return out;
}

}  // namespace adascale
