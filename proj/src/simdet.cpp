#include "adascale/simdet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>

#include "adascale/errors.hpp"
#include "adascale/random.hpp"

namespace adascale {

namespace {

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

double truncated_normal(std::mt19937_64& rng, double limit) {
    std::normal_distribution<double> n(0.0, 1.0);
    return std::clamp(n(rng), -limit, limit);
}

std::string snippet_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "snippet_%05d", index);
    return buf;
}

SceneObject make_object(std::mt19937_64& rng, const GeneratorConfig& cfg, double size_lo, double size_hi,
                        int first_frame) {
    std::uniform_int_distribution<int> cls(1, cfg.classes);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double w_img = cfg.native.width;
    const double h_img = cfg.native.height;

    SceneObject obj;
    obj.class_label = cls(rng);
    obj.first_frame = first_frame;
    double size = log_uniform(rng, size_lo, size_hi);
    const double aspect = log_uniform(rng, 0.6, 1.6);
    double cx = w_img * (0.15 + 0.7 * u01(rng));
    double cy = h_img * (0.15 + 0.7 * u01(rng));
    const double speed = cfg.velocity_cap * u01(rng);
    const double heading = 2.0 * std::numbers::pi * u01(rng);
    double vx = speed * std::cos(heading);
    double vy = speed * std::sin(heading);
    double growth = cfg.max_growth * (2.0 * u01(rng) - 1.0);

    for (int f = first_frame; f < cfg.frames; ++f) {
        obj.track.push_back({cx, cy, size * std::sqrt(aspect), size / std::sqrt(aspect)});
        cx += vx;
        cy += vy;
        // Reflect at the borders; the step length is unchanged.
        if (cx < 0.0) { cx = -cx; vx = -vx; }
        if (cx > w_img) { cx = 2.0 * w_img - cx; vx = -vx; }
        if (cy < 0.0) { cy = -cy; vy = -vy; }
        if (cy > h_img) { cy = 2.0 * h_img - cy; vy = -vy; }
        size *= std::exp(growth);
        if (size < cfg.min_object_size || size > cfg.max_object_size) {
            size = std::clamp(size, cfg.min_object_size, cfg.max_object_size);
            growth = -growth;
        }
    }
    return obj;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (snippets < 1) throw InvalidArgument("need at least one snippet");
    if (frames < 1) throw InvalidArgument("need at least one frame per snippet");
    if (classes < 1) throw InvalidArgument("need at least one class");
    if (native.width < 1 || native.height < 1) throw InvalidArgument("native size must be positive");
    if (max_objects < 0) throw InvalidArgument("max_objects must be non-negative");
    if (!(min_object_size > 0.0) || !(max_object_size > min_object_size)) {
        throw InvalidArgument("object size range must satisfy 0 < min < max");
    }
    if (!(size_split > min_object_size && size_split < max_object_size)) {
        throw InvalidArgument("size_split must lie inside the object size range");
    }
    if (!(velocity_cap >= 0.0) || !(max_growth >= 0.0)) {
        throw InvalidArgument("velocity cap and growth must be non-negative");
    }
    if (single_large_share < 0.0 || single_small_share < 0.0 || single_large_share + single_small_share > 1.0) {
        throw InvalidArgument("regime shares must be non-negative and sum to at most 1");
    }
}

std::vector<VideoSnippet> generate_corpus(const GeneratorConfig& config, std::uint64_t seed) {
    config.validate();
    std::vector<VideoSnippet> corpus;
    corpus.reserve(static_cast<std::size_t>(config.snippets));
    for (int s = 0; s < config.snippets; ++s) {
        std::mt19937_64 rng(hash_combine({seed, 0x636f72707573ULL, static_cast<std::uint64_t>(s)}));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        VideoSnippet snip;
        snip.id = snippet_name(s);
        snip.native = config.native;

        if (config.max_objects > 0) {
            const double regime = u01(rng);
            if (regime < config.single_large_share) {
                snip.objects.push_back(make_object(rng, config, config.size_split, config.max_object_size, 0));
            } else if (regime < config.single_large_share + config.single_small_share) {
                snip.objects.push_back(make_object(rng, config, config.min_object_size, config.size_split, 0));
            } else {
                std::uniform_int_distribution<int> count(std::min(2, config.max_objects), config.max_objects);
                const int n = count(rng);
                for (int k = 0; k < n; ++k) {
                    int first = 0;
                    if (k > 0 && config.frames > 2 && u01(rng) < 0.3) {
                        std::uniform_int_distribution<int> start(1, config.frames / 2);
                        first = start(rng);
                    }
                    snip.objects.push_back(
                        make_object(rng, config, config.min_object_size, config.max_object_size, first));
                }
            }
        }

        for (int f = 0; f < config.frames; ++f) {
            Frame frame;
            frame.index = f;
            for (const auto& obj : snip.objects) {
                if (!obj.visible_at(f)) continue;
                const auto& st = obj.track[static_cast<std::size_t>(f - obj.first_frame)];
                const BoundingBox full{st.center_x - st.width / 2, st.center_y - st.height / 2,
                                       st.center_x + st.width / 2, st.center_y + st.height / 2};
                const BoundingBox clipped = clip_box(full, config.native);
                if (clipped.degenerate()) continue;
                frame.annotations.push_back({clipped, obj.class_label});
            }
            snip.frames.push_back(std::move(frame));
        }
        corpus.push_back(std::move(snip));
    }
    return corpus;
}

void DetectorProfile::validate() const {
    if (!(sweet_lo > 0.0 && sweet_lo < sweet_hi)) throw InvalidArgument("sweet band must satisfy 0 < lo < hi");
    if (!(peak_confidence > 0.0 && peak_confidence <= 1.0)) throw InvalidArgument("peak confidence must lie in (0,1]");
    if (!(falloff >= 0.0 && falloff < peak_confidence)) throw InvalidArgument("falloff must lie in [0, peak)");
    if (small_decay < 0.0 || large_decay < 0.0 || confidence_noise < 0.0 || localization_noise < 0.0 || fp_rate < 0.0 ||
        part_rate < 0.0) {
        throw InvalidArgument("detector rates must be non-negative");
    }
    if (confusion_rate < 0.0 || confusion_rate > 1.0) throw InvalidArgument("confusion rate must lie in [0,1]");
    if (background_share < 0.0 || background_share > 1.0) throw InvalidArgument("background share must lie in [0,1]");
    for (double w : confusion_weights) {
        if (!(w >= 0.0)) throw InvalidArgument("confusion weights must be non-negative");
    }
    if (!(fp_min_confidence >= 0.0 && fp_min_confidence <= fp_max_confidence && fp_max_confidence <= 1.0) ||
        !(part_max_confidence >= fp_min_confidence && part_max_confidence <= 1.0)) {
        throw InvalidArgument("false-positive confidence range is invalid");
    }
    if (feature_grid < 1) throw InvalidArgument("feature grid must be positive");
    if (feature_footprint < 1 || feature_footprint > feature_grid) throw InvalidArgument("feature footprint must lie in [1, feature_grid]");
    if (feature_channels < 4) throw InvalidArgument("need at least one size channel plus the zoom, bias and resolution planes");
    if (!(feature_base_size > 0.0) || !(feature_mass > 0.0) || !(zoom_reference > 0.0) || !(zoom_cap > 0.0)) {
        throw InvalidArgument("feature scaling must be positive");
    }
    if (!(zoom_gain >= 0.0) || !(bias_level >= 0.0) || !(resolution_gain >= 0.0)) {
        throw InvalidArgument("feature plane gains must be non-negative");
    }
}

double DetectorProfile::band_center() const { return std::sqrt(sweet_lo * sweet_hi); }

double DetectorProfile::base_confidence(double apparent_size) const {
    if (!(apparent_size > 0.0)) return 0.0;
    const double half = 0.5 * std::log2(sweet_hi / sweet_lo);
    const double signed_d = std::log2(apparent_size / band_center());
    const double d = std::abs(signed_d);
    if (d <= half) {
        const double u = d / half;
        return peak_confidence - falloff * u * u;
    }
    const double decay = signed_d > 0.0 ? large_decay : small_decay;
    return (peak_confidence - falloff) * std::exp(-decay * (d - half));
}

DetectorProfile reseeded(const DetectorProfile& profile, std::uint64_t run_seed) {
    DetectorProfile p = profile;
    p.seed = hash_combine({profile.seed, run_seed});
    return p;
}

SyntheticDetector::SyntheticDetector(DetectorProfile profile, int num_classes)
    : profile_(std::move(profile)), classes_(num_classes) {
    profile_.validate();
    if (classes_ < 1) throw InvalidArgument("detector needs at least one class");
    if (!profile_.confusion_weights.empty() && static_cast<int>(profile_.confusion_weights.size()) != classes_) {
        throw InvalidArgument("confusion weights must have one entry per class");
    }
}

namespace {

const Frame& frame_at(const VideoSnippet& snippet, int frame_index) {
    if (frame_index < 0 || frame_index >= static_cast<int>(snippet.frames.size()) ||
        snippet.frames[static_cast<std::size_t>(frame_index)].index != frame_index) {
        throw InvalidArgument("snippet " + snippet.id + " has no frame " + std::to_string(frame_index));
    }
    return snippet.frames[static_cast<std::size_t>(frame_index)];
}

}  // namespace

DetectOutput SyntheticDetector::detect(const VideoSnippet& snippet, int frame_index, int at_scale) const {
    const Frame& frame = frame_at(snippet, frame_index);
    const auto& p = profile_;
    DetectOutput out;
    out.resize = compute_resize(snippet.native, at_scale);
    const double factor = out.resize.factor;
    const ImageSize img = out.resize.resized;
    const std::uint64_t base = hash_combine({p.seed, hash_string(snippet.id), static_cast<std::uint64_t>(frame_index),
                                             static_cast<std::uint64_t>(at_scale)});

    std::vector<double> weights = p.confusion_weights;
    if (weights.empty()) weights.assign(static_cast<std::size_t>(classes_), 1.0);

    auto scores_for = [&](int label, double conf) {
        std::vector<double> s(static_cast<std::size_t>(classes_) + 1, 0.0);
        s[static_cast<std::size_t>(label)] = conf;
        const double rest = 1.0 - conf;
        if (classes_ == 1) {
            s[0] = rest;
            return s;
        }
        double wsum = 0.0;
        for (int k = 1; k <= classes_; ++k) {
            if (k != label) wsum += weights[static_cast<std::size_t>(k - 1)];
        }
        const double bg = wsum > 0.0 ? p.background_share * rest : rest;
        s[0] = bg;
        for (int k = 1; k <= classes_; ++k) {
            if (k != label && wsum > 0.0) {
                s[static_cast<std::size_t>(k)] = (rest - bg) * weights[static_cast<std::size_t>(k - 1)] / wsum;
            }
        }
        return s;
    };
    auto pick_other_class = [&](std::mt19937_64& rng, int label) {
        std::vector<double> w(weights);
        w[static_cast<std::size_t>(label - 1)] = 0.0;
        if (std::all_of(w.begin(), w.end(), [](double v) { return v <= 0.0; })) return label;
        std::discrete_distribution<int> d(w.begin(), w.end());
        return d(rng) + 1;
    };

    std::vector<Detection> raw;
    auto emit = [&](const BoundingBox& box, int label, double conf) {
        const BoundingBox b = clip_box(box, img);
        if (b.degenerate()) return;
        Detection d = Detection::make(b, scores_for(label, conf));
        if (d.predicted_class() != 0) raw.push_back(std::move(d));
    };

    for (std::size_t j = 0; j < frame.annotations.size(); ++j) {
        const Annotation& gt = frame.annotations[j];
        if (gt.class_label < 1 || gt.class_label > classes_) {
            throw InvalidArgument("annotation class " + std::to_string(gt.class_label) + " exceeds detector classes");
        }
        std::mt19937_64 rng(hash_combine({base, 1, j}));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const BoundingBox box = rescale_box(gt.box, factor);
        const double apparent = std::sqrt(box.area());
        if (!(apparent > 0.0)) continue;

        const double base_conf = p.base_confidence(apparent);
        std::normal_distribution<double> noise(0.0, p.confidence_noise);
        const double conf = std::clamp(base_conf + noise(rng), 0.01, 0.99);
        int label = gt.class_label;
        if (classes_ > 1 && u01(rng) < p.confusion_rate * (1.0 - base_conf / p.peak_confidence)) {
            label = pick_other_class(rng, label);
        }

        // Per-edge jitter, std relative to the side length, truncated at 4 std.
        const double rel = p.localization_noise / apparent;
        const double sx = rel * box.width();
        const double sy = rel * box.height();
        BoundingBox jit{box.x_min + sx * truncated_normal(rng, 4.0), box.y_min + sy * truncated_normal(rng, 4.0),
                        box.x_max + sx * truncated_normal(rng, 4.0), box.y_max + sy * truncated_normal(rng, 4.0)};
        if (jit.x_max < jit.x_min) jit.x_min = jit.x_max = 0.5 * (jit.x_min + jit.x_max);
        if (jit.y_max < jit.y_min) jit.y_min = jit.y_max = 0.5 * (jit.y_min + jit.y_max);
        emit(jit, label, conf);

        // Oversized objects draw spurious detections on their parts.
        const double above = std::log2(apparent / p.sweet_hi);
        if (above > 0.0 && p.part_rate > 0.0) {
            std::poisson_distribution<int> parts(p.part_rate * above);
            const int n = parts(rng);
            std::uniform_real_distribution<double> frac(0.25, 0.5);
            std::uniform_real_distribution<double> pconf(p.fp_min_confidence, p.part_max_confidence);
            for (int k = 0; k < n; ++k) {
                const double pw = box.width() * frac(rng);
                const double ph = box.height() * frac(rng);
                const double x0 = box.x_min + (box.width() - pw) * u01(rng);
                const double y0 = box.y_min + (box.height() - ph) * u01(rng);
                emit({x0, y0, x0 + pw, y0 + ph}, gt.class_label, pconf(rng));
            }
        }
    }

    if (p.fp_rate > 0.0) {
        std::mt19937_64 rng(hash_combine({base, 2}));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_int_distribution<int> cls(1, classes_);
        std::poisson_distribution<int> count(p.fp_rate * static_cast<double>(img.pixel_count()) / 1e6);
        const int n = count(rng);
        for (int k = 0; k < n; ++k) {
            const double side = log_uniform(rng, 12.0, 64.0);
            const double aspect = log_uniform(rng, 0.6, 1.6);
            const double w = side * std::sqrt(aspect);
            const double h = side / std::sqrt(aspect);
            const double x0 = (img.width - w) * u01(rng);
            const double y0 = (img.height - h) * u01(rng);
            const double c = p.fp_min_confidence + (p.fp_max_confidence - p.fp_min_confidence) * std::pow(u01(rng), 3.0);
            emit({x0, y0, x0 + w, y0 + h}, cls(rng), c);
        }
    }

    out.detections = nms(raw, kNmsThreshold, kTopK);
    out.features = render_features(p, snippet, frame_index, out.resize);
    return out;
}

FeatureMap render_features(const DetectorProfile& profile, const VideoSnippet& snippet, int frame_index,
                           const ResizeResult& resize) {
    const Frame& frame = frame_at(snippet, frame_index);
    const int g = profile.feature_grid;
    const int size_channels = profile.feature_channels - 3;
    const int zoom = size_channels;
    const int bias = size_channels + 1;
    const int res = size_channels + 2;
    FeatureMap f = FeatureMap::zeros(profile.feature_channels, g, g);
    const double cell_w = static_cast<double>(resize.resized.width) / g;
    const double cell_h = static_cast<double>(resize.resized.height) / g;

    double zoom_cue = 0.0;
    for (const Annotation& gt : frame.annotations) {
        const BoundingBox box = rescale_box(gt.box, resize.factor);
        const double area = box.area();
        if (!(area > 0.0)) continue;
        const double side = std::sqrt(area);
        zoom_cue += std::min(profile.zoom_reference / side, profile.zoom_cap);
        const double pos = std::clamp(std::log2(side / profile.feature_base_size), 0.0,
                                      static_cast<double>(size_channels - 1));
        const int lo = static_cast<int>(std::floor(pos));
        const double frac = pos - lo;
        // Occupancy of the box, widened to at least footprint x footprint cells.
        const double fw = std::max(box.width(), profile.feature_footprint * cell_w);
        const double fh = std::max(box.height(), profile.feature_footprint * cell_h);
        const BoundingBox foot = clip_box({box.center_x() - fw / 2, box.center_y() - fh / 2,
                                           box.center_x() + fw / 2, box.center_y() + fh / 2},
                                          resize.resized);
        const int x0 = std::clamp(static_cast<int>(foot.x_min / cell_w), 0, g - 1);
        const int x1 = std::clamp(static_cast<int>(foot.x_max / cell_w), 0, g - 1);
        const int y0 = std::clamp(static_cast<int>(foot.y_min / cell_h), 0, g - 1);
        const int y1 = std::clamp(static_cast<int>(foot.y_max / cell_h), 0, g - 1);
        for (int y = y0; y <= y1; ++y) {
            const double oh = std::min((y + 1) * cell_h, foot.y_max) - std::max(y * cell_h, foot.y_min);
            if (oh <= 0.0) continue;
            for (int x = x0; x <= x1; ++x) {
                const double ow = std::min((x + 1) * cell_w, foot.x_max) - std::max(x * cell_w, foot.x_min);
                if (ow <= 0.0) continue;
                const double v = profile.feature_mass * ow * oh / (cell_w * cell_h);
                f.at(lo, y, x) += v * (1.0 - frac);
                if (frac > 0.0 && lo + 1 < size_channels) f.at(lo + 1, y, x) += v * frac;
            }
        }
    }
    for (int y = 0; y < g; ++y) {
        for (int x = 0; x < g; ++x) {
            f.at(zoom, y, x) = profile.zoom_gain * zoom_cue;
            f.at(bias, y, x) = profile.bias_level;
            f.at(res, y, x) = profile.resolution_gain / resize.factor;
        }
    }
    return f;
}

double workload(int at_scale, const ImageSize& native) {
    return static_cast<double>(compute_resize(native, at_scale).resized.pixel_count());
}

int max_class_label(std::span<const VideoSnippet> corpus) {
    int k = 1;
    for (const auto& s : corpus) {
        for (const auto& f : s.frames) {
            for (const auto& a : f.annotations) k = std::max(k, a.class_label);
        }
    }
    return k;
}

}  // namespace adascale
