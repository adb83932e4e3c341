#include "adascale/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "adascale/errors.hpp"
#include "adascale/random.hpp"

namespace adascale {

bool in_training_split(const std::string& snippet_id) {
    return mix64(hash_string(snippet_id)) % 100 < 80;
}

CorpusSplit split_corpus(std::span<const VideoSnippet> corpus) {
    CorpusSplit split;
    for (const auto& s : corpus) {
        (in_training_split(s.id) ? split.train : split.validation).push_back(s);
    }
    return split;
}

namespace {

std::vector<Detection> to_native(const std::vector<Detection>& dets, double factor) {
    std::vector<Detection> out;
    out.reserve(dets.size());
    for (const auto& d : dets) {
        out.push_back(d.with_box(rescale_box(d.box(), 1.0 / factor)));
    }
    return out;
}

// Uniform index in [0, n) from a per-frame hash, independent of processing order.
std::size_t frame_draw(std::uint64_t seed, std::uint64_t salt, const std::string& id, int frame, std::size_t n) {
    std::mt19937_64 rng(hash_combine({seed, salt, hash_string(id), static_cast<std::uint64_t>(frame)}));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    return pick(rng);
}

constexpr std::uint64_t kInputScaleSalt = 0x696e707574ULL;
constexpr std::uint64_t kRandomPolicySalt = 0x72616e646f6dULL;

struct FrameScan {
    ScaleMetricReport report;
    std::map<int, FeatureMap> features;
};

FrameScan scan_frame(const VideoSnippet& snippet, int frame_index, const Detector& detector, const ScaleSet& scales,
                     const LossConfig& loss) {
    const auto& gts = snippet.frames.at(static_cast<std::size_t>(frame_index)).annotations;
    FrameScan scan;
    std::map<int, ScaleDetections> per_scale;
    for (int m : scales.scales()) {
        DetectOutput d = detector.detect(snippet, frame_index, m);
        ScaleDetections sd;
        sd.detections = to_native(d.detections, d.resize.factor);
        sd.assignments = assign_foreground(sd.detections, gts);
        per_scale.emplace(m, std::move(sd));
        scan.features.emplace(m, std::move(d.features));
    }
    scan.report = compute_scale_metric(per_scale, gts, loss);
    return scan;
}

}  // namespace

ScaleMetricReport frame_scale_metric(const VideoSnippet& snippet, int frame_index, const Detector& detector,
                                     const ScaleSet& scales, const LossConfig& loss) {
    return scan_frame(snippet, frame_index, detector, scales, loss).report;
}

bool has_scale_diversity(std::span<const VideoSnippet> corpus, const Detector& detector, const ScaleSet& scales,
                         const LossConfig& loss) {
    std::optional<int> first;
    for (const auto& snippet : corpus) {
        for (const auto& frame : snippet.frames) {
            const int m = frame_scale_metric(snippet, frame.index, detector, scales, loss).optimal_scale;
            if (!first) {
                first = m;
            } else if (*first != m) {
                return true;
            }
        }
    }
    return false;
}

std::vector<LabeledFrame> generate_scale_labels(std::span<const VideoSnippet> corpus, const Detector& detector,
                                                const ScaleSet& label_scales, std::uint64_t seed,
                                                const LossConfig& loss) {
    if (corpus.empty()) {
        throw InvalidArgument("cannot label an empty corpus");
    }
    std::vector<LabeledFrame> labels;
    for (const auto& snippet : corpus) {
        for (const auto& frame : snippet.frames) {
            FrameScan scan = scan_frame(snippet, frame.index, detector, label_scales, loss);
            LabeledFrame lf;
            lf.scales = label_scales;
            lf.snippet_id = snippet.id;
            lf.frame_index = frame.index;
            lf.input_scale = label_scales.scales()[frame_draw(seed, kInputScaleSalt, snippet.id, frame.index,
                                                              label_scales.size())];
            lf.optimal_scale = scan.report.optimal_scale;
            lf.degenerate = scan.report.degenerate;
            lf.target = encode_scale_target(lf.input_scale, lf.optimal_scale, label_scales);
            lf.features = std::move(scan.features.at(lf.input_scale));
            for (const auto& e : scan.report.entries) {
                if (e.metric) lf.metric.emplace_back(e.scale, *e.metric);
            }
            labels.push_back(std::move(lf));
        }
    }
    return labels;
}

std::vector<TrainingSample> to_training_samples(std::span<const LabeledFrame> labels) {
    std::vector<TrainingSample> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back({l.features, l.target});
    return out;
}

PolicyConfig PolicyConfig::fixed(int scale, ScaleSet scales) {
    PolicyConfig p;
    p.kind = PolicyKind::Fixed;
    p.fixed_scale = scale;
    p.scales = std::move(scales);
    return p;
}

PolicyConfig PolicyConfig::random(ScaleSet scales) {
    PolicyConfig p;
    p.kind = PolicyKind::Random;
    p.scales = std::move(scales);
    return p;
}

PolicyConfig PolicyConfig::adascale(RegressorModel model) {
    PolicyConfig p;
    p.kind = PolicyKind::AdaScale;
    p.scales = model.scales;
    p.model = std::move(model);
    return p;
}

PolicyConfig PolicyConfig::multiscale(ScaleSet scales) {
    PolicyConfig p;
    p.kind = PolicyKind::MultiScale;
    p.scales = std::move(scales);
    return p;
}

std::string PolicyConfig::name() const {
    switch (kind) {
        case PolicyKind::Fixed: return "fixed:" + std::to_string(fixed_scale);
        case PolicyKind::Random: return "random";
        case PolicyKind::AdaScale: return "adascale";
        case PolicyKind::MultiScale: return "multiscale";
    }
    return "unknown";
}

void PolicyConfig::validate() const {
    if (scales.size() == 0) throw InvalidArgument("policy scale set is empty");
    switch (kind) {
        case PolicyKind::Fixed:
            if (fixed_scale < scales.min() || fixed_scale > scales.max()) {
                throw InvalidArgument("fixed scale " + std::to_string(fixed_scale) + " outside [" +
                                      std::to_string(scales.min()) + ", " + std::to_string(scales.max()) + "]");
            }
            break;
        case PolicyKind::AdaScale:
            if (!model) throw InvalidArgument("adascale policy needs a trained regressor");
            model->validate();
            if (scales.size() < 2) throw InvalidArgument("adascale needs at least two scales");
            break;
        default:
            break;
    }
}

PolicyConfig parse_policy(const std::string& token, const ScaleSet& scales,
                          const std::optional<RegressorModel>& model) {
    if (token.rfind("fixed:", 0) == 0) {
        const std::string v = token.substr(6);
        std::size_t used = 0;
        int m = 0;
        try {
            m = std::stoi(v, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("bad fixed scale in '" + token + "'");
        }
        if (used != v.size()) throw InvalidArgument("bad fixed scale in '" + token + "'");
        // Fixed scales only need to lie inside the set's range.
        return PolicyConfig::fixed(m, scales);
    }
    if (token == "random") return PolicyConfig::random(scales);
    if (token == "multiscale") return PolicyConfig::multiscale(scales);
    if (token == "adascale") {
        if (!model) throw InvalidArgument("policy 'adascale' needs --model");
        return PolicyConfig::adascale(*model);
    }
    throw InvalidArgument("unknown policy '" + token + "'");
}

PolicyRun run_policy(std::span<const VideoSnippet> corpus, const Detector& detector, const PolicyConfig& policy,
                     std::uint64_t seed, const RunOptions& options) {
    if (corpus.empty()) throw InvalidArgument("cannot run a policy on an empty corpus");
    policy.validate();
    if (policy.kind == PolicyKind::AdaScale && policy.model->config.in_channels != detector.feature_channels()) {
        throw InvalidArgument("regressor expects " + std::to_string(policy.model->config.in_channels) +
                              " feature channels, detector emits " + std::to_string(detector.feature_channels()));
    }

    PolicyRun run;
    Evaluator evaluator(detector.num_classes());
    double total_work = 0.0;
    std::vector<ScaleTraceEntry> trace;
    const auto& scales = policy.scales;

    for (const auto& snippet : corpus) {
        int next_scale = scales.max();  // AdaScale starts every snippet at the largest scale
        for (const auto& frame : snippet.frames) {
            std::vector<Detection> native;
            int scale = 0;
            switch (policy.kind) {
                case PolicyKind::Fixed:
                case PolicyKind::Random: {
                    scale = policy.kind == PolicyKind::Fixed
                                ? policy.fixed_scale
                                : scales.scales()[frame_draw(seed, kRandomPolicySalt, snippet.id, frame.index,
                                                             scales.size())];
                    DetectOutput d = detector.detect(snippet, frame.index, scale);
                    native = to_native(d.detections, d.resize.factor);
                    total_work += workload(scale, snippet.native);
                    break;
                }
                case PolicyKind::AdaScale: {
                    scale = next_scale;
                    DetectOutput d = detector.detect(snippet, frame.index, scale);
                    native = to_native(d.detections, d.resize.factor);
                    total_work += workload(scale, snippet.native);
                    const int base_size = d.resize.resized.shortest_side();
                    const double t = forward(*policy.model, d.features);
                    next_scale = decode_scale(t, base_size, scales);
                    if (options.record_features) {
                        run.log.push_back({snippet.id, frame.index, scale, base_size, t, next_scale,
                                           std::move(d.features)});
                    }
                    break;
                }
                case PolicyKind::MultiScale: {
                    std::vector<Detection> merged;
                    for (int m : scales.scales()) {
                        DetectOutput d = detector.detect(snippet, frame.index, m);
                        auto part = to_native(d.detections, d.resize.factor);
                        merged.insert(merged.end(), part.begin(), part.end());
                        total_work += workload(m, snippet.native);
                    }
                    native = nms(merged, kNmsThreshold, kTopK);
                    scale = scales.max();
                    break;
                }
            }
            evaluator.add_frame(native, frame.annotations);
            trace.push_back({snippet.id, frame.index, scale});
        }
    }

    run.report = evaluator.finish();
    run.report.policy = policy.name();
    run.report.workload = total_work;
    std::vector<int> trace_scales;
    trace_scales.reserve(trace.size());
    for (const auto& t : trace) trace_scales.push_back(t.scale);
    const double lo = scales.size() > 1 ? scales.min() : scales.min() - 0.5;
    const double hi = scales.size() > 1 ? scales.max() : scales.max() + 0.5;
    run.report.histogram = make_histogram(trace_scales, lo, hi, options.histogram_bins);
    run.report.scale_trace = std::move(trace);
    return run;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::vector<ComparisonRow> compare_policies(std::span<const VideoSnippet> corpus, const DetectorProfile& profile,
                                            std::span<const PolicyConfig> policies,
                                            std::span<const std::uint64_t> seeds, const RunOptions& options) {
    if (policies.size() < 2) throw InvalidArgument("comparison needs at least two policies");
    if (seeds.empty()) throw InvalidArgument("comparison needs at least one seed");
    if (corpus.empty()) throw InvalidArgument("cannot compare on an empty corpus");
    for (const auto& p : policies) p.validate();

    const int classes = max_class_label(corpus);
    std::vector<ComparisonRow> rows(policies.size());
    std::vector<std::vector<double>> tps(policies.size());
    std::vector<std::vector<double>> fps(policies.size());
    for (std::size_t si = 0; si < seeds.size(); ++si) {
        const SyntheticDetector detector(reseeded(profile, seeds[si]), classes);
        for (std::size_t pi = 0; pi < policies.size(); ++pi) {
            PolicyRun run = run_policy(corpus, detector, policies[pi], seeds[si], options);
            auto& row = rows[pi];
            row.policy = policies[pi].name();
            row.maps.push_back(run.report.map);
            row.workloads.push_back(run.report.workload);
            tps[pi].push_back(static_cast<double>(run.report.counts.tp));
            fps[pi].push_back(static_cast<double>(run.report.counts.fp));
            if (si == 0) {
                row.histogram = run.report.histogram;
                row.first_report = std::move(run.report);
            } else {
                for (std::size_t b = 0; b < row.histogram.counts.size(); ++b) {
                    row.histogram.counts[b] += run.report.histogram.counts[b];
                }
            }
        }
    }
    for (std::size_t pi = 0; pi < rows.size(); ++pi) {
        auto& row = rows[pi];
        std::tie(row.map_mean, row.map_std) = mean_std(row.maps);
        std::tie(row.workload_mean, row.workload_std) = mean_std(row.workloads);
        row.tp_mean = mean_std(tps[pi]).first;
        row.fp_mean = mean_std(fps[pi]).first;
    }
    const double base_tp = rows.front().tp_mean;
    const double base_fp = rows.front().fp_mean;
    for (auto& row : rows) {
        row.tp_normalized = base_tp > 0.0 ? row.tp_mean / base_tp : 0.0;
        row.fp_normalized = base_fp > 0.0 ? row.fp_mean / base_fp : 0.0;
    }
    return rows;
}

}  // namespace adascale
