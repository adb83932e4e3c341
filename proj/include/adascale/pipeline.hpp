#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adascale/eval.hpp"
#include "adascale/losses.hpp"
#include "adascale/regressor.hpp"
#include "adascale/scalecodec.hpp"
#include "adascale/simdet.hpp"

namespace adascale {

/// 80/20 split keyed on a hash of the snippet id.
bool in_training_split(const std::string& snippet_id);

struct CorpusSplit {
    std::vector<VideoSnippet> train;
    std::vector<VideoSnippet> validation;
};

CorpusSplit split_corpus(std::span<const VideoSnippet> corpus);

struct LabeledFrame {
    std::string snippet_id;
    int frame_index = 0;
    ScaleSet scales = regression_scales();  // label scale set
    int input_scale = 0;    // scale the features were recorded at
    int optimal_scale = 0;  // arg-min of the foreground-matched metric
    bool degenerate = false;
    ScaleTarget target;
    FeatureMap features;
    std::vector<std::pair<int, double>> metric;  // scales with a defined metric, descending
};

/// Detects every frame at each scale of `label_scales`, maps boxes back to native
/// coordinates, scores the scales, and records features at an input scale drawn
/// uniformly from `label_scales`. Throws InvalidArgument on an empty corpus.
std::vector<LabeledFrame> generate_scale_labels(std::span<const VideoSnippet> corpus, const Detector& detector,
                                                const ScaleSet& label_scales, std::uint64_t seed,
                                                const LossConfig& loss = {});

/// Scale metric of one frame over `scales`, detections in native coordinates.
ScaleMetricReport frame_scale_metric(const VideoSnippet& snippet, int frame_index, const Detector& detector,
                                     const ScaleSet& scales, const LossConfig& loss = {});

/// True when at least two frames of the corpus have different optimal scales.
bool has_scale_diversity(std::span<const VideoSnippet> corpus, const Detector& detector, const ScaleSet& scales,
                         const LossConfig& loss = {});

std::vector<TrainingSample> to_training_samples(std::span<const LabeledFrame> labels);

enum class PolicyKind { Fixed, Random, AdaScale, MultiScale };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Fixed;
    int fixed_scale = 600;
    ScaleSet scales = regression_scales();
    std::optional<RegressorModel> model;  // AdaScale only; its scale set drives the codec

    static PolicyConfig fixed(int scale, ScaleSet scales = regression_scales());
    static PolicyConfig random(ScaleSet scales = regression_scales());
    static PolicyConfig adascale(RegressorModel model);
    static PolicyConfig multiscale(ScaleSet scales = regression_scales());

    /// "fixed:600", "random", "adascale", "multiscale".
    std::string name() const;
    void validate() const;
};

/// Parses a policy token; `model` is attached for "adascale".
PolicyConfig parse_policy(const std::string& token, const ScaleSet& scales,
                          const std::optional<RegressorModel>& model);

struct FrameLog {
    std::string snippet_id;
    int frame_index = 0;
    int scale = 0;       // scale the frame was processed at
    int base_size = 0;   // shortest side of the resized frame
    double regressed = 0.0;
    int next_scale = 0;  // decoded scale handed to the following frame
    FeatureMap features;
};

struct PolicyRun {
    EvalReport report;
    std::vector<FrameLog> log;  // AdaScale with record_features only
};

struct RunOptions {
    bool record_features = false;
    int histogram_bins = 10;
};

/// Runs one policy over every frame of the corpus and evaluates in native coordinates.
/// Throws InvalidArgument on an empty corpus or an AdaScale policy without a model.
PolicyRun run_policy(std::span<const VideoSnippet> corpus, const Detector& detector, const PolicyConfig& policy,
                     std::uint64_t seed, const RunOptions& options = {});

struct ComparisonRow {
    std::string policy;
    std::vector<double> maps;       // one per seed
    std::vector<double> workloads;  // one per seed
    double map_mean = 0.0;
    double map_std = 0.0;
    double workload_mean = 0.0;
    double workload_std = 0.0;
    double tp_mean = 0.0;
    double fp_mean = 0.0;
    double tp_normalized = 1.0;  // relative to the baseline row
    double fp_normalized = 1.0;
    Histogram histogram;        // summed over seeds
    EvalReport first_report;    // report of the first seed, for PR curves
};

/// Runs each policy under each seed with a detector reseeded per seed. The first
/// policy is the normalization baseline. Throws InvalidArgument for fewer than two
/// policies or no seeds.
std::vector<ComparisonRow> compare_policies(std::span<const VideoSnippet> corpus, const DetectorProfile& profile,
                                            std::span<const PolicyConfig> policies,
                                            std::span<const std::uint64_t> seeds, const RunOptions& options = {});

}  // namespace adascale
