#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "adascale/detcore.hpp"
#include "adascale/geometry.hpp"
#include "adascale/regressor.hpp"

namespace adascale {

struct ObjectState {
    double center_x = 0.0;
    double center_y = 0.0;
    double width = 0.0;
    double height = 0.0;
};

/// Ground-truth object with a per-frame trajectory in native pixels.
struct SceneObject {
    int class_label = 1;
    int first_frame = 0;
    std::vector<ObjectState> track;  // track[k] is the state at frame first_frame + k

    bool visible_at(int frame) const {
        return frame >= first_frame && frame < first_frame + static_cast<int>(track.size());
    }
};

struct Frame {
    int index = 0;
    std::vector<Annotation> annotations;
};

struct VideoSnippet {
    std::string id;
    ImageSize native;
    std::vector<Frame> frames;
    std::vector<SceneObject> objects;  // empty when loaded from a corpus file
};

struct GeneratorConfig {
    int snippets = 100;
    int frames = 20;
    int classes = 3;
    ImageSize native{1280, 720};
    int max_objects = 3;            // mixed snippets hold 2..max_objects; 0 disables objects
    double min_object_size = 24.0;  // native px, geometric mean of the sides
    double max_object_size = 640.0;
    double size_split = 110.0;      // boundary between "small" and "large" regimes
    double velocity_cap = 6.0;      // native px per frame
    double max_growth = 0.03;       // |d log(size)| per frame
    double single_large_share = 0.45;
    double single_small_share = 0.35;

    void validate() const;
};

/// Deterministic given the seed. Throws InvalidArgument on an invalid config.
std::vector<VideoSnippet> generate_corpus(const GeneratorConfig& config, std::uint64_t seed);

/// Parameters of the synthetic detector's scale response.
struct DetectorProfile {
    // Apparent-size band (resized px, geometric-mean side) where confidence peaks.
    double sweet_lo = 48.0;
    double sweet_hi = 160.0;
    double peak_confidence = 0.95;
    double falloff = 0.2;            // confidence lost at the band edges
    double small_decay = 0.8;        // confidence decay per octave below the band
    double large_decay = 0.3;        // confidence decay per octave above the band
    double confidence_noise = 0.01;
    double localization_noise = 2.0;  // jitter std relative to box side = coefficient / apparent size
    double confusion_rate = 0.3;      // class swap probability when fully outside the band
    double background_share = 0.3;    // share of non-predicted mass given to background
    std::vector<double> confusion_weights;  // per class, empty = uniform
    double fp_rate = 3.0;            // spurious boxes per megapixel of resized image
    double fp_min_confidence = 0.3;
    double fp_max_confidence = 0.6;
    double part_rate = 1.5;          // spurious part boxes per octave above sweet_hi
    double part_max_confidence = 0.75;
    // Feature planes: size-octave occupancy channels, then zoom cue, bias and resolution planes.
    int feature_grid = 16;
    int feature_channels = 8;
    double feature_base_size = 8.0;  // apparent size at the first octave channel
    double feature_mass = 20.0;      // occupancy activation of a fully covered cell
    int feature_footprint = 3;       // minimum occupancy extent per object, in grid cells
    double zoom_gain = 20.0;         // per-object zoom cue min(zoom_reference / size, zoom_cap)
    double zoom_reference = 32.0;
    double zoom_cap = 8.0;
    double bias_level = 20.0;
    double resolution_gain = 8.0;    // resolution plane = gain / resize factor
    std::uint64_t seed = 0;

    void validate() const;
    double band_center() const;
    /// Noise-free confidence for an object of the given apparent size.
    double base_confidence(double apparent_size) const;
};

/// Profile whose detector randomness is decorrelated for `run_seed`.
DetectorProfile reseeded(const DetectorProfile& profile, std::uint64_t run_seed);

struct DetectOutput {
    std::vector<Detection> detections;  // post-NMS, resized-image coordinates
    FeatureMap features;
    ResizeResult resize;
};

/// Pluggable detector. Implementations must be pure in (snippet, frame, scale).
class Detector {
public:
    virtual ~Detector() = default;
    virtual DetectOutput detect(const VideoSnippet& snippet, int frame_index, int at_scale) const = 0;
    virtual int num_classes() const = 0;
    virtual int feature_channels() const = 0;
};

class SyntheticDetector final : public Detector {
public:
    SyntheticDetector(DetectorProfile profile, int num_classes);

    DetectOutput detect(const VideoSnippet& snippet, int frame_index, int at_scale) const override;
    int num_classes() const override { return classes_; }
    int feature_channels() const override { return profile_.feature_channels; }
    const DetectorProfile& profile() const { return profile_; }

private:
    DetectorProfile profile_;
    int classes_;
};

/// Ground-truth feature grid for a frame seen at the given resize.
FeatureMap render_features(const DetectorProfile& profile, const VideoSnippet& snippet, int frame_index,
                           const ResizeResult& resize);

/// Resized pixel count, the deterministic cost proxy.
double workload(int at_scale, const ImageSize& native);

/// Largest class label in the corpus (at least 1).
int max_class_label(std::span<const VideoSnippet> corpus);

}  // namespace adascale
