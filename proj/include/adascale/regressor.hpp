#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adascale/scalecodec.hpp"

namespace adascale {

/// Dense C x H x W tensor, row-major with channel outermost.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    static FeatureMap zeros(int channels, int height, int width);

    double at(int c, int y, int x) const { return data[index(c, y, x)]; }
    double& at(int c, int y, int x) { return data[index(c, y, x)]; }
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }
    /// Throws InvalidArgument on bad shape or non-finite entries.
    void validate() const;

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

enum class Pooling { Average, Max };

struct BranchSpec {
    int kernel = 1;  // odd; padding kernel/2, stride 1
    int width = 16;  // output channels

    friend bool operator==(const BranchSpec&, const BranchSpec&) = default;
};

struct RegressorConfig {
    int in_channels = 8;
    std::vector<BranchSpec> branches{{1, 16}, {3, 16}};
    Pooling pooling = Pooling::Average;

    void validate() const;
    friend bool operator==(const RegressorConfig&, const RegressorConfig&) = default;
};

/// Weights of one convolutional branch; layout [out][in][ky][kx].
struct ConvBranch {
    int kernel = 1;
    int in_channels = 0;
    int out_channels = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double& w(int o, int c, int ky, int kx) {
        return weights[((static_cast<std::size_t>(o) * in_channels + c) * kernel + ky) * kernel + kx];
    }
    double w(int o, int c, int ky, int kx) const {
        return weights[((static_cast<std::size_t>(o) * in_channels + c) * kernel + ky) * kernel + kx];
    }

    friend bool operator==(const ConvBranch&, const ConvBranch&) = default;
};

/// Trainable parameters. Also used as the gradient container.
struct RegressorParams {
    std::vector<ConvBranch> branches;
    std::vector<double> fc_weights;  // one per pooled channel, branches concatenated
    double fc_bias = 0.0;

    std::size_t size() const;
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
    /// this += scale * other; shapes must match.
    void add_scaled(const RegressorParams& other, double scale);
    RegressorParams zeros_like() const;

    friend bool operator==(const RegressorParams&, const RegressorParams&) = default;
};

/// Two-branch scale regressor: parallel rectified convolutions, global pooling,
/// and a linear head producing one unbounded scalar.
struct RegressorModel {
    RegressorConfig config;
    RegressorParams params;
    ScaleSet scales = regression_scales();  // codec range the targets were encoded with

    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from a seeded engine.
    static RegressorModel initialize(const RegressorConfig& config, std::uint64_t seed,
                                     ScaleSet scales = regression_scales());
    /// All-zero parameters.
    static RegressorModel zeros(const RegressorConfig& config, ScaleSet scales = regression_scales());

    void validate() const;

    friend bool operator==(const RegressorModel&, const RegressorModel&) = default;
};

double forward(const RegressorModel& model, const FeatureMap& x);

struct BackwardResult {
    double output = 0.0;
    double loss = 0.0;  // (output - target)^2
    RegressorParams gradients;
};

BackwardResult backward(const RegressorModel& model, const FeatureMap& x, ScaleTarget target);

struct TrainerConfig {
    double learning_rate = 1e-4;
    double decay = 0.1;
    double decay_epoch = 1.3;
    int epochs = 2;
    int batch_size = 1;
    std::uint64_t seed = 0;

    void validate() const;
    /// Step schedule: learning_rate before decay_epoch, learning_rate * decay after.
    double rate_at(double epoch_progress) const;
};

struct TrainingSample {
    FeatureMap features;
    ScaleTarget target;
};

struct TrainResult {
    RegressorModel model;
    std::vector<double> loss_trace;  // mean mini-batch loss per SGD step
};

/// Plain mini-batch SGD on the mean squared error. Throws InvalidArgument on an
/// empty dataset.
TrainResult train(RegressorModel model, std::span<const TrainingSample> data,
                  const TrainerConfig& trainer);

double mean_squared_error(const RegressorModel& model, std::span<const TrainingSample> data);

}  // namespace adascale
