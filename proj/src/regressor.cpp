#include "adascale/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "adascale/errors.hpp"

namespace adascale {

FeatureMap FeatureMap::zeros(int channels, int height, int width) {
    FeatureMap f;
    f.channels = channels;
    f.height = height;
    f.width = width;
    f.data.assign(static_cast<std::size_t>(channels) * height * width, 0.0);
    return f;
}

void FeatureMap::validate() const {
    if (channels < 1 || height < 1 || width < 1) {
        throw InvalidArgument("feature map dimensions must be positive");
    }
    if (data.size() != static_cast<std::size_t>(channels) * height * width) {
        throw InvalidArgument("feature map data does not match its shape");
    }
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("feature map has non-finite entries");
        }
    }
}

void RegressorConfig::validate() const {
    if (in_channels < 1) {
        throw InvalidArgument("regressor needs at least one input channel");
    }
    if (branches.empty()) {
        throw InvalidArgument("regressor needs at least one branch");
    }
    for (const auto& b : branches) {
        if (b.kernel < 1 || b.kernel % 2 == 0) {
            throw InvalidArgument("branch kernel must be odd and positive, got " + std::to_string(b.kernel));
        }
        if (b.width < 1) {
            throw InvalidArgument("branch width must be positive");
        }
    }
}

std::size_t RegressorParams::size() const {
    std::size_t n = fc_weights.size() + 1;
    for (const auto& b : branches) {
        n += b.weights.size() + b.bias.size();
    }
    return n;
}

std::vector<double> RegressorParams::flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (const auto& b : branches) {
        out.insert(out.end(), b.weights.begin(), b.weights.end());
        out.insert(out.end(), b.bias.begin(), b.bias.end());
    }
    out.insert(out.end(), fc_weights.begin(), fc_weights.end());
    out.push_back(fc_bias);
    return out;
}

void RegressorParams::assign(std::span<const double> flat) {
    if (flat.size() != size()) {
        throw InvalidArgument("flat parameter vector has the wrong length");
    }
    auto it = flat.begin();
    for (auto& b : branches) {
        std::copy_n(it, b.weights.size(), b.weights.begin());
        it += static_cast<std::ptrdiff_t>(b.weights.size());
        std::copy_n(it, b.bias.size(), b.bias.begin());
        it += static_cast<std::ptrdiff_t>(b.bias.size());
    }
    std::copy_n(it, fc_weights.size(), fc_weights.begin());
    it += static_cast<std::ptrdiff_t>(fc_weights.size());
    fc_bias = *it;
}

void RegressorParams::add_scaled(const RegressorParams& other, double scale) {
    if (other.branches.size() != branches.size() || other.fc_weights.size() != fc_weights.size()) {
        throw InvalidArgument("parameter shapes differ");
    }
    for (std::size_t i = 0; i < branches.size(); ++i) {
        auto& dst = branches[i];
        const auto& src = other.branches[i];
        if (src.weights.size() != dst.weights.size() || src.bias.size() != dst.bias.size()) {
            throw InvalidArgument("parameter shapes differ");
        }
        for (std::size_t k = 0; k < dst.weights.size(); ++k) dst.weights[k] += scale * src.weights[k];
        for (std::size_t k = 0; k < dst.bias.size(); ++k) dst.bias[k] += scale * src.bias[k];
    }
    for (std::size_t k = 0; k < fc_weights.size(); ++k) fc_weights[k] += scale * other.fc_weights[k];
    fc_bias += scale * other.fc_bias;
}

RegressorParams RegressorParams::zeros_like() const {
    RegressorParams z = *this;
    for (auto& b : z.branches) {
        std::fill(b.weights.begin(), b.weights.end(), 0.0);
        std::fill(b.bias.begin(), b.bias.end(), 0.0);
    }
    std::fill(z.fc_weights.begin(), z.fc_weights.end(), 0.0);
    z.fc_bias = 0.0;
    return z;
}

RegressorModel RegressorModel::zeros(const RegressorConfig& config, ScaleSet scales) {
    config.validate();
    RegressorModel m;
    m.config = config;
    m.scales = std::move(scales);
    int pooled = 0;
    for (const auto& spec : config.branches) {
        ConvBranch b;
        b.kernel = spec.kernel;
        b.in_channels = config.in_channels;
        b.out_channels = spec.width;
        b.weights.assign(static_cast<std::size_t>(spec.width) * config.in_channels * spec.kernel * spec.kernel, 0.0);
        b.bias.assign(static_cast<std::size_t>(spec.width), 0.0);
        m.params.branches.push_back(std::move(b));
        pooled += spec.width;
    }
    m.params.fc_weights.assign(static_cast<std::size_t>(pooled), 0.0);
    return m;
}

RegressorModel RegressorModel::initialize(const RegressorConfig& config, std::uint64_t seed, ScaleSet scales) {
    RegressorModel m = zeros(config, std::move(scales));
    std::mt19937_64 rng(seed);
    auto fill = [&](std::vector<double>& v, double fan_in) {
        const double r = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> dist(-r, r);
        for (double& x : v) x = dist(rng);
    };
    for (auto& b : m.params.branches) {
        const double fan_in = static_cast<double>(b.in_channels) * b.kernel * b.kernel;
        fill(b.weights, fan_in);
        fill(b.bias, fan_in);
    }
    const auto fan_fc = static_cast<double>(m.params.fc_weights.size());
    fill(m.params.fc_weights, fan_fc);
    std::vector<double> bias(1);
    fill(bias, fan_fc);
    m.params.fc_bias = bias[0];
    return m;
}

void RegressorModel::validate() const {
    config.validate();
    if (params.branches.size() != config.branches.size()) {
        throw InvalidArgument("model has the wrong number of branches");
    }
    std::size_t pooled = 0;
    for (std::size_t i = 0; i < params.branches.size(); ++i) {
        const auto& b = params.branches[i];
        const auto& spec = config.branches[i];
        if (b.kernel != spec.kernel || b.out_channels != spec.width || b.in_channels != config.in_channels ||
            b.weights.size() != static_cast<std::size_t>(spec.width) * config.in_channels * spec.kernel * spec.kernel ||
            b.bias.size() != static_cast<std::size_t>(spec.width)) {
            throw InvalidArgument("branch " + std::to_string(i) + " shape does not match the configuration");
        }
        pooled += static_cast<std::size_t>(spec.width);
    }
    if (params.fc_weights.size() != pooled) {
        throw InvalidArgument("fully-connected layer does not match the pooled width");
    }
    for (double v : params.flatten()) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("model has non-finite parameters");
        }
    }
}

namespace {

// Per-branch pre-activations, layout [out][y][x].
struct ForwardCache {
    std::vector<std::vector<double>> pre;
    std::vector<double> pooled;
    std::vector<std::size_t> argmax;  // per pooled channel, max pooling only
    double output = 0.0;
};

void check_input(const RegressorModel& model, const FeatureMap& x) {
    x.validate();
    if (x.channels != model.config.in_channels) {
        throw InvalidArgument("feature map has " + std::to_string(x.channels) + " channels, model expects " +
                              std::to_string(model.config.in_channels));
    }
}

void convolve(const ConvBranch& b, const FeatureMap& x, std::vector<double>& out) {
    const int h = x.height;
    const int w = x.width;
    const int pad = b.kernel / 2;
    out.assign(static_cast<std::size_t>(b.out_channels) * h * w, 0.0);
    for (int o = 0; o < b.out_channels; ++o) {
        double* dst = out.data() + static_cast<std::size_t>(o) * h * w;
        std::fill(dst, dst + static_cast<std::ptrdiff_t>(h) * w, b.bias[static_cast<std::size_t>(o)]);
        for (int c = 0; c < b.in_channels; ++c) {
            for (int ky = 0; ky < b.kernel; ++ky) {
                for (int kx = 0; kx < b.kernel; ++kx) {
                    const double wt = b.w(o, c, ky, kx);
                    if (wt == 0.0) continue;
                    const int dy = ky - pad;
                    const int dx = kx - pad;
                    const int y0 = std::max(0, -dy);
                    const int y1 = std::min(h, h - dy);
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    for (int y = y0; y < y1; ++y) {
                        const double* src = &x.data[x.index(c, y + dy, 0)];
                        double* row = dst + static_cast<std::ptrdiff_t>(y) * w;
                        for (int xx = x0; xx < x1; ++xx) {
                            row[xx] += wt * src[xx + dx];
                        }
                    }
                }
            }
        }
    }
}

ForwardCache run_forward(const RegressorModel& model, const FeatureMap& x) {
    ForwardCache cache;
    const std::size_t hw = static_cast<std::size_t>(x.height) * x.width;
    const bool use_max = model.config.pooling == Pooling::Max;
    cache.pre.resize(model.params.branches.size());
    for (std::size_t bi = 0; bi < model.params.branches.size(); ++bi) {
        const auto& b = model.params.branches[bi];
        convolve(b, x, cache.pre[bi]);
        for (int o = 0; o < b.out_channels; ++o) {
            const double* p = cache.pre[bi].data() + static_cast<std::size_t>(o) * hw;
            if (use_max) {
                std::size_t best = 0;
                double best_v = std::max(0.0, p[0]);
                for (std::size_t k = 1; k < hw; ++k) {
                    const double v = std::max(0.0, p[k]);
                    if (v > best_v) {
                        best_v = v;
                        best = k;
                    }
                }
                cache.pooled.push_back(best_v);
                cache.argmax.push_back(best);
            } else {
                double s = 0.0;
                for (std::size_t k = 0; k < hw; ++k) s += std::max(0.0, p[k]);
                cache.pooled.push_back(s / static_cast<double>(hw));
            }
        }
    }
    cache.output = model.params.fc_bias;
    for (std::size_t j = 0; j < cache.pooled.size(); ++j) {
        cache.output += model.params.fc_weights[j] * cache.pooled[j];
    }
    return cache;
}

}  // namespace

double forward(const RegressorModel& model, const FeatureMap& x) {
    check_input(model, x);
    return run_forward(model, x).output;
}

BackwardResult backward(const RegressorModel& model, const FeatureMap& x, ScaleTarget target) {
    if (!std::isfinite(target.value)) {
        throw InvalidArgument("training target is not finite");
    }
    check_input(model, x);
    const ForwardCache cache = run_forward(model, x);

    BackwardResult out;
    out.output = cache.output;
    const double diff = cache.output - target.value;
    out.loss = diff * diff;
    out.gradients = model.params.zeros_like();
    const double d_out = 2.0 * diff;

    auto& g = out.gradients;
    g.fc_bias = d_out;
    for (std::size_t j = 0; j < cache.pooled.size(); ++j) {
        g.fc_weights[j] = d_out * cache.pooled[j];
    }

    const int h = x.height;
    const int w = x.width;
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    const bool use_max = model.config.pooling == Pooling::Max;
    std::vector<double> d_pre;
    std::size_t pooled_index = 0;
    for (std::size_t bi = 0; bi < model.params.branches.size(); ++bi) {
        const auto& b = model.params.branches[bi];
        auto& gb = g.branches[bi];
        const auto& pre = cache.pre[bi];
        const int pad = b.kernel / 2;
        d_pre.assign(pre.size(), 0.0);
        for (int o = 0; o < b.out_channels; ++o, ++pooled_index) {
            const double d_pool = d_out * model.params.fc_weights[pooled_index];
            double* dp = d_pre.data() + static_cast<std::size_t>(o) * hw;
            const double* p = pre.data() + static_cast<std::size_t>(o) * hw;
            if (use_max) {
                const std::size_t k = cache.argmax[pooled_index];
                if (p[k] > 0.0) dp[k] = d_pool;
            } else {
                const double share = d_pool / static_cast<double>(hw);
                for (std::size_t k = 0; k < hw; ++k) {
                    if (p[k] > 0.0) dp[k] = share;
                }
            }
            double bias_grad = 0.0;
            for (std::size_t k = 0; k < hw; ++k) bias_grad += dp[k];
            gb.bias[static_cast<std::size_t>(o)] = bias_grad;

            for (int c = 0; c < b.in_channels; ++c) {
                for (int ky = 0; ky < b.kernel; ++ky) {
                    for (int kx = 0; kx < b.kernel; ++kx) {
                        const int dy = ky - pad;
                        const int dx = kx - pad;
                        const int y0 = std::max(0, -dy);
                        const int y1 = std::min(h, h - dy);
                        const int x0 = std::max(0, -dx);
                        const int x1 = std::min(w, w - dx);
                        double acc = 0.0;
                        for (int y = y0; y < y1; ++y) {
                            const double* src = &x.data[x.index(c, y + dy, 0)];
                            const double* row = dp + static_cast<std::ptrdiff_t>(y) * w;
                            for (int xx = x0; xx < x1; ++xx) {
                                acc += row[xx] * src[xx + dx];
                            }
                        }
                        gb.w(o, c, ky, kx) = acc;
                    }
                }
            }
        }
    }
    return out;
}

void TrainerConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidArgument("learning rate must be a finite non-negative number");
    }
    if (!(decay >= 0.0) || !std::isfinite(decay)) {
        throw InvalidArgument("decay factor must be non-negative");
    }
    if (!(decay_epoch >= 0.0)) {
        throw InvalidArgument("decay epoch must be non-negative");
    }
    if (epochs < 1) {
        throw InvalidArgument("epochs must be >= 1");
    }
    if (batch_size < 1) {
        throw InvalidArgument("batch size must be >= 1");
    }
}

double TrainerConfig::rate_at(double epoch_progress) const {
    return epoch_progress < decay_epoch ? learning_rate : learning_rate * decay;
}

TrainResult train(RegressorModel model, std::span<const TrainingSample> data, const TrainerConfig& trainer) {
    trainer.validate();
    model.validate();
    if (data.empty()) {
        throw InvalidArgument("training set is empty");
    }
    for (const auto& s : data) {
        check_input(model, s.features);
        if (!std::isfinite(s.target.value)) {
            throw InvalidArgument("training target is not finite");
        }
    }

    TrainResult result;
    const std::size_t n = data.size();
    const auto batch = static_cast<std::size_t>(trainer.batch_size);
    const std::size_t steps_per_epoch = (n + batch - 1) / batch;
    std::vector<std::size_t> order(n);
    std::mt19937_64 rng(trainer.seed);
    std::size_t step = 0;

    for (int epoch = 0; epoch < trainer.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += batch, ++step) {
            const std::size_t end = std::min(n, start + batch);
            const double progress = static_cast<double>(step) / static_cast<double>(steps_per_epoch);
            const double lr = trainer.rate_at(progress);
            RegressorParams grad = model.params.zeros_like();
            double loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const auto& sample = data[order[k]];
                BackwardResult br = backward(model, sample.features, sample.target);
                grad.add_scaled(br.gradients, 1.0);
                loss += br.loss;
            }
            const auto count = static_cast<double>(end - start);
            if (lr != 0.0) {
                model.params.add_scaled(grad, -lr / count);
            }
            result.loss_trace.push_back(loss / count);
        }
    }
    result.model = std::move(model);
    return result;
}

double mean_squared_error(const RegressorModel& model, std::span<const TrainingSample> data) {
    if (data.empty()) {
        throw InvalidArgument("cannot evaluate on an empty set");
    }
    double s = 0.0;
    for (const auto& sample : data) {
        const double d = forward(model, sample.features) - sample.target.value;
        s += d * d;
    }
    return s / static_cast<double>(data.size());
}

}  // namespace adascale
