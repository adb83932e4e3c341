#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace adascale {

/// Discrete set of image scales (shortest-side pixels), kept strictly descending.
class ScaleSet {
public:
    ScaleSet() = default;
    /// Accepts any order; throws InvalidArgument on empty input, duplicates, or
    /// non-positive entries.
    explicit ScaleSet(std::vector<int> scales);

    static ScaleSet parse(const std::string& csv);

    const std::vector<int>& scales() const& { return scales_; }
    std::vector<int> scales() && { return std::move(scales_); }
    int min() const { return scales_.back(); }
    int max() const { return scales_.front(); }
    std::size_t size() const { return scales_.size(); }
    bool contains(int scale) const;
    std::string to_string() const;

    friend bool operator==(const ScaleSet&, const ScaleSet&) = default;

private:
    std::vector<int> scales_;
};

/// {600, 480, 360, 240, 128}: label and regression scale set.
ScaleSet regression_scales();
/// {600, 480, 360, 240}: multi-scale training set used for fixed-scale ablations.
ScaleSet training_scales();

struct ScaleTarget {
    double value = 0.0;
};

/// Normalized relative target: the ratio m_opt / m_i mapped linearly so that
/// [m_min/m_max, m_max/m_min] spans [-1, 1], then clamped to that interval.
ScaleTarget encode_scale_target(int input_scale, int optimal_scale, const ScaleSet& ss);

/// Inverse of encode_scale_target relative to `base_size`, clamped to
/// [ss.min(), ss.max()] and rounded half away from zero.
int decode_scale(double t, int base_size, const ScaleSet& ss);

/// Unclamped, unrounded inverse: the scale as a real number.
double decode_scale_raw(double t, int base_size, const ScaleSet& ss);

}  // namespace adascale
