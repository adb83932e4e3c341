#include "adascale/scalecodec.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "adascale/errors.hpp"
#include "adascale/geometry.hpp"

namespace adascale {

ScaleSet::ScaleSet(std::vector<int> scales) : scales_(std::move(scales)) {
    if (scales_.empty()) {
        throw InvalidArgument("scale set is empty");
    }
    std::sort(scales_.begin(), scales_.end(), std::greater<>());
    if (scales_.back() < 1) {
        throw InvalidArgument("scales must be positive");
    }
    if (std::adjacent_find(scales_.begin(), scales_.end()) != scales_.end()) {
        throw InvalidArgument("scale set has duplicate entries");
    }
}

ScaleSet ScaleSet::parse(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            throw InvalidArgument("empty entry in scale list '" + csv + "'");
        }
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("bad scale '" + item + "'");
        }
        if (used != item.size()) {
            throw InvalidArgument("bad scale '" + item + "'");
        }
        out.push_back(v);
    }
    return ScaleSet(std::move(out));
}

bool ScaleSet::contains(int scale) const {
    return std::find(scales_.begin(), scales_.end(), scale) != scales_.end();
}

std::string ScaleSet::to_string() const {
    std::string s;
    for (std::size_t i = 0; i < scales_.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(scales_[i]);
    }
    return s;
}

ScaleSet regression_scales() { return ScaleSet({600, 480, 360, 240, 128}); }
ScaleSet training_scales() { return ScaleSet({600, 480, 360, 240}); }

namespace {

struct RatioRange {
    double lo;
    double hi;
};

RatioRange ratio_range(const ScaleSet& ss) {
    if (ss.min() == ss.max()) {
        throw InvalidArgument("scale codec needs m_min < m_max");
    }
    const double mn = ss.min();
    const double mx = ss.max();
    return {mn / mx, mx / mn};
}

}  // namespace

ScaleTarget encode_scale_target(int input_scale, int optimal_scale, const ScaleSet& ss) {
    if (input_scale < 1 || optimal_scale < 1) {
        throw InvalidArgument("scales must be positive");
    }
    const auto r = ratio_range(ss);
    const double ratio = static_cast<double>(optimal_scale) / input_scale;
    const double t = 2.0 * ((ratio - r.lo) / (r.hi - r.lo)) - 1.0;
    return {std::clamp(t, -1.0, 1.0)};
}

double decode_scale_raw(double t, int base_size, const ScaleSet& ss) {
    if (!std::isfinite(t)) {
        throw InvalidArgument("regressed value is not finite");
    }
    if (base_size < 1) {
        throw InvalidArgument("base size must be positive");
    }
    const auto r = ratio_range(ss);
    const double ratio = ((t + 1.0) / 2.0) * (r.hi - r.lo) + r.lo;
    return ratio * base_size;
}

int decode_scale(double t, int base_size, const ScaleSet& ss) {
    const double raw = decode_scale_raw(t, base_size, ss);
    const double clipped = std::clamp(raw, static_cast<double>(ss.min()), static_cast<double>(ss.max()));
    return static_cast<int>(round_half_away(clipped));
}

}  // namespace adascale
