#include "adascale/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "adascale/errors.hpp"

namespace adascale::io {

namespace {

std::string num(double v) { return json(v).dump(); }

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw MalformedInput(where + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw MalformedInput(where + ": field '" + key + "' has the wrong type");
    }
}

std::string line_label(std::size_t line) { return "line " + std::to_string(line); }

json parse_line(const std::string& text, std::size_t line) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedInput(line_label(line) + ": " + e.what());
    }
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

json box_json(const BoundingBox& b) {
    return json{{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max}};
}

json features_json(const FeatureMap& f) {
    return json{{"channels", f.channels}, {"height", f.height}, {"width", f.width}, {"data", f.data}};
}

FeatureMap features_from_json(const json& j, const std::string& where) {
    FeatureMap f;
    f.channels = get_field<int>(j, "channels", where);
    f.height = get_field<int>(j, "height", where);
    f.width = get_field<int>(j, "width", where);
    f.data = get_field<std::vector<double>>(j, "data", where);
    try {
        f.validate();
    } catch (const InvalidArgument& e) {
        throw MalformedInput(where + ": " + e.what());
    }
    return f;
}

}  // namespace

void write_corpus(std::ostream& out, std::span<const VideoSnippet> corpus) {
    for (const auto& s : corpus) {
        for (const auto& f : s.frames) {
            json anns = json::array();
            for (const auto& a : f.annotations) {
                json aj = box_json(a.box);
                aj["class"] = a.class_label;
                anns.push_back(std::move(aj));
            }
            const json rec{{"snippet_id", s.id},
                           {"frame_index", f.index},
                           {"native_width", s.native.width},
                           {"native_height", s.native.height},
                           {"annotations", std::move(anns)}};
            out << rec.dump() << '\n';
        }
    }
}

std::vector<VideoSnippet> read_corpus(std::istream& in) {
    std::vector<VideoSnippet> corpus;
    std::unordered_map<std::string, std::size_t> by_id;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (blank(text)) continue;
        const json rec = parse_line(text, line);
        const std::string where = line_label(line);
        if (!rec.is_object() || !rec.contains("snippet_id")) {
            throw MalformedInput(where + ": missing field 'snippet_id'");
        }
        const json& sid = rec.at("snippet_id");
        std::string id;
        if (sid.is_string()) {
            id = sid.get<std::string>();
        } else if (sid.is_number_integer()) {
            id = std::to_string(sid.get<long long>());
        } else {
            throw MalformedInput(where + ": snippet_id must be a string or integer");
        }
        const int frame_index = get_field<int>(rec, "frame_index", where);
        const ImageSize native{get_field<int>(rec, "native_width", where), get_field<int>(rec, "native_height", where)};
        if (native.width < 1 || native.height < 1) throw MalformedInput(where + ": native size must be positive");

        auto [it, inserted] = by_id.try_emplace(id, corpus.size());
        if (inserted) {
            VideoSnippet s;
            s.id = id;
            s.native = native;
            corpus.push_back(std::move(s));
        }
        VideoSnippet& snip = corpus[it->second];
        if (snip.native != native) throw MalformedInput(where + ": native size changes within snippet " + id);
        if (frame_index != static_cast<int>(snip.frames.size())) {
            throw MalformedInput(where + ": expected frame " + std::to_string(snip.frames.size()) + " of snippet " +
                                 id + ", got " + std::to_string(frame_index));
        }
        Frame frame;
        frame.index = frame_index;
        if (!rec.contains("annotations") || !rec.at("annotations").is_array()) {
            throw MalformedInput(where + ": 'annotations' must be an array");
        }
        for (const json& a : rec.at("annotations")) {
            Annotation ann;
            ann.class_label = get_field<int>(a, "class", where);
            ann.box = {get_field<double>(a, "x_min", where), get_field<double>(a, "y_min", where),
                       get_field<double>(a, "x_max", where), get_field<double>(a, "y_max", where)};
            if (ann.class_label < 1) throw MalformedInput(where + ": annotation class must be >= 1");
            if (!ann.box.valid()) throw MalformedInput(where + ": annotation box is not a valid box");
            frame.annotations.push_back(ann);
        }
        snip.frames.push_back(std::move(frame));
    }
    return corpus;
}

json profile_to_json(const DetectorProfile& p) {
    return json{{"sweet_lo", p.sweet_lo},
                {"sweet_hi", p.sweet_hi},
                {"peak_confidence", p.peak_confidence},
                {"falloff", p.falloff},
                {"small_decay", p.small_decay},
                {"large_decay", p.large_decay},
                {"confidence_noise", p.confidence_noise},
                {"localization_noise", p.localization_noise},
                {"confusion_rate", p.confusion_rate},
                {"background_share", p.background_share},
                {"confusion_weights", p.confusion_weights},
                {"fp_rate", p.fp_rate},
                {"fp_min_confidence", p.fp_min_confidence},
                {"fp_max_confidence", p.fp_max_confidence},
                {"part_rate", p.part_rate},
                {"part_max_confidence", p.part_max_confidence},
                {"feature_grid", p.feature_grid},
                {"feature_channels", p.feature_channels},
                {"feature_base_size", p.feature_base_size},
                {"feature_mass", p.feature_mass},
                {"feature_footprint", p.feature_footprint},
                {"zoom_gain", p.zoom_gain},
                {"zoom_reference", p.zoom_reference},
                {"zoom_cap", p.zoom_cap},
                {"bias_level", p.bias_level},
                {"resolution_gain", p.resolution_gain},
                {"seed", p.seed}};
}

DetectorProfile profile_from_json(const json& j) {
    if (!j.is_object()) throw MalformedInput("detector profile must be a JSON object");
    DetectorProfile p;
    const json defaults = profile_to_json(p);
    for (const auto& [key, value] : j.items()) {
        if (!defaults.contains(key)) throw MalformedInput("detector profile: unknown key '" + key + "'");
    }
    json merged = defaults;
    merged.update(j);
    const std::string where = "detector profile";
    p.sweet_lo = get_field<double>(merged, "sweet_lo", where);
    p.sweet_hi = get_field<double>(merged, "sweet_hi", where);
    p.peak_confidence = get_field<double>(merged, "peak_confidence", where);
    p.falloff = get_field<double>(merged, "falloff", where);
    p.small_decay = get_field<double>(merged, "small_decay", where);
    p.large_decay = get_field<double>(merged, "large_decay", where);
    p.confidence_noise = get_field<double>(merged, "confidence_noise", where);
    p.localization_noise = get_field<double>(merged, "localization_noise", where);
    p.confusion_rate = get_field<double>(merged, "confusion_rate", where);
    p.background_share = get_field<double>(merged, "background_share", where);
    p.confusion_weights = get_field<std::vector<double>>(merged, "confusion_weights", where);
    p.fp_rate = get_field<double>(merged, "fp_rate", where);
    p.fp_min_confidence = get_field<double>(merged, "fp_min_confidence", where);
    p.fp_max_confidence = get_field<double>(merged, "fp_max_confidence", where);
    p.part_rate = get_field<double>(merged, "part_rate", where);
    p.part_max_confidence = get_field<double>(merged, "part_max_confidence", where);
    p.feature_grid = get_field<int>(merged, "feature_grid", where);
    p.feature_channels = get_field<int>(merged, "feature_channels", where);
    p.feature_base_size = get_field<double>(merged, "feature_base_size", where);
    p.feature_mass = get_field<double>(merged, "feature_mass", where);
    p.feature_footprint = get_field<int>(merged, "feature_footprint", where);
    p.zoom_gain = get_field<double>(merged, "zoom_gain", where);
    p.zoom_reference = get_field<double>(merged, "zoom_reference", where);
    p.zoom_cap = get_field<double>(merged, "zoom_cap", where);
    p.bias_level = get_field<double>(merged, "bias_level", where);
    p.resolution_gain = get_field<double>(merged, "resolution_gain", where);
    p.seed = get_field<std::uint64_t>(merged, "seed", where);
    p.validate();
    return p;
}

namespace {

constexpr const char* kModelFormat = "adascale-regressor";
constexpr int kModelVersion = 1;

}  // namespace

json model_to_json(const RegressorModel& model) {
    json branches = json::array();
    json specs = json::array();
    for (std::size_t i = 0; i < model.params.branches.size(); ++i) {
        const auto& b = model.params.branches[i];
        specs.push_back({{"kernel", model.config.branches[i].kernel}, {"width", model.config.branches[i].width}});
        branches.push_back({{"kernel", b.kernel},
                            {"in_channels", b.in_channels},
                            {"out_channels", b.out_channels},
                            {"weights", b.weights},
                            {"bias", b.bias}});
    }
    return json{{"format", kModelFormat},
                {"version", kModelVersion},
                {"config",
                 {{"in_channels", model.config.in_channels},
                  {"branches", specs},
                  {"pooling", model.config.pooling == Pooling::Max ? "max" : "average"}}},
                {"scales", model.scales.scales()},
                {"params", {{"branches", branches}, {"fc_weights", model.params.fc_weights}, {"fc_bias", model.params.fc_bias}}}};
}

RegressorModel model_from_json(const json& j) {
    const std::string where = "model";
    if (get_field<std::string>(j, "format", where) != kModelFormat) {
        throw MalformedInput("model: unexpected format tag");
    }
    if (get_field<int>(j, "version", where) != kModelVersion) {
        throw MalformedInput("model: unsupported version");
    }
    RegressorModel m;
    const json cfg = get_field<json>(j, "config", where);
    m.config.in_channels = get_field<int>(cfg, "in_channels", where);
    m.config.branches.clear();
    for (const json& s : get_field<json>(cfg, "branches", where)) {
        m.config.branches.push_back({get_field<int>(s, "kernel", where), get_field<int>(s, "width", where)});
    }
    const auto pooling = get_field<std::string>(cfg, "pooling", where);
    if (pooling == "average") {
        m.config.pooling = Pooling::Average;
    } else if (pooling == "max") {
        m.config.pooling = Pooling::Max;
    } else {
        throw MalformedInput("model: unknown pooling '" + pooling + "'");
    }
    const json params = get_field<json>(j, "params", where);
    for (const json& b : get_field<json>(params, "branches", where)) {
        ConvBranch cb;
        cb.kernel = get_field<int>(b, "kernel", where);
        cb.in_channels = get_field<int>(b, "in_channels", where);
        cb.out_channels = get_field<int>(b, "out_channels", where);
        cb.weights = get_field<std::vector<double>>(b, "weights", where);
        cb.bias = get_field<std::vector<double>>(b, "bias", where);
        m.params.branches.push_back(std::move(cb));
    }
    m.params.fc_weights = get_field<std::vector<double>>(params, "fc_weights", where);
    m.params.fc_bias = get_field<double>(params, "fc_bias", where);
    try {
        m.scales = ScaleSet(get_field<std::vector<int>>(j, "scales", where));
        m.validate();
    } catch (const InvalidArgument& e) {
        throw MalformedInput(std::string("model: ") + e.what());
    }
    return m;
}

void write_labels(std::ostream& out, std::span<const LabeledFrame> labels) {
    for (const auto& l : labels) {
        json metric = json::array();
        for (const auto& [scale, value] : l.metric) metric.push_back({{"scale", scale}, {"value", value}});
        const json rec{{"snippet_id", l.snippet_id},
                       {"frame_index", l.frame_index},
                       {"scales", l.scales.scales()},
                       {"input_scale", l.input_scale},
                       {"optimal_scale", l.optimal_scale},
                       {"degenerate", l.degenerate},
                       {"target", l.target.value},
                       {"metric", std::move(metric)},
                       {"features", features_json(l.features)}};
        out << rec.dump() << '\n';
    }
}

std::vector<LabeledFrame> read_labels(std::istream& in) {
    std::vector<LabeledFrame> labels;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (blank(text)) continue;
        const json rec = parse_line(text, line);
        const std::string where = line_label(line);
        LabeledFrame l;
        l.snippet_id = get_field<std::string>(rec, "snippet_id", where);
        l.frame_index = get_field<int>(rec, "frame_index", where);
        try {
            l.scales = ScaleSet(get_field<std::vector<int>>(rec, "scales", where));
        } catch (const InvalidArgument& e) {
            throw MalformedInput(where + ": " + e.what());
        }
        l.input_scale = get_field<int>(rec, "input_scale", where);
        l.optimal_scale = get_field<int>(rec, "optimal_scale", where);
        l.degenerate = get_field<bool>(rec, "degenerate", where);
        l.target.value = get_field<double>(rec, "target", where);
        for (const json& m : get_field<json>(rec, "metric", where)) {
            l.metric.emplace_back(get_field<int>(m, "scale", where), get_field<double>(m, "value", where));
        }
        l.features = features_from_json(get_field<json>(rec, "features", where), where);
        labels.push_back(std::move(l));
    }
    return labels;
}

json report_to_json(const EvalReport& r) {
    json classes = json::array();
    for (const auto& c : r.classes) {
        json pr = json::array();
        for (const auto& p : c.pr_curve) pr.push_back({p.recall, p.precision, p.confidence});
        classes.push_back({{"class", c.class_label},
                           {"n_gt", c.n_gt},
                           {"ap", c.ap ? json(*c.ap) : json(nullptr)},
                           {"tp", c.counts.tp},
                           {"fp", c.counts.fp},
                           {"pr_curve", std::move(pr)}});
    }
    json trace = json::array();
    for (const auto& t : r.scale_trace) {
        trace.push_back({{"snippet_id", t.snippet_id}, {"frame_index", t.frame_index}, {"scale", t.scale}});
    }
    return json{{"policy", r.policy},
                {"map", r.map},
                {"tp", r.counts.tp},
                {"fp", r.counts.fp},
                {"workload", r.workload},
                {"classes", std::move(classes)},
                {"histogram", {{"edges", r.histogram.edges}, {"counts", r.histogram.counts}}},
                {"scale_trace", std::move(trace)}};
}

void write_class_csv(std::ostream& out, const EvalReport& r) {
    out << "class,ap,tp,fp\n";
    for (const auto& c : r.classes) {
        out << c.class_label << ',' << (c.ap ? num(*c.ap) : std::string()) << ',' << c.counts.tp << ','
            << c.counts.fp << '\n';
    }
}

void write_pr_csv(std::ostream& out, const EvalReport& r) {
    out << "class,recall,precision,confidence\n";
    for (const auto& c : r.classes) {
        for (const auto& p : c.pr_curve) {
            out << c.class_label << ',' << num(p.recall) << ',' << num(p.precision) << ',' << num(p.confidence) << '\n';
        }
    }
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        out << num(h.edges[b]) << ',' << num(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
    }
}

void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
    out << "policy,seeds,map_mean,map_std,workload_mean,workload_std,tp_mean,fp_mean,tp_normalized,fp_normalized\n";
    for (const auto& r : rows) {
        out << r.policy << ',' << r.maps.size() << ',' << num(r.map_mean) << ',' << num(r.map_std) << ','
            << num(r.workload_mean) << ',' << num(r.workload_std) << ',' << num(r.tp_mean) << ',' << num(r.fp_mean)
            << ',' << num(r.tp_normalized) << ',' << num(r.fp_normalized) << '\n';
    }
}

json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedInput(path.string() + ": " + e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedInput("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << text;
    if (!out) throw InvalidArgument("failed writing " + path.string());
}

}  // namespace adascale::io
