#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "adascale/errors.hpp"
#include "adascale/io.hpp"
#include "adascale/pipeline.hpp"

namespace py = pybind11;
using namespace adascale;

namespace {

ScaleSet to_scales(const std::optional<std::vector<int>>& s) { return s ? ScaleSet(*s) : regression_scales(); }

py::array_t<double> to_array(const FeatureMap& f) {
    py::array_t<double> a({f.channels, f.height, f.width});
    std::copy(f.data.begin(), f.data.end(), a.mutable_data());
    return a;
}

FeatureMap from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) throw InvalidArgument("feature map must have shape (channels, height, width)");
    FeatureMap f = FeatureMap::zeros(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                                     static_cast<int>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), f.data.begin());
    return f;
}

py::object json_to_py(const io::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

io::json py_to_json(const py::object& o) {
    return io::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::vector<VideoSnippet> read_corpus_file(const std::string& path) {
    std::istringstream in(io::read_text_file(path));
    return io::read_corpus(in);
}

void write_corpus_file(const std::string& path, const std::vector<VideoSnippet>& corpus) {
    std::ostringstream out;
    io::write_corpus(out, corpus);
    io::write_text_file(path, out.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adaptive scaling for video object detection";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<MalformedInput>(m, "MalformedInput", PyExc_ValueError);

    py::class_<BoundingBox>(m, "BoundingBox")
        .def(py::init<double, double, double, double>(), py::arg("x_min"), py::arg("y_min"), py::arg("x_max"),
             py::arg("y_max"))
        .def_readwrite("x_min", &BoundingBox::x_min)
        .def_readwrite("y_min", &BoundingBox::y_min)
        .def_readwrite("x_max", &BoundingBox::x_max)
        .def_readwrite("y_max", &BoundingBox::y_max)
        .def("area", &BoundingBox::area)
        .def("__eq__", [](const BoundingBox& a, const BoundingBox& b) { return a == b; })
        .def("__repr__", [](const BoundingBox& b) {
            std::ostringstream s;
            s << "BoundingBox(" << b.x_min << ", " << b.y_min << ", " << b.x_max << ", " << b.y_max << ")";
            return s.str();
        });

    py::class_<ImageSize>(m, "ImageSize")
        .def(py::init<int, int>(), py::arg("width"), py::arg("height"))
        .def_readwrite("width", &ImageSize::width)
        .def_readwrite("height", &ImageSize::height);

    py::class_<Detection>(m, "Detection")
        .def(py::init(&Detection::make), py::arg("box"), py::arg("class_scores"))
        .def_property_readonly("box", &Detection::box)
        .def_property_readonly("class_scores", &Detection::class_scores)
        .def_property_readonly("predicted_class", &Detection::predicted_class)
        .def_property_readonly("confidence", &Detection::confidence)
        .def("__eq__", [](const Detection& a, const Detection& b) { return a == b; });

    py::class_<Annotation>(m, "Annotation")
        .def(py::init<BoundingBox, int>(), py::arg("box"), py::arg("class_label"))
        .def_readwrite("box", &Annotation::box)
        .def_readwrite("class_label", &Annotation::class_label);

    py::class_<Frame>(m, "Frame")
        .def_readonly("index", &Frame::index)
        .def_readonly("annotations", &Frame::annotations);

    py::class_<VideoSnippet>(m, "VideoSnippet")
        .def_readonly("id", &VideoSnippet::id)
        .def_readonly("native", &VideoSnippet::native)
        .def_readonly("frames", &VideoSnippet::frames);

    m.def("iou", &iou, py::arg("a"), py::arg("b"));
    m.def(
        "nms", [](const std::vector<Detection>& d, double t, std::size_t k) { return nms(d, t, k); },
        py::arg("detections"), py::arg("threshold") = kNmsThreshold, py::arg("top_k") = kTopK);
    m.def(
        "average_precision",
        [](const std::vector<std::pair<double, bool>>& flags, std::size_t n_gt) {
            std::vector<ScoredFlag> f;
            for (const auto& [c, tp] : flags) f.push_back({c, tp});
            return average_precision(f, n_gt);
        },
        py::arg("flags"), py::arg("n_gt"), "AP over (confidence, true_positive) pairs; None without ground truth.");

    m.def(
        "encode_scale_target",
        [](int mi, int mopt, std::optional<std::vector<int>> s) { return encode_scale_target(mi, mopt, to_scales(s)).value; },
        py::arg("input_scale"), py::arg("optimal_scale"), py::arg("scales") = py::none());
    m.def(
        "decode_scale", [](double t, int base, std::optional<std::vector<int>> s) { return decode_scale(t, base, to_scales(s)); },
        py::arg("target"), py::arg("base_size"), py::arg("scales") = py::none());
    m.def("workload", &workload, py::arg("scale"), py::arg("native"));

    py::class_<GeneratorConfig>(m, "GeneratorConfig")
        .def(py::init<>())
        .def_readwrite("snippets", &GeneratorConfig::snippets)
        .def_readwrite("frames", &GeneratorConfig::frames)
        .def_readwrite("classes", &GeneratorConfig::classes)
        .def_readwrite("native", &GeneratorConfig::native)
        .def_readwrite("max_objects", &GeneratorConfig::max_objects)
        .def_readwrite("velocity_cap", &GeneratorConfig::velocity_cap);

    m.def(
        "generate_corpus",
        [](int snippets, int frames, int classes, std::uint64_t seed) {
            GeneratorConfig g;
            g.snippets = snippets;
            g.frames = frames;
            g.classes = classes;
            return generate_corpus(g, seed);
        },
        py::arg("snippets"), py::arg("frames"), py::arg("classes"), py::arg("seed"));
    m.def("generate_corpus_with", &generate_corpus, py::arg("config"), py::arg("seed"));
    m.def("read_corpus", &read_corpus_file, py::arg("path"));
    m.def("write_corpus", &write_corpus_file, py::arg("path"), py::arg("corpus"));

    py::class_<DetectorProfile>(m, "DetectorProfile")
        .def(py::init<>())
        .def_static("from_dict", [](const py::object& o) { return io::profile_from_json(py_to_json(o)); })
        .def("to_dict", [](const DetectorProfile& p) { return json_to_py(io::profile_to_json(p)); })
        .def("base_confidence", &DetectorProfile::base_confidence, py::arg("apparent_size"))
        .def_readwrite("sweet_lo", &DetectorProfile::sweet_lo)
        .def_readwrite("sweet_hi", &DetectorProfile::sweet_hi)
        .def_readwrite("fp_rate", &DetectorProfile::fp_rate)
        .def_readwrite("localization_noise", &DetectorProfile::localization_noise)
        .def_readwrite("seed", &DetectorProfile::seed);

    py::class_<SyntheticDetector>(m, "SyntheticDetector")
        .def(py::init<DetectorProfile, int>(), py::arg("profile"), py::arg("num_classes"))
        .def(
            "detect",
            [](const SyntheticDetector& d, const VideoSnippet& s, int frame, int scale) {
                auto out = d.detect(s, frame, scale);
                return py::make_tuple(out.detections, to_array(out.features), out.resize.factor);
            },
            py::arg("snippet"), py::arg("frame_index"), py::arg("scale"),
            "Returns (detections in resized coordinates, features (C, H, W), resize factor).");

    py::class_<RegressorModel>(m, "RegressorModel")
        .def_static(
            "initialize",
            [](int channels, std::uint64_t seed, std::optional<std::vector<int>> s) {
                RegressorConfig cfg;
                cfg.in_channels = channels;
                return RegressorModel::initialize(cfg, seed, to_scales(s));
            },
            py::arg("in_channels"), py::arg("seed"), py::arg("scales") = py::none())
        .def_static("from_json", [](const std::string& text) { return io::model_from_json(io::json::parse(text)); })
        .def("to_json", [](const RegressorModel& mdl) { return io::model_to_json(mdl).dump(2); })
        .def_property_readonly("scales", [](const RegressorModel& mdl) { return mdl.scales.scales(); })
        .def("forward", [](const RegressorModel& mdl, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
            return forward(mdl, from_array(x));
        });

    py::class_<LabeledFrame>(m, "LabeledFrame")
        .def_readonly("snippet_id", &LabeledFrame::snippet_id)
        .def_readonly("frame_index", &LabeledFrame::frame_index)
        .def_readonly("input_scale", &LabeledFrame::input_scale)
        .def_readonly("optimal_scale", &LabeledFrame::optimal_scale)
        .def_readonly("degenerate", &LabeledFrame::degenerate)
        .def_property_readonly("target", [](const LabeledFrame& l) { return l.target.value; })
        .def_property_readonly("features", [](const LabeledFrame& l) { return to_array(l.features); });

    m.def(
        "generate_scale_labels",
        [](const std::vector<VideoSnippet>& c, const SyntheticDetector& d, std::optional<std::vector<int>> s,
           std::uint64_t seed) { return generate_scale_labels(c, d, to_scales(s), seed); },
        py::arg("corpus"), py::arg("detector"), py::arg("scales") = py::none(), py::arg("seed") = 0);

    m.def(
        "train",
        [](const std::vector<LabeledFrame>& labels, int epochs, double lr, double decay_epoch, double decay,
           int batch, std::uint64_t seed) {
            if (labels.empty()) throw InvalidArgument("no labels to train on");
            TrainerConfig t;
            t.epochs = epochs;
            t.learning_rate = lr;
            t.decay_epoch = decay_epoch;
            t.decay = decay;
            t.batch_size = batch;
            t.seed = seed;
            RegressorConfig cfg;
            cfg.in_channels = labels.front().features.channels;
            const auto init = RegressorModel::initialize(cfg, seed, labels.front().scales);
            auto r = train(init, to_training_samples(labels), t);
            return py::make_tuple(r.model, r.loss_trace);
        },
        py::arg("labels"), py::arg("epochs") = 2, py::arg("lr") = 1e-4, py::arg("decay_epoch") = 1.3,
        py::arg("decay") = 0.1, py::arg("batch") = 1, py::arg("seed") = 0, "Returns (model, per-step loss trace).");

    m.def(
        "mean_squared_error",
        [](const RegressorModel& mdl, const std::vector<LabeledFrame>& labels) {
            return mean_squared_error(mdl, to_training_samples(labels));
        },
        py::arg("model"), py::arg("labels"));

    m.def(
        "run_policy",
        [](const std::vector<VideoSnippet>& c, const SyntheticDetector& d, const std::string& policy,
           std::uint64_t seed, std::optional<RegressorModel> model, std::optional<std::vector<int>> s) {
            const auto run = run_policy(c, d, parse_policy(policy, to_scales(s), model), seed);
            return json_to_py(io::report_to_json(run.report));
        },
        py::arg("corpus"), py::arg("detector"), py::arg("policy"), py::arg("seed") = 0, py::arg("model") = py::none(),
        py::arg("scales") = py::none(), "Runs 'fixed:M', 'random', 'adascale' or 'multiscale'; returns the report as a dict.");

    m.def(
        "compare_policies",
        [](const std::vector<VideoSnippet>& c, const DetectorProfile& p, const std::vector<std::string>& policies,
           const std::vector<std::uint64_t>& seeds, std::optional<RegressorModel> model,
           std::optional<std::vector<int>> s) {
            std::vector<PolicyConfig> cfgs;
            for (const auto& t : policies) cfgs.push_back(parse_policy(t, to_scales(s), model));
            std::ostringstream out;
            io::write_comparison_csv(out, compare_policies(c, p, cfgs, seeds));
            return out.str();
        },
        py::arg("corpus"), py::arg("profile"), py::arg("policies"), py::arg("seeds"), py::arg("model") = py::none(),
        py::arg("scales") = py::none(), "Returns the comparison table as CSV text.");
}
