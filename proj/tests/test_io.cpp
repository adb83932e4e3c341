#include <gtest/gtest.h>

#include <sstream>

#include "adascale/errors.hpp"
#include "adascale/io.hpp"

using namespace adascale;

namespace {

std::vector<VideoSnippet> small_corpus() {
    GeneratorConfig g;
    g.snippets = 4;
    g.frames = 5;
    return generate_corpus(g, 11);
}

void expect_malformed_corpus(const std::string& text) {
    std::istringstream in(text);
    EXPECT_THROW(io::read_corpus(in), MalformedInput) << text;
}

}  // namespace

TEST(CorpusFile, RoundTrip) {
    const auto c = small_corpus();
    std::ostringstream out;
    io::write_corpus(out, c);
    std::istringstream in(out.str());
    const auto back = io::read_corpus(in);
    ASSERT_EQ(back.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(back[i].id, c[i].id);
        EXPECT_EQ(back[i].native, c[i].native);
        ASSERT_EQ(back[i].frames.size(), c[i].frames.size());
        for (std::size_t f = 0; f < c[i].frames.size(); ++f) {
            EXPECT_EQ(back[i].frames[f].annotations, c[i].frames[f].annotations);
        }
        EXPECT_TRUE(back[i].objects.empty());
    }
    std::ostringstream again;
    io::write_corpus(again, back);
    EXPECT_EQ(again.str(), out.str());
}

TEST(CorpusFile, AcceptsExternalDumps) {
    std::istringstream in(
        "{\"snippet_id\": 7, \"frame_index\": 0, \"native_width\": 640, \"native_height\": 480, "
        "\"annotations\": [{\"class\": 2, \"x_min\": 1, \"y_min\": 2, \"x_max\": 30, \"y_max\": 40}]}\n"
        "\n"
        "{\"snippet_id\": 7, \"frame_index\": 1, \"native_width\": 640, \"native_height\": 480, \"annotations\": []}\n");
    const auto c = io::read_corpus(in);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].id, "7");
    EXPECT_EQ(c[0].frames.size(), 2u);
    EXPECT_EQ(c[0].frames[0].annotations[0].class_label, 2);
}

TEST(CorpusFile, RejectsMalformedRecords) {
    const std::string ok_tail = "\"native_width\": 640, \"native_height\": 480, \"annotations\": []}";
    expect_malformed_corpus("not json\n");
    expect_malformed_corpus("{\"frame_index\": 0, " + ok_tail + "\n");
    expect_malformed_corpus("{\"snippet_id\": \"a\", \"frame_index\": 1, " + ok_tail + "\n");
    expect_malformed_corpus("{\"snippet_id\": \"a\", \"frame_index\": \"0\", " + ok_tail + "\n");
    expect_malformed_corpus("{\"snippet_id\": \"a\", \"frame_index\": 0, \"native_width\": 0, \"native_height\": 480, "
                            "\"annotations\": []}\n");
    expect_malformed_corpus("{\"snippet_id\": \"a\", \"frame_index\": 0, \"native_width\": 640, \"native_height\": 480, "
                            "\"annotations\": [{\"class\": 1, \"x_min\": 5, \"y_min\": 0, \"x_max\": 1, \"y_max\": 4}]}\n");
    expect_malformed_corpus("{\"snippet_id\": \"a\", \"frame_index\": 0, \"native_width\": 640, \"native_height\": 480, "
                            "\"annotations\": [{\"class\": 0, \"x_min\": 0, \"y_min\": 0, \"x_max\": 1, \"y_max\": 4}]}\n");
}

TEST(ProfileFile, RoundTripAndDefaults) {
    DetectorProfile p;
    p.sweet_lo = 40;
    p.fp_rate = 1.25;
    p.confusion_weights = {0.2, 0.8};
    p.seed = 99;
    const auto back = io::profile_from_json(io::profile_to_json(p));
    EXPECT_EQ(io::profile_to_json(back), io::profile_to_json(p));
    const auto partial = io::profile_from_json(io::json{{"sweet_hi", 200.0}});
    EXPECT_EQ(partial.sweet_hi, 200.0);
    EXPECT_EQ(partial.sweet_lo, DetectorProfile{}.sweet_lo);
    EXPECT_THROW(io::profile_from_json(io::json{{"sweet_spot", 1}}), MalformedInput);
    EXPECT_THROW(io::profile_from_json(io::json::array()), MalformedInput);
}

TEST(ModelFile, BitExactRoundTrip) {
    RegressorConfig cfg;
    cfg.pooling = Pooling::Max;
    auto m = RegressorModel::initialize(cfg, 5, ScaleSet({600, 360}));
    m.params.fc_bias = 0.1 + 0.2;  // not representable as a short decimal
    const std::string text = io::model_to_json(m).dump();
    const auto back = io::model_from_json(io::json::parse(text));
    EXPECT_EQ(back, m);
    EXPECT_EQ(io::model_to_json(back).dump(), text);
}

TEST(ModelFile, RejectsBadModels) {
    const auto j = io::model_to_json(RegressorModel::initialize(RegressorConfig{}, 1));
    auto bad = j;
    bad.erase("format");
    EXPECT_THROW(io::model_from_json(bad), MalformedInput);
    bad = j;
    bad["config"]["pooling"] = "median";
    EXPECT_THROW(io::model_from_json(bad), MalformedInput);
    EXPECT_THROW(io::model_from_json(io::json{{"format", "nope"}}), MalformedInput);
}

TEST(LabelFile, RoundTrip) {
    const auto c = small_corpus();
    const SyntheticDetector det(DetectorProfile{}, 3);
    const auto labels = generate_scale_labels(c, det, regression_scales(), 4);
    std::ostringstream out;
    io::write_labels(out, labels);
    std::istringstream in(out.str());
    const auto back = io::read_labels(in);
    ASSERT_EQ(back.size(), labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        EXPECT_EQ(back[i].snippet_id, labels[i].snippet_id);
        EXPECT_EQ(back[i].scales, labels[i].scales);
        EXPECT_EQ(back[i].input_scale, labels[i].input_scale);
        EXPECT_EQ(back[i].optimal_scale, labels[i].optimal_scale);
        EXPECT_EQ(back[i].degenerate, labels[i].degenerate);
        EXPECT_EQ(back[i].target.value, labels[i].target.value);
        EXPECT_EQ(back[i].features, labels[i].features);
        EXPECT_EQ(back[i].metric, labels[i].metric);
    }
}

TEST(LabelFile, RejectsBadScaleSet) {
    std::istringstream in("{\"snippet_id\": \"a\", \"frame_index\": 0, \"scales\": [600, 600], \"input_scale\": 600, "
                          "\"optimal_scale\": 600, \"degenerate\": true, \"target\": 0, \"metric\": [], "
                          "\"features\": {\"channels\": 1, \"height\": 1, \"width\": 1, \"data\": [0]}}\n");
    EXPECT_THROW(io::read_labels(in), MalformedInput);
}

TEST(Files, MissingFileIsMalformedInput) {
    EXPECT_THROW(io::read_text_file("/nonexistent/dir/file.json"), MalformedInput);
    EXPECT_THROW(io::write_text_file("/nonexistent/dir/out.json", "x"), InvalidArgument);
}

TEST(Csv, Headers) {
    EvalReport r;
    r.classes.push_back({1, 2, 0.5, {1, 1}, {{0.5, 1.0, 0.9}}});
    std::ostringstream a, b, h;
    io::write_class_csv(a, r);
    io::write_pr_csv(b, r);
    io::write_histogram_csv(h, make_histogram(std::vector<int>{128, 600}, 128, 600, 2));
    EXPECT_EQ(a.str(), "class,ap,tp,fp\n1,0.5,1,1\n");
    EXPECT_EQ(b.str(), "class,recall,precision,confidence\n1,0.5,1.0,0.9\n");
    EXPECT_EQ(h.str(), "bin_lo,bin_hi,count\n128.0,364.0,1\n364.0,600.0,1\n");
}
