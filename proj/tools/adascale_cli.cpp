// adascale command line: corpus generation, labeling, training, policy runs and comparisons.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adascale/errors.hpp"
#include "adascale/io.hpp"
#include "adascale/pipeline.hpp"

namespace fs = std::filesystem;
using namespace adascale;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitMalformed = 3;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw InvalidArgument("empty entry in list '" + text + "'");
        out.push_back(item);
    }
    if (out.empty()) throw InvalidArgument("empty list");
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_list(text)) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            if (s.front() == '-') throw std::invalid_argument(s);
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("bad seed '" + s + "'");
        }
        if (used != s.size()) throw InvalidArgument("bad seed '" + s + "'");
        seeds.push_back(v);
    }
    return seeds;
}

std::vector<VideoSnippet> load_corpus(const std::string& path) {
    std::istringstream in(io::read_text_file(path));
    auto corpus = io::read_corpus(in);
    if (corpus.empty()) throw MalformedInput(path + ": corpus holds no frames");
    return corpus;
}

DetectorProfile load_profile(const std::string& path) {
    try {
        return io::profile_from_json(io::read_json_file(path));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
}

RegressorModel load_model(const std::string& path) { return io::model_from_json(io::read_json_file(path)); }

std::string file_token(std::string name) {
    for (char& c : name) {
        if (c == ':') c = '_';
    }
    return name;
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidArgument("cannot create directory " + dir + ": " + ec.message());
}

struct GenCorpusArgs {
    std::string out;
    int snippets = 100;
    int frames = 20;
    int classes = 3;
    std::uint64_t seed = 0;
    std::string profile;
};

void gen_corpus(const GenCorpusArgs& a) {
    GeneratorConfig cfg;
    cfg.snippets = a.snippets;
    cfg.frames = a.frames;
    cfg.classes = a.classes;
    cfg.validate();
    const auto corpus = generate_corpus(cfg, a.seed);
    if (!a.profile.empty()) {
        const SyntheticDetector det(reseeded(load_profile(a.profile), a.seed), cfg.classes);
        if (!has_scale_diversity(corpus, det, regression_scales())) {
            throw InvalidArgument("every frame shares one optimal scale under this profile; no scale choice to learn");
        }
    }
    std::ostringstream out;
    io::write_corpus(out, corpus);
    io::write_text_file(a.out, out.str());
}

struct GenLabelsArgs {
    std::string corpus;
    std::string profile;
    std::string scales = "600,480,360,240,128";
    std::uint64_t seed = 0;
    std::string out;
    std::string split = "train";
};

void gen_labels(const GenLabelsArgs& a) {
    const ScaleSet scales = ScaleSet::parse(a.scales);
    const DetectorProfile profile = load_profile(a.profile);
    auto corpus = load_corpus(a.corpus);
    if (a.split != "all") {
        CorpusSplit parts = split_corpus(corpus);
        corpus = a.split == "train" ? std::move(parts.train) : std::move(parts.validation);
        if (corpus.empty()) throw InvalidArgument("the " + a.split + " split of the corpus is empty");
    }
    const SyntheticDetector det(reseeded(profile, a.seed), max_class_label(corpus));
    const auto labels = generate_scale_labels(corpus, det, scales, a.seed);
    std::ostringstream out;
    io::write_labels(out, labels);
    io::write_text_file(a.out, out.str());
}

struct TrainArgs {
    std::string labels;
    TrainerConfig trainer;
    std::string out;
};

void train_cmd(const TrainArgs& a) {
    a.trainer.validate();
    std::istringstream in(io::read_text_file(a.labels));
    const auto labels = io::read_labels(in);
    if (labels.empty()) throw MalformedInput(a.labels + ": no labeled frames");
    for (const auto& l : labels) {
        if (l.scales != labels.front().scales) throw MalformedInput(a.labels + ": labels mix scale sets");
        if (l.features.channels != labels.front().features.channels) {
            throw MalformedInput(a.labels + ": labels mix feature channel counts");
        }
    }
    RegressorConfig cfg;
    cfg.in_channels = labels.front().features.channels;
    const auto model = RegressorModel::initialize(cfg, a.trainer.seed, labels.front().scales);
    const auto samples = to_training_samples(labels);
    const TrainResult result = train(model, samples, a.trainer);
    io::write_text_file(a.out, io::model_to_json(result.model).dump(2) + "\n");
    std::cout << "trained on " << samples.size() << " frames, mse " << mean_squared_error(result.model, samples)
              << "\n";
}

struct RunArgs {
    std::string corpus;
    std::string profile;
    std::string policy;
    std::string model;
    std::string scales = "600,480,360,240,128";
    std::uint64_t seed = 0;
    std::string report;
    std::string classes_csv;
    std::string pr_csv;
    std::string hist_csv;
};

void run_cmd(const RunArgs& a) {
    const ScaleSet scales = ScaleSet::parse(a.scales);
    const DetectorProfile profile = load_profile(a.profile);
    std::optional<RegressorModel> model;
    if (!a.model.empty()) model = load_model(a.model);
    const PolicyConfig policy = parse_policy(a.policy, scales, model);
    const auto corpus = load_corpus(a.corpus);
    const SyntheticDetector det(reseeded(profile, a.seed), max_class_label(corpus));
    const PolicyRun run = run_policy(corpus, det, policy, a.seed);
    io::write_text_file(a.report, io::report_to_json(run.report).dump(2) + "\n");
    if (!a.classes_csv.empty()) {
        std::ostringstream out;
        io::write_class_csv(out, run.report);
        io::write_text_file(a.classes_csv, out.str());
    }
    if (!a.pr_csv.empty()) {
        std::ostringstream out;
        io::write_pr_csv(out, run.report);
        io::write_text_file(a.pr_csv, out.str());
    }
    if (!a.hist_csv.empty()) {
        std::ostringstream out;
        io::write_histogram_csv(out, run.report.histogram);
        io::write_text_file(a.hist_csv, out.str());
    }
    std::cout << policy.name() << ": mAP " << run.report.map << ", workload " << run.report.workload << "\n";
}

struct CompareArgs {
    std::string corpus;
    std::string profile;
    std::string policies;
    std::string seeds;
    std::string out;
    std::string prcurves;
    std::string hist;
    std::string model;
    std::string scales = "600,480,360,240,128";
};

void compare_cmd(const CompareArgs& a) {
    const ScaleSet scales = ScaleSet::parse(a.scales);
    const DetectorProfile profile = load_profile(a.profile);
    const auto seeds = parse_seeds(a.seeds);
    std::optional<RegressorModel> model;
    if (!a.model.empty()) model = load_model(a.model);
    std::vector<PolicyConfig> policies;
    for (const auto& token : split_list(a.policies)) policies.push_back(parse_policy(token, scales, model));
    const auto corpus = load_corpus(a.corpus);
    const auto rows = compare_policies(corpus, profile, policies, seeds);
    std::ostringstream table;
    io::write_comparison_csv(table, rows);
    io::write_text_file(a.out, table.str());
    if (!a.prcurves.empty()) {
        make_dir(a.prcurves);
        for (const auto& row : rows) {
            std::ostringstream out;
            io::write_pr_csv(out, row.first_report);
            io::write_text_file(fs::path(a.prcurves) / (file_token(row.policy) + ".csv"), out.str());
        }
    }
    if (!a.hist.empty()) {
        make_dir(a.hist);
        for (const auto& row : rows) {
            std::ostringstream out;
            io::write_histogram_csv(out, row.histogram);
            io::write_text_file(fs::path(a.hist) / (file_token(row.policy) + ".csv"), out.str());
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AdaScale engine: optimal-scale labels, scale regressor and adaptive video detection"};
    app.require_subcommand(1);

    GenCorpusArgs gc;
    auto* c_gen = app.add_subcommand("gen-corpus", "Generate a synthetic video corpus");
    c_gen->add_option("--out", gc.out, "Output corpus (JSON lines)")->required();
    c_gen->add_option("--snippets", gc.snippets, "Number of snippets")->required();
    c_gen->add_option("--frames", gc.frames, "Frames per snippet")->required();
    c_gen->add_option("--classes", gc.classes, "Number of object classes")->required();
    c_gen->add_option("--seed", gc.seed, "Generator seed")->required();
    c_gen->add_option("--profile", gc.profile, "Detector profile; checks the corpus has scale diversity");

    GenLabelsArgs gl;
    auto* c_lab = app.add_subcommand("gen-labels", "Label optimal scales and record regressor features");
    c_lab->add_option("--corpus", gl.corpus, "Input corpus")->required();
    c_lab->add_option("--profile", gl.profile, "Detector profile")->required();
    c_lab->add_option("--scales", gl.scales, "Label scale set")->capture_default_str();
    c_lab->add_option("--seed", gl.seed, "Seed for detector noise and input-scale draws")->required();
    c_lab->add_option("--out", gl.out, "Output labels (JSON lines)")->required();
    c_lab->add_option("--split", gl.split, "Corpus part to label")
        ->check(CLI::IsMember({"train", "validation", "all"}))
        ->capture_default_str();

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Train the scale regressor");
    c_train->add_option("--labels", tr.labels, "Labels from gen-labels")->required();
    c_train->add_option("--epochs", tr.trainer.epochs, "Epochs")->capture_default_str();
    c_train->add_option("--lr", tr.trainer.learning_rate, "Initial learning rate")->capture_default_str();
    c_train->add_option("--decay-epoch", tr.trainer.decay_epoch, "Epoch at which the rate decays")
        ->capture_default_str();
    c_train->add_option("--decay", tr.trainer.decay, "Learning-rate decay factor")->capture_default_str();
    c_train->add_option("--batch", tr.trainer.batch_size, "Mini-batch size")->capture_default_str();
    c_train->add_option("--seed", tr.trainer.seed, "Initialization and shuffle seed")->required();
    c_train->add_option("--out", tr.out, "Output model (JSON)")->required();

    RunArgs ru;
    auto* c_run = app.add_subcommand("run", "Run one scale policy over a corpus and evaluate it");
    c_run->add_option("--corpus", ru.corpus, "Input corpus")->required();
    c_run->add_option("--profile", ru.profile, "Detector profile")->required();
    c_run->add_option("--policy", ru.policy, "fixed:M, random, adascale or multiscale")->required();
    c_run->add_option("--model", ru.model, "Trained regressor (adascale)");
    c_run->add_option("--scales", ru.scales, "Policy scale set")->capture_default_str();
    c_run->add_option("--seed", ru.seed, "Run seed")->required();
    c_run->add_option("--report", ru.report, "Output report (JSON)")->required();
    c_run->add_option("--classes-csv", ru.classes_csv, "Per-class AP/TP/FP table");
    c_run->add_option("--pr-csv", ru.pr_csv, "Precision/recall points");
    c_run->add_option("--hist-csv", ru.hist_csv, "Scale histogram");

    CompareArgs cp;
    auto* c_cmp = app.add_subcommand("compare", "Compare policies over several seeds");
    c_cmp->add_option("--corpus", cp.corpus, "Input corpus")->required();
    c_cmp->add_option("--profile", cp.profile, "Detector profile")->required();
    c_cmp->add_option("--policies", cp.policies, "Comma-separated policies; the first is the baseline")
        ->required();
    c_cmp->add_option("--seeds", cp.seeds, "Comma-separated seeds")->required();
    c_cmp->add_option("--out", cp.out, "Output table (CSV)")->required();
    c_cmp->add_option("--prcurves", cp.prcurves, "Directory for per-policy PR curves");
    c_cmp->add_option("--hist", cp.hist, "Directory for per-policy scale histograms");
    c_cmp->add_option("--model", cp.model, "Trained regressor (adascale)");
    c_cmp->add_option("--scales", cp.scales, "Policy scale set")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    try {
        if (*c_gen) gen_corpus(gc);
        if (*c_lab) gen_labels(gl);
        if (*c_train) train_cmd(tr);
        if (*c_run) run_cmd(ru);
        if (*c_cmp) compare_cmd(cp);
    } catch (const MalformedInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMalformed;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
