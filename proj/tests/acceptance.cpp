// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "adascale/io.hpp"
#include "adascale/pipeline.hpp"
#include "oracles.hpp"

using namespace adascale;
namespace fs = std::filesystem;

namespace {

constexpr int kSeeds = 5;
constexpr int kSnippets = 100;
constexpr int kFrames = 20;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < limit_s;
    if (!pass) ++failures;
    std::printf("[%s] %2d %-28s %s (%.2fs, limit %.0fs)\n", pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
                secs, limit_s);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

Detection random_detection(std::mt19937_64& rng, int classes) {
    std::uniform_real_distribution<double> pos(0.0, 60.0), side(2.0, 30.0), u(0.0, 1.0);
    std::uniform_int_distribution<int> cls(1, classes), coarse(0, 3);
    const double x = pos(rng), y = pos(rng);
    std::vector<double> s(static_cast<std::size_t>(classes) + 1);
    const double top = coarse(rng) == 0 ? 0.5 + 0.1 * coarse(rng) : 0.4 + 0.6 * u(rng);
    const int c = cls(rng);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = k == static_cast<std::size_t>(c) ? top : (1.0 - top) / classes;
    return Detection::make({x, y, x + side(rng), y + side(rng)}, s);
}

// Target decode written out directly, independent of the codec module.
int decode_direct(double t, int base, const ScaleSet& s) {
    const double lo = s.min(), hi = s.max();
    const double ratio = (t + 1.0) / 2.0 * (hi / lo - lo / hi) + lo / hi;
    return static_cast<int>(std::round(std::clamp(ratio * base, lo, hi)));
}

struct SeedRun {
    CorpusSplit split;
    std::unique_ptr<SyntheticDetector> detector;
    RegressorModel model;
    double mse = 0.0;
};

SeedRun train_seed(int s, const ScaleSet& scales) {
    GeneratorConfig g;
    g.snippets = kSnippets;
    g.frames = kFrames;
    SeedRun r;
    const auto corpus = generate_corpus(g, 1000 + static_cast<std::uint64_t>(s));
    r.split = split_corpus(corpus);
    r.detector = std::make_unique<SyntheticDetector>(reseeded(DetectorProfile{}, s), max_class_label(corpus));
    const auto tl = generate_scale_labels(r.split.train, *r.detector, scales, s);
    const auto vl = generate_scale_labels(r.split.validation, *r.detector, scales, s + 77);
    RegressorConfig cfg;
    cfg.in_channels = r.detector->feature_channels();
    TrainerConfig tc;  // lr 1e-4, x0.1 after 1.3 epochs, 2 epochs
    tc.seed = s;
    r.model = train(RegressorModel::initialize(cfg, s, scales), to_training_samples(tl), tc).model;
    r.mse = mean_squared_error(r.model, to_training_samples(vl));
    return r;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return sa.str() == sb.str() && !sa.str().empty();
}

}  // namespace

int main() {
    const ScaleSet reg = regression_scales();

    report(1, "codec round-trip", 1, [&] {
        int ok = 0;
        for (int mi : reg.scales()) {
            for (int mo : reg.scales()) ok += decode_scale(encode_scale_target(mi, mo, reg).value, mi, reg) == mo;
        }
        return Outcome{ok == 25, std::to_string(ok) + "/25 pairs exact"};
    });

    report(2, "codec fixed points", 1, [&] {
        const double same = oracle::encode_direct(600, 600, 128, 600);
        const double half = oracle::encode_direct(480, 240, 128, 600);
        const double e_same = encode_scale_target(600, 600, reg).value;
        const double e_half = encode_scale_target(480, 240, reg).value;
        const bool pass = encode_scale_target(600, 128, reg).value == -1.0 &&
                          encode_scale_target(128, 600, reg).value == 1.0 && std::abs(e_same - same) <= 1e-6 &&
                          std::abs(e_half - half) <= 1e-6 && std::abs(half - (-0.871856)) <= 1e-6;
        return Outcome{pass, fmt("600->600 %.7f (direct %.7f), 480->240 %.7f (direct %.7f)", e_same, same, e_half, half)};
    });

    report(3, "gradient correctness", 10, [&] {
        std::mt19937_64 rng(2024);
        int draws = 0;
        double worst = 0.0;
        for (int attempt = 0; draws < 24 && attempt < 500; ++attempt) {
            RegressorConfig cfg;
            cfg.in_channels = 3;
            cfg.branches = {{1, 3}, {3, 3}};
            const auto m = RegressorModel::initialize(cfg, 500 + attempt);
            FeatureMap x = FeatureMap::zeros(3, 4, 5);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            for (double& v : x.data) v = u(rng);
            if (oracle::forward(m, x).min_abs_preactivation < 1e-2) continue;
            ++draws;
            const double target = u(rng);
            const auto g = backward(m, x, {target}).gradients.flatten();
            const auto theta = m.params.flatten();
            for (std::size_t i = 0; i < theta.size(); ++i) {
                RegressorModel p = m, q = m;
                auto tp = theta, tq = theta;
                tp[i] += 1e-4;
                tq[i] -= 1e-4;
                p.params.assign(tp);
                q.params.assign(tq);
                const double num = (std::pow(forward(p, x) - target, 2) - std::pow(forward(q, x) - target, 2)) / 2e-4;
                worst = std::max(worst, std::abs(g[i] - num) / std::max({std::abs(g[i]), std::abs(num), 1e-6}));
            }
        }
        return Outcome{draws >= 20 && worst <= 1e-4, fmt("%.0f draws, max relative error %.2e", draws, worst)};
    });

    report(4, "NMS and AP oracles", 30, [&] {
        std::mt19937_64 rng(4);
        std::uniform_int_distribution<int> n(0, 50), nd(0, 8), ng(1, 4), coin(0, 1);
        std::uniform_real_distribution<double> thr(0.1, 0.9), u(0.0, 1.0);
        int nms_ok = 0, ap_ok = 0;
        for (int t = 0; t < 1000; ++t) {
            std::vector<Detection> dets;
            const int k = n(rng);
            for (int i = 0; i < k; ++i) dets.push_back(random_detection(rng, 2));
            const double th = thr(rng);
            const auto got = nms(dets, th, 300);
            const auto want = oracle::nms_indices(dets, th, 300);
            bool same = got.size() == want.size();
            for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i] == dets[want[i]];
            nms_ok += same;
        }
        for (int t = 0; t < 1000; ++t) {
            const std::size_t n_gt = ng(rng);
            std::vector<ScoredFlag> flags;
            std::size_t tp = 0;
            const int k = nd(rng);
            for (int i = 0; i < k; ++i) {
                const bool hit = coin(rng) && tp < n_gt;
                tp += hit;
                flags.push_back({coin(rng) ? 0.25 * std::floor(4 * u(rng)) : u(rng), hit});
            }
            ap_ok += *average_precision(flags, n_gt) == oracle::average_precision(flags, n_gt);
        }
        return Outcome{nms_ok == 1000 && ap_ok == 1000,
                       fmt("NMS %.0f/1000, AP %.0f/1000 exact", nms_ok, ap_ok)};
    });

    report(5, "scale metric vs brute force", 10, [&] {
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> nscales(1, 5), nbox(0, 10), coin(0, 2);
        std::uniform_real_distribution<double> u(0.0, 1.0), off(-4.0, 4.0);
        const std::vector<Annotation> gts{{{0, 0, 40, 40}, 1}, {{100, 100, 130, 150}, 2}};
        const std::vector<int> pool{600, 480, 360, 240, 128};
        int ok = 0;
        for (int t = 0; t < 1000; ++t) {
            std::map<int, ScaleDetections> per;
            std::map<int, std::vector<double>> fg;
            for (int s = 0, k = nscales(rng); s < k; ++s) {
                ScaleDetections sd;
                for (int i = 0, m = nbox(rng); i < m; ++i) {
                    const auto& g = gts[static_cast<std::size_t>(i) % 2];
                    BoundingBox b = g.box;
                    if (coin(rng) == 0) b = {b.x_min + 200, b.y_min, b.x_max + 200, b.y_max};  // background
                    b = {b.x_min + off(rng), b.y_min + off(rng), b.x_max + off(rng), b.y_max + off(rng)};
                    const double p = u(rng);
                    std::vector<double> sc{(1 - p) / 2, (1 - p) / 2, (1 - p) / 2};
                    sc[static_cast<std::size_t>(g.class_label)] += p - (1 - p) / 2;
                    sd.detections.push_back(Detection::make(b, sc));
                }
                sd.assignments = assign_foreground(sd.detections, gts);
                auto& losses = fg[pool[static_cast<std::size_t>(s)]];
                for (std::size_t i = 0; i < sd.detections.size(); ++i) {
                    if (sd.assignments[i].is_foreground()) {
                        losses.push_back(box_loss(sd.detections[i], sd.assignments[i], gts).total);
                    }
                }
                per.emplace(pool[static_cast<std::size_t>(s)], std::move(sd));
            }
            const auto got = compute_scale_metric(per, gts);
            const auto want = oracle::scale_metric(fg);
            bool same = got.degenerate == want.degenerate && got.n_min == want.n_min && got.optimal_scale == want.optimal;
            for (const auto& e : got.entries) {
                if (!e.metric) continue;
                same = same && e.selected.size() == got.n_min && std::abs(*e.metric - want.metric.at(e.scale)) <= 1e-12;
            }
            ok += same;
        }
        return Outcome{ok == 1000, std::to_string(ok) + "/1000 instances match, |A_m| = n_min"};
    });

    std::vector<SeedRun> runs;
    report(6, "regressor learnability", 120, [&] {
        double sum = 0.0;
        std::string per;
        for (int s = 0; s < kSeeds; ++s) {
            runs.push_back(train_seed(s, reg));
            sum += runs.back().mse;
            per += fmt(" %.4f", runs.back().mse);
        }
        const double mean = sum / kSeeds;
        return Outcome{mean <= 0.05, fmt("held-out MSE %.4f (<= 0.05); per seed", mean) + per};
    });

    std::vector<std::vector<FrameLog>> logs;
    report(7, "trend reproduction", 300, [&] {
        if (runs.size() != kSeeds) return Outcome{false, "criterion 6 did not produce models"};
        double d600 = 0, drand = 0, wratio = 0;
        RunOptions opts;
        opts.record_features = true;
        for (int s = 0; s < kSeeds; ++s) {
            const auto& r = runs[static_cast<std::size_t>(s)];
            const auto f600 = run_policy(r.split.validation, *r.detector, PolicyConfig::fixed(600), s).report;
            const auto rnd = run_policy(r.split.validation, *r.detector, PolicyConfig::random(), s).report;
            auto ada = run_policy(r.split.validation, *r.detector, PolicyConfig::adascale(r.model), s, opts);
            d600 += ada.report.map - f600.map;
            drand += ada.report.map - rnd.map;
            wratio += ada.report.workload / f600.workload;
            logs.push_back(std::move(ada.log));
        }
        d600 *= 100.0 / kSeeds;
        drand *= 100.0 / kSeeds;
        wratio /= kSeeds;
        return Outcome{d600 >= 0.5 && drand >= 2.0 && wratio <= 0.75,
                       fmt("mAP vs fixed(600) %+.2f pts (>= +0.5), vs random %+.2f pts (>= +2), workload %.3fx (<= 0.75)",
                           d600, drand, wratio)};
    });

    report(8, "ablation direction", 300, [&] {
        if (runs.size() != kSeeds) return Outcome{false, "criterion 6 did not produce models"};
        const ScaleSet two({600, 360});
        double w5 = 0, w2 = 0;
        for (int s = 0; s < kSeeds; ++s) {
            const auto& r = runs[static_cast<std::size_t>(s)];
            const auto small = train_seed(s, two);
            w5 += run_policy(r.split.validation, *r.detector, PolicyConfig::adascale(r.model), s).report.workload;
            w2 += run_policy(small.split.validation, *small.detector, PolicyConfig::adascale(small.model), s)
                      .report.workload;
        }
        return Outcome{w5 <= w2, fmt("mean workload S5 %.4g <= S{600,360} %.4g", w5 / kSeeds, w2 / kSeeds)};
    });

    report(9, "CLI determinism", 60, [&] {
#ifndef ADASCALE_CLI_PATH
        return Outcome{false, "built without the command-line tool"};
#else
        const fs::path root = fs::temp_directory_path() / ("adascale_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(root);
        const std::string cli = ADASCALE_CLI_PATH;
        const std::vector<std::string> files{"corpus.jsonl", "labels.jsonl", "model.json",    "run.json",
                                             "classes.csv",  "pr.csv",       "hist.csv",      "table.csv",
                                             "pr/adascale.csv", "hist/fixed_600.csv"};
        for (const char* rep : {"a", "b"}) {
            const fs::path d = root / rep;
            fs::create_directories(d);
            std::ofstream(d / "profile.json") << "{}\n";
            const std::string p = d.string() + "/";
            const std::vector<std::string> cmds{
                "gen-corpus --out " + p + "corpus.jsonl --snippets 12 --frames 6 --classes 3 --seed 7 --profile " + p +
                    "profile.json",
                "gen-labels --corpus " + p + "corpus.jsonl --profile " + p + "profile.json --scales 600,480,360,240,128 "
                    "--seed 3 --out " + p + "labels.jsonl",
                "train --labels " + p + "labels.jsonl --epochs 2 --lr 1e-4 --decay-epoch 1.3 --decay 0.1 --seed 3 --out " +
                    p + "model.json",
                "run --corpus " + p + "corpus.jsonl --profile " + p + "profile.json --policy adascale --model " + p +
                    "model.json --scales 600,480,360,240,128 --seed 5 --report " + p + "run.json --classes-csv " + p +
                    "classes.csv --pr-csv " + p + "pr.csv --hist-csv " + p + "hist.csv",
                "compare --corpus " + p + "corpus.jsonl --profile " + p + "profile.json --policies fixed:600,random,"
                    "adascale,multiscale --model " + p + "model.json --seeds 1,2 --out " + p + "table.csv --prcurves " +
                    p + "pr --hist " + p + "hist"};
            for (const auto& c : cmds) {
                const std::string line = cli + " " + c + " > /dev/null";
                if (std::system(line.c_str()) != 0) return Outcome{false, "command failed: " + c};
            }
        }
        int same = 0;
        for (const auto& f : files) same += same_bytes(root / "a" / f, root / "b" / f);
        fs::remove_all(root);
        return Outcome{same == static_cast<int>(files.size()),
                       std::to_string(same) + "/" + std::to_string(files.size()) + " output files byte-identical"};
#endif
    });

    report(10, "scale trace replay", 30, [&] {
        if (logs.size() != kSeeds) return Outcome{false, "criterion 7 did not record runs"};
        std::size_t frames = 0, ok = 0;
        for (int s = 0; s < kSeeds; ++s) {
            const auto& model = runs[static_cast<std::size_t>(s)].model;
            const auto& log = logs[static_cast<std::size_t>(s)];
            for (std::size_t k = 0; k < log.size(); ++k) {
                ++frames;
                int want = model.scales.max();
                if (log[k].frame_index > 0) {
                    const auto& prev = log[k - 1];
                    want = decode_direct(oracle::forward(model, prev.features).output, prev.base_size, model.scales);
                }
                ok += log[k].scale == want;
            }
        }
        return Outcome{frames > 0 && ok == frames,
                       std::to_string(ok) + "/" + std::to_string(frames) + " logged scales reproduced"};
    });

    std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
