// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "leukex/augment.hpp"
#include "leukex/error.hpp"
#include "leukex/explain.hpp"
#include "leukex/metrics.hpp"
#include "leukex/reference_net.hpp"
#include "leukex/sampling.hpp"
#include "leukex/surrogate.hpp"
#include "planted.hpp"
#include "ridge_oracle.hpp"
#include "test_util.hpp"

namespace leukex {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string shortest(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

unsigned all_cores() {
    return std::max(1u, std::thread::hardware_concurrency());
}

Outcome class_weights() {
    Outcome o;
    std::vector<int> labels(3389, 0);
    labels.insert(labels.end(), 7272, 1);
    const auto w = sampling::compute_class_weights(sampling::LabelVector(labels, 2));
    o.require(shortest(w[0]) == "1.5728828562997934", "class 0 weight " + shortest(w[0]));
    o.require(shortest(w[1]) == "0.7330170517051705", "class 1 weight " + shortest(w[1]));
    const auto cli = testing::run_cli({"weights", "--manifest", "/nonexistent"});
    o.require(cli.code == 2, "weights on a missing manifest should exit 2");
    if (o.pass) {
        o.detail = "{0: " + shortest(w[0]) + ", 1: " + shortest(w[1]) + "}";
    }
    return o;
}

bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol;
}

Outcome metric_oracle() {
    Outcome o;
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 1000 && o.pass; ++trial) {
        const std::size_t n = 1 + gen() % 300;
        std::vector<int> y(n);
        std::vector<double> p(n);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double pos_rate = u(gen);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = u(gen) < pos_rate ? 1 : 0;
            // Occasional exact 0, 0.5 and 1 exercise clipping and the threshold.
            const auto pick = gen() % 20;
            p[i] = pick == 0 ? 0.0 : pick == 1 ? 1.0 : pick == 2 ? 0.5 : u(gen);
        }
        const auto pm = metrics::ProbabilityMatrix::from_positive(p);
        double tp = 0, fp = 0, tn = 0, fn = 0, ll = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool pred = p[i] >= 0.5;
            tp += pred && y[i] == 1;
            fp += pred && y[i] == 0;
            tn += !pred && y[i] == 0;
            fn += !pred && y[i] == 1;
            const double q = std::min(std::max(y[i] ? p[i] : 1.0 - p[i], 1e-15), 1.0 - 1e-15);
            ll -= std::log(q);
        }
        ll /= static_cast<double>(n);
        const double acc = (tp + tn) / static_cast<double>(n);
        const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
        const auto r = metrics::evaluate(y, pm);
        const std::string at = " at trial " + std::to_string(trial);
        o.require(r.counts.tp == tp && r.counts.fp == fp && r.counts.tn == tn && r.counts.fn == fn,
                  "confusion" + at);
        o.require(close(r.accuracy, acc, 1e-12), "accuracy" + at);
        o.require(close(r.precision, prec, 1e-12), "precision" + at);
        o.require(close(r.recall, rec, 1e-12), "recall" + at);
        o.require(close(r.f1, f1, 1e-12), "f1" + at);
        o.require(close(r.logloss, ll, 1e-12 * std::max(1.0, ll)), "log loss" + at);
    }
    const auto half = metrics::ProbabilityMatrix::from_positive(std::vector<double>(64, 0.5));
    std::vector<int> y(64);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = static_cast<int>(i % 3 == 0);
    }
    o.require(close(metrics::log_loss(y, half), std::log(2.0), 1e-12), "log_loss(p=0.5) != ln 2");
    if (o.pass) {
        o.detail = "1000 instances within 1e-12; uniform log loss = ln 2";
    }
    return o;
}

Outcome stratification() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500 && o.pass; ++trial) {
        const int k = 2 + static_cast<int>(gen() % 4);
        const int n_classes = 2 + static_cast<int>(gen() % 2);
        const std::size_t n = static_cast<std::size_t>(n_classes * k) + gen() % (2001 - n_classes * k);
        std::vector<int> labels(n);
        std::vector<std::size_t> count(static_cast<std::size_t>(n_classes), 0);
        const double skew = 0.05 + 0.9 * u(gen);
        for (std::size_t i = 0; i < n; ++i) {
            // Guarantee every class at least k members, then draw the rest skewed.
            const int c = i < static_cast<std::size_t>(n_classes * k)
                              ? static_cast<int>(i) % n_classes
                              : (u(gen) < skew ? 0 : 1 + static_cast<int>(gen() % (n_classes - 1)));
            labels[i] = c;
            ++count[static_cast<std::size_t>(c)];
        }
        std::shuffle(labels.begin(), labels.end(), gen);
        const auto fa = sampling::stratified_kfold(sampling::LabelVector(labels, n_classes), k, gen());
        const std::string at = " at trial " + std::to_string(trial);
        o.require(fa.fold_of.size() == n, "fold_of length" + at);
        std::vector<std::vector<std::size_t>> per(static_cast<std::size_t>(k),
                                                  std::vector<std::size_t>(static_cast<std::size_t>(n_classes), 0));
        std::vector<int> seen(n, 0);
        for (int f = 0; f < k; ++f) {
            const auto s = sampling::fold_split(fa, f);
            o.require(s.train.size() + s.validation.size() == n, "train/validation do not cover the set" + at);
            std::set<std::size_t> tr(s.train.begin(), s.train.end());
            for (auto i : s.validation) {
                o.require(!tr.count(i), "index in both train and validation" + at);
                ++seen[i];
                ++per[static_cast<std::size_t>(f)][static_cast<std::size_t>(labels[i])];
            }
        }
        o.require(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }),
                  "validation folds do not partition the index set" + at);
        for (int c = 0; c < n_classes; ++c) {
            std::size_t lo = n;
            std::size_t hi = 0;
            for (int f = 0; f < k; ++f) {
                lo = std::min(lo, per[static_cast<std::size_t>(f)][static_cast<std::size_t>(c)]);
                hi = std::max(hi, per[static_cast<std::size_t>(f)][static_cast<std::size_t>(c)]);
            }
            o.require(hi - lo <= 1, "class " + std::to_string(c) + " count spread > 1" + at);
        }
    }
    const double secs = seconds_since(t0);
    o.require(secs < 10.0, "took " + shortest(secs) + " s");
    if (o.pass) {
        o.detail = "500 cases in " + shortest(std::round(secs * 1000) / 1000) + " s";
    }
    return o;
}

Outcome augmentation() {
    Outcome o;
    for (std::uint32_t s = 0; s < 5; ++s) {
        const auto t = testing::noise_tensor(kModelSide, kModelSide, s);
        o.require(augment::flip_vertical(augment::flip_vertical(t)) == t, "vertical flip is not an involution");
        o.require(augment::flip_horizontal(augment::flip_horizontal(t)) == t, "horizontal flip is not an involution");
        o.require(augment::transpose_gate(augment::transpose_gate(t, 1.0), 1.0) == t, "transpose is not an involution");
        o.require(augment::transpose_gate(t, 0.75) == t, "transpose applied at u = threshold");
        const auto r = testing::noise_tensor(7, 11, s);
        const auto rt = augment::transpose_gate(r, 0.9);
        o.require(rt.height() == 11 && rt.width() == 7 && rt.at(2, 5, 1) == r.at(5, 2, 1), "transpose swaps axes");
    }
    const augment::AugmentConfig cfg;
    RandomStream rng(2025);
    int transposed = 0;
    for (int i = 0; i < 10000; ++i) {
        transposed += augment::draw_trace(rng, cfg).transposed ? 1 : 0;
    }
    const double freq = transposed / 10000.0;
    o.require(std::abs(freq - 0.25) <= 0.02, "transpose frequency " + shortest(freq));
    RandomStream arng(9);
    for (std::uint32_t s = 0; s < 40; ++s) {
        auto t = testing::noise_tensor(kModelSide, kModelSide, 100 + s);
        if (s % 4 == 0) {
            t = testing::constant_tensor(kModelSide, kModelSide, 1.0f, 1.0f, 0.0f);
        }
        const auto a = augment::augment_sample(t, arng, cfg);
        o.require(a.height() == kModelSide && a.width() == kModelSide && a.channels() == kChannels,
                  "augmented shape changed");
        const auto d = a.data();
        o.require(std::all_of(d.begin(), d.end(), [](float v) { return v >= 0.0f && v <= 1.0f; }),
                  "augmented value outside [0,1]");
    }
    if (o.pass) {
        o.detail = "transpose frequency " + shortest(freq) + " over 10000 draws";
    }
    return o;
}

Outcome reference_training() {
    Outcome o;
    model::ReferenceNetConfig small;
    small.input_side = 8;
    small.hidden_units = 8;
    small.seed = 3;
    const auto probe = testing::bright_dark(24, 8, 4);
    const auto batch = model::make_features(probe, small.input_side);
    const sampling::ClassWeights w{{1.5728828562997934, 0.7330170517051705}};
    auto params = model::initialize_parameters(small);
    // Move off the initialization so ReLU units are a mix of active and inactive.
    for (std::size_t i = 0; i < params.count(); i += 7) {
        params.coord(i) *= 1.5;
    }
    const double err = model::grad_check(params, batch, w, 200, 1);
    o.require(err < 1e-4, "gradient check error " + shortest(err));
    const auto doubled = [](const model::Parameters& p, const model::FeatureBatch& b, const sampling::ClassWeights& cw) {
        auto r = model::loss_and_gradient(p, b, cw);
        for (std::size_t i = 0; i < r.gradient.count(); ++i) {
            r.gradient.coord(i) *= 2.0;
        }
        return r;
    };
    const double mutant = model::grad_check(params, batch, w, 200, 1, doubled);
    o.require(mutant > 0.5, "x2 mutant not rejected: " + shortest(mutant));

    const auto data = testing::bright_dark(200, 32, 11);
    for (const auto& c : data) {
        const auto d = c.pixels.data();
        const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
        o.require(c.label == (mean > 0.5 ? 1 : 0) && (mean > 0.7 || mean < 0.3),
                  "synthetic set not separable by its mean");
    }
    model::ReferenceNetConfig cfg;
    cfg.epochs = 200;
    cfg.workers = 1;
    std::vector<int> labels;
    for (const auto& c : data) {
        labels.push_back(c.label);
    }
    const auto t0 = Clock::now();
    const auto r = model::train_reference(data, data, cfg, sampling::compute_class_weights(sampling::LabelVector(labels, 2)));
    const double secs = seconds_since(t0);
    int reached = 0;
    for (const auto& e : r.history.epochs()) {
        if (e.accuracy >= 0.99) {
            reached = e.epoch;
            break;
        }
    }
    o.require(reached > 0, "train accuracy stayed below 0.99 for 200 epochs");
    o.require(secs < 60.0, "training took " + shortest(secs) + " s");
    if (o.pass) {
        std::ostringstream d;
        d << "grad error " << err << ", mutant " << mutant << ", 99% train accuracy at epoch " << reached << " ("
          << std::round(secs * 10) / 10 << " s)";
        o.detail = d.str();
    }
    return o;
}

Outcome surrogate() {
    Outcome o;
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 60 && o.pass; ++trial) {
        const std::size_t s = 1 + gen() % 12;
        const std::size_t n = s + 2 + gen() % (4097 - s - 2);
        RandomStream rng(gen());
        const auto m = explain::sample_masks(s, n, rng);
        std::vector<double> y(n);
        for (auto& v : y) {
            v = 0.5 + 0.5 * u(gen);
        }
        const auto w = explain::kernel_weights(m);
        const double alpha = trial % 3 == 0 ? 1e-3 : 1.0;
        try {
            const auto fit = explain::fit_surrogate(m, y, w, alpha);
            const auto ref = testing::dense_ridge(m, y, w, alpha);
            worst = std::max(worst, std::abs(fit.intercept - ref(0)));
            for (std::size_t j = 0; j < s; ++j) {
                worst = std::max(worst, std::abs(fit.coefficients[j] - ref(static_cast<Eigen::Index>(j + 1))));
            }
        } catch (const NumericError&) {
            o.require(false, "fit rejected a ridge-regularized system at trial " + std::to_string(trial));
        }
    }
    o.require(worst <= 1e-8, "max deviation from the dense oracle " + shortest(worst));

    const std::size_t s = 12;
    RandomStream rng(5);
    const auto m = explain::sample_masks(s, 1000, rng);
    std::vector<double> beta(s);
    for (auto& b : beta) {
        b = u(gen);
    }
    const double b0 = 0.2;
    std::vector<double> y(m.rows, b0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t j = 0; j < s; ++j) {
            y[r] += beta[j] * m(r, j);
        }
    }
    const auto fit = explain::fit_surrogate(m, y, explain::kernel_weights(m), 1e-8);
    double coef_err = std::abs(fit.intercept - b0);
    for (std::size_t j = 0; j < s; ++j) {
        coef_err = std::max(coef_err, std::abs(fit.coefficients[j] - beta[j]));
    }
    o.require(coef_err <= 1e-6, "affine recovery error " + shortest(coef_err));
    o.require(fit.r2 >= 0.999, "affine R^2 " + shortest(fit.r2));
    if (o.pass) {
        std::ostringstream d;
        d << "oracle deviation " << worst << ", affine error " << coef_err << ", R^2 " << fit.r2;
        o.detail = d.str();
    }
    return o;
}

Outcome planted_region() {
    Outcome o;
    const auto t0 = Clock::now();
    int first = 0;
    int segments_min = 1 << 30;
    int segments_max = 0;
    for (std::uint32_t run = 0; run < 100; ++run) {
        const auto scene = testing::planted_scene(run);
        const testing::PlantedClassifier clf(scene);
        explain::ExplainParams p;
        p.seed = run;
        p.workers = all_cores();
        const auto res = explain::explain(scene.image, clf, p);
        segments_min = std::min(segments_min, res.segments.n_segments);
        segments_max = std::max(segments_max, res.segments.n_segments);
        const int target = testing::covering_segment(scene, res.segments);
        first += res.explanation.segment_weights.front().segment == target ? 1 : 0;
    }
    const double secs = seconds_since(t0);
    o.require(first >= 95, "planted segment ranked first in " + std::to_string(first) + "/100 runs");
    o.require(secs < 120.0, "took " + shortest(secs) + " s");
    std::ostringstream d;
    d << first << "/100 runs, " << segments_min << ".." << segments_max << " segments, " << std::round(secs) << " s";
    if (o.pass) {
        o.detail = d.str();
    } else {
        o.detail += " (" + d.str() + ")";
    }
    return o;
}

Outcome explain_determinism() {
    Outcome o;
    testing::TempDir dir("acceptance_explain");
    model::ReferenceNetConfig cfg;
    cfg.seed = 17;
    const model::ReferenceNet net(model::initialize_parameters(cfg), cfg);
    net.save(dir / "model.json");
    testing::write_bmp(dir / "cell.bmp", [] {
        Rgb8Image img(120, 160);
        std::mt19937 gen(8);
        for (int r = 0; r < img.height; ++r) {
            for (int c = 0; c < img.width; ++c) {
                const bool blob = (r - 60) * (r - 60) + (c - 70) * (c - 70) < 900;
                auto* px = img.pixel(r, c);
                px[0] = static_cast<std::uint8_t>((blob ? 120 : 220) + gen() % 20);
                px[1] = static_cast<std::uint8_t>((blob ? 60 : 200) + gen() % 20);
                px[2] = static_cast<std::uint8_t>((blob ? 160 : 210) + gen() % 20);
            }
        }
        return img;
    }());
    const std::vector<std::string> files{"explanation.json", "segments.png", "boundaries.png", "heatmap.png",
                                         "heatmap_positive.png"};
    for (const char* out : {"a", "b"}) {
        const auto r = testing::run_cli({"explain", (dir / "cell.bmp").string(), "--model", (dir / "model.json").string(),
                                         "--out-dir", (dir / out).string(), "--seed", "42", "--workers",
                                         out[0] == 'a' ? "1" : "4"});
        o.require(r.code == 0, "explain exited " + std::to_string(r.code) + ": " + r.err);
    }
    for (const auto& f : files) {
        if (!o.pass) {
            break;
        }
        const auto a = testing::read_bytes(dir / ("a/" + f));
        const auto b = testing::read_bytes(dir / ("b/" + f));
        o.require(!a.empty() && a == b, f + " differs between runs");
    }
    if (o.pass) {
        o.detail = "5 artifacts byte-identical (1 vs 4 workers)";
    }
    return o;
}

Outcome protocol_fidelity() {
    Outcome o;
    testing::TempDir dir("acceptance_protocol");
    testing::write_bright_dark_tree(dir / "data", 12);
    const auto p = [&](const std::string& rel) { return (dir / rel).string(); };
    auto r = testing::run_cli({"ingest", p("data"), "--out", p("manifest.jsonl")});
    o.require(r.code == 0, "ingest: " + r.err);
    r = testing::run_cli({"split", "--manifest", p("manifest.jsonl"), "--out", p("folds.json")});
    o.require(r.code == 0, "split: " + r.err);
    r = testing::run_cli({"train-ref", "--manifest", p("manifest.jsonl"), "--folds", p("folds.json"), "--out-dir",
                          p("run")});
    o.require(r.code == 0, "train-ref: " + r.err);
    if (!o.pass) {
        return o;
    }
    const auto folds = json::parse(testing::read_text(dir / "folds.json"));
    const auto report = json::parse(testing::read_text(dir / "run/report.json"));
    const auto model = json::parse(testing::read_text(dir / "run/model.json"));
    const json expected{{"k", 3}, {"epochs", 35}, {"batch_size", 32}, {"report_fold", 1}};
    o.require(folds.at("k") == 3, "folds.json k = " + folds.at("k").dump());
    o.require(report.at("fold") == 1, "report fold = " + report.at("fold").dump());
    for (const auto& [key, value] : expected.items()) {
        o.require(report.at("protocol").at(key) == value, "report protocol " + key + " = " +
                                                              report.at("protocol").at(key).dump());
    }
    o.require(model.at("config").at("epochs") == 35 && model.at("config").at("batch_size") == 32,
              "model config epochs/batch_size");
    o.require(report.contains("meta") && report.at("meta").contains("config_digest"), "report lacks meta");

    std::istringstream csv(testing::read_text(dir / "run/history.csv"));
    std::string header;
    std::getline(csv, header);
    o.require(header == "epoch,loss,accuracy,f1,val_loss,val_accuracy,val_f1", "history header: " + header);
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) {
        rows += std::count(line.begin(), line.end(), ',') == 6 ? 1 : 0;
    }
    o.require(rows == 35, "history rows " + std::to_string(rows));
    if (o.pass) {
        o.detail = "protocol " + report.at("protocol").dump() + ", 6 series x 35 epochs";
    }
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace
}  // namespace leukex

int main() {
    using namespace leukex;
    const std::vector<Criterion> criteria{
        {1, "class weights", class_weights},
        {2, "metric oracle equivalence", metric_oracle},
        {3, "stratification", stratification},
        {4, "augmentation", augmentation},
        {5, "reference training", reference_training},
        {6, "surrogate fit", surrogate},
        {7, "planted region", planted_region},
        {8, "explain determinism", explain_determinism},
        {9, "protocol fidelity", protocol_fidelity},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
