#include "leukex/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include "CLI11.hpp"

#include "leukex/augment.hpp"
#include "leukex/bmp.hpp"
#include "leukex/digest.hpp"
#include "leukex/error.hpp"
#include "leukex/explain.hpp"
#include "leukex/imagestore.hpp"
#include "leukex/interchange.hpp"
#include "leukex/metrics.hpp"
#include "leukex/parallel.hpp"
#include "leukex/png.hpp"
#include "leukex/reference_net.hpp"
#include "leukex/render.hpp"
#include "leukex/sampling.hpp"

namespace leukex::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json artifact_meta(std::uint64_t seed, const json& config) {
    return json{{"seed", seed}, {"config_digest", sha256_hex(config.dump())}, {"tool_version", kToolVersion}};
}

namespace {

struct IngestArgs {
    std::string root;
    std::string out = "manifest.jsonl";
    std::string patient_pattern;
    std::vector<std::string> labels;
    unsigned workers = 0;
};

struct WeightsArgs {
    std::string manifest = "manifest.jsonl";
    std::string out = "weights.json";
};

struct SplitArgs {
    std::string manifest = "manifest.jsonl";
    std::string out = "folds.json";
    int k = sampling::kDefaultFolds;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.0;
    bool check = false;
};

struct TrainArgs {
    std::string manifest = "manifest.jsonl";
    std::string folds = "folds.json";
    std::string out_dir = ".";
    int fold = sampling::kDefaultReportFold;
    std::uint64_t seed = 0;
    int epochs = 35;
    int batch_size = 32;
    int hidden = 32;
    int input_side = 32;
    double learning_rate = 1e-3;
    bool augment = true;
    unsigned workers = 0;
};

struct EvaluateArgs {
    std::string manifest = "manifest.jsonl";
    std::string folds = "folds.json";
    std::string model;
    std::string out = "report.json";
    int fold = sampling::kDefaultReportFold;
    bool holdout = false;
    unsigned workers = 0;
};

struct ExplainArgs {
    std::string image;
    std::string model;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int n_segments = 50;
    double compactness = 10.0;
    int slic_iterations = 10;
    std::size_t samples = 1000;
    double kernel_width = explain::kDefaultKernelWidth;
    double alpha = explain::kDefaultRidgeAlpha;
    int top_k = explain::kDefaultTopK;
    bool positive_only = true;
    unsigned workers = 0;
};

void write_json(const fs::path& path, const json& j) {
    imagestore::write_text_file(path, j.dump(2) + "\n");
}

std::string file_digest(const fs::path& path) {
    return sha256_hex(imagestore::read_file_bytes(path));
}

// Fills options the command line left unset from a flat key = value file.
void apply_config_file(CLI::App& sub, const std::string& path) {
    if (path.empty()) {
        return;
    }
    if (!fs::is_regular_file(path)) {
        throw CLI::FileError::Missing(path);
    }
    for (const auto& item : CLI::ConfigTOML().from_file(path)) {
        if (!item.parents.empty()) {
            continue;
        }
        CLI::Option* opt = nullptr;
        try {
            opt = sub.get_option("--" + item.name);
        } catch (const CLI::OptionNotFound&) {
            continue;
        }
        if (opt->count() > 0 || opt->get_name() == "--config") {
            continue;
        }
        opt->add_result(item.inputs);
        opt->run_callback();
    }
}

struct LoadedModel {
    std::unique_ptr<model::Classifier> classifier;
    json describe;
};

LoadedModel load_model(const fs::path& path) {
    if (!fs::is_regular_file(path)) {
        throw ModelError("model file not found: " + path.string());
    }
    LoadedModel m;
    if (path.extension() == ".onnx") {
        const auto sidecar = model::InterchangeModelHandle::default_sidecar(path);
        const auto handle = model::InterchangeModelHandle::from_sidecar(path, sidecar);
        m.classifier = model::load_interchange(handle);
        m.describe = {{"kind", "onnx"}, {"digest", file_digest(path)}, {"sidecar_digest", file_digest(sidecar)}};
    } else {
        auto net = std::make_unique<model::ReferenceNet>(model::ReferenceNet::load(path));
        m.describe = {{"kind", "reference"}, {"digest", file_digest(path)}, {"config", net->config()}};
        m.classifier = std::move(net);
    }
    return m;
}

struct FoldsFile {
    sampling::FoldAssignment assignment;
    double holdout_fraction = 0.0;
    std::string manifest_digest;
};

FoldsFile read_folds(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open folds file " + path.string());
    }
    try {
        const json j = json::parse(in);
        if (j.value("schema", "") != "leukex.folds") {
            throw IngestError("not a folds file: " + path.string());
        }
        FoldsFile f;
        f.assignment = j.get<sampling::FoldAssignment>();
        f.holdout_fraction = j.value("holdout_fraction", 0.0);
        f.manifest_digest = j.value("manifest_digest", "");
        return f;
    } catch (const json::exception& e) {
        throw IngestError("malformed folds file " + path.string() + ": " + e.what());
    }
}

sampling::LabelVector manifest_labels(const imagestore::Manifest& m) {
    return sampling::LabelVector(m.labels(), 2);
}

std::vector<imagestore::CellImage> load_images(const imagestore::Manifest& m, std::span<const std::size_t> indices,
                                               unsigned workers) {
    std::vector<imagestore::CellImage> out(indices.size());
    parallel_for(indices.size(), resolve_workers(workers),
                 [&](std::size_t i) { out[i] = imagestore::load_cell_image(m, m.records.at(indices[i])); });
    return out;
}

metrics::ProbabilityMatrix predict_all(const model::Classifier& c, std::span<const imagestore::CellImage> images,
                                       unsigned workers) {
    constexpr std::size_t kBatch = 32;
    const std::size_t n = images.size();
    const std::size_t cols = c.n_classes();
    std::vector<double> values(n * cols, 0.0);
    const std::size_t batches = (n + kBatch - 1) / kBatch;
    parallel_for(batches, resolve_workers(workers), [&](std::size_t b) {
        const std::size_t start = b * kBatch;
        const std::size_t end = std::min(n, start + kBatch);
        std::vector<ImageTensor> batch;
        for (std::size_t i = start; i < end; ++i) {
            batch.push_back(images[i].pixels);
        }
        const auto p = c.predict_proba(batch);
        std::copy(p.values().begin(), p.values().end(), values.begin() + static_cast<std::ptrdiff_t>(start * cols));
    });
    return metrics::ProbabilityMatrix(n, cols, std::move(values));
}

void check_folds_match(const FoldsFile& f, const imagestore::Manifest& m, const fs::path& manifest_path) {
    if (f.assignment.fold_of.size() != m.records.size()) {
        throw IngestError("folds file covers " + std::to_string(f.assignment.fold_of.size()) +
                          " samples but the manifest has " + std::to_string(m.records.size()));
    }
    if (!f.manifest_digest.empty() && f.manifest_digest != file_digest(manifest_path)) {
        throw IngestError("folds file was generated from a different manifest");
    }
}

json protocol_block(int k, int epochs, int batch_size, int report_fold) {
    return json{{"k", k}, {"epochs", epochs}, {"batch_size", batch_size}, {"report_fold", report_fold}};
}

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
    imagestore::LabelRule rule = imagestore::default_label_rule();
    if (!a.labels.empty()) {
        rule.clear();
        for (const auto& spec : a.labels) {
            const auto eq = spec.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ArgumentError("label rule '" + spec + "' is not of the form name=class");
            }
            int cls = 0;
            const auto* first = spec.data() + eq + 1;
            const auto* last = spec.data() + spec.size();
            const auto res = std::from_chars(first, last, cls);
            if (res.ec != std::errc{} || res.ptr != last || (cls != 0 && cls != 1)) {
                throw ArgumentError("label rule '" + spec + "' needs class 0 or 1");
            }
            rule[spec.substr(0, eq)] = cls;
        }
    }
    imagestore::IngestOptions opts;
    opts.patient_pattern = a.patient_pattern;
    opts.workers = resolve_workers(a.workers);
    auto result = imagestore::ingest(a.root, rule, opts);
    for (const auto& w : result.warnings) {
        err << "warning: " << w << '\n';
    }
    json cfg{{"command", "ingest"}, {"label_rule", rule}, {"patient_pattern", a.patient_pattern}};
    result.manifest.meta = artifact_meta(0, cfg);
    imagestore::write_manifest(result.manifest, a.out);
    out << result.manifest.records.size() << " images, " << result.duplicates << " duplicates\n";
    return kExitOk;
}

int cmd_weights(const WeightsArgs& a, std::ostream& out) {
    const auto m = imagestore::read_manifest(a.manifest);
    const auto labels = manifest_labels(m);
    const auto w = sampling::compute_class_weights(labels);
    const auto counts = labels.counts();
    json counts_j = json::object();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        counts_j[std::to_string(c)] = counts[c];
    }
    json cfg{{"command", "weights"}, {"manifest_digest", file_digest(a.manifest)}};
    json doc{{"schema", "leukex.weights"}, {"weights", w}, {"counts", counts_j}, {"meta", artifact_meta(0, cfg)}};
    write_json(a.out, doc);
    out << json(w).dump() << '\n';
    return kExitOk;
}

int cmd_split(const SplitArgs& a, std::ostream& out, std::ostream& err) {
    const auto m = imagestore::read_manifest(a.manifest);
    const auto labels = manifest_labels(m);
    const auto holdout = sampling::stratified_holdout(labels, a.holdout_fraction, a.seed);

    std::vector<bool> held(labels.size(), false);
    for (auto i : holdout) {
        held[i] = true;
    }
    std::vector<std::size_t> pool;
    std::vector<int> pool_y;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!held[i]) {
            pool.push_back(i);
            pool_y.push_back(labels.y[i]);
        }
    }
    const auto inner = sampling::stratified_kfold(sampling::LabelVector(pool_y, labels.n_classes), a.k, a.seed);
    sampling::FoldAssignment fa;
    fa.k = a.k;
    fa.seed = a.seed;
    fa.fold_of.assign(labels.size(), sampling::kHeldOut);
    for (std::size_t j = 0; j < pool.size(); ++j) {
        fa.fold_of[pool[j]] = inner.fold_of[j];
    }

    json cfg{{"command", "split"},
             {"k", a.k},
             {"holdout_fraction", a.holdout_fraction},
             {"manifest_digest", file_digest(a.manifest)}};
    json doc = fa;
    doc["schema"] = "leukex.folds";
    doc["holdout_fraction"] = a.holdout_fraction;
    doc["holdout_count"] = holdout.size();
    doc["manifest_digest"] = cfg["manifest_digest"];
    doc["ids"] = json::array();
    for (const auto& r : m.records) {
        doc["ids"].push_back(r.id);
    }
    doc["meta"] = artifact_meta(a.seed, cfg);
    write_json(a.out, doc);
    out << "k=" << a.k << " folds over " << pool.size() << " samples, " << holdout.size() << " held out\n";

    if (a.check) {
        const auto back = read_folds(a.out);
        const auto problem = sampling::check_stratification(back.assignment, labels);
        if (!problem.empty()) {
            err << "stratification check failed: " << problem << '\n';
            return kExitData;
        }
        out << "stratification ok\n";
    }
    return kExitOk;
}

int cmd_train_ref(const TrainArgs& a, std::ostream& out) {
    const auto m = imagestore::read_manifest(a.manifest);
    const auto folds = read_folds(a.folds);
    check_folds_match(folds, m, a.manifest);
    const auto split = sampling::fold_split(folds.assignment, a.fold);

    model::ReferenceNetConfig cfg;
    cfg.input_side = a.input_side;
    cfg.hidden_units = a.hidden;
    cfg.learning_rate = a.learning_rate;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch_size;
    cfg.seed = a.seed;
    cfg.workers = resolve_workers(a.workers);
    if (a.augment) {
        augment::AugmentConfig aug;
        aug.seed = a.seed;
        cfg.augmentation = aug;
    }
    cfg.validate();

    const auto train = load_images(m, split.train, a.workers);
    const auto val = load_images(m, split.validation, a.workers);
    std::vector<int> train_y;
    for (const auto& img : train) {
        train_y.push_back(img.label);
    }
    const auto weights = sampling::compute_class_weights(sampling::LabelVector(train_y, 2));

    json run_cfg{{"command", "train-ref"},
                 {"fold", a.fold},
                 {"k", folds.assignment.k},
                 {"folds_seed", folds.assignment.seed},
                 {"manifest_digest", file_digest(a.manifest)},
                 {"folds_digest", file_digest(a.folds)},
                 {"network", cfg}};
    const json meta = artifact_meta(a.seed, run_cfg);

    const auto result = model::train_reference(train, val, cfg, weights);
    const model::ReferenceNet net(result.parameters, cfg);

    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    net.save(dir / "model.json", meta);
    metrics::emit_history(result.history, dir, meta.dump());

    std::vector<int> val_y;
    for (const auto& img : val) {
        val_y.push_back(img.label);
    }
    json report{{"schema", "leukex.report"},
                {"fold", a.fold},
                {"evaluated_on", "validation"},
                {"n_train", train.size()},
                {"n_evaluated", val.size()},
                {"class_weights", weights},
                {"protocol", protocol_block(folds.assignment.k, cfg.epochs, cfg.batch_size, a.fold)},
                {"model", {{"kind", "reference"}, {"config", cfg}}},
                {"meta", meta}};
    if (!val.empty()) {
        const auto p = predict_all(net, val, a.workers);
        report["metrics"] = metrics::evaluate(val_y, p);
    }
    write_json(dir / "report.json", report);
    const auto& last = result.history.epochs().back();
    out << "trained " << cfg.epochs << " epochs on " << train.size() << " images; val_accuracy "
        << format_double(last.val_accuracy) << '\n';
    return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const auto m = imagestore::read_manifest(a.manifest);
    const auto folds = read_folds(a.folds);
    check_folds_match(folds, m, a.manifest);
    const auto loaded = load_model(a.model);

    std::vector<std::size_t> idx;
    if (a.holdout) {
        for (std::size_t i = 0; i < folds.assignment.fold_of.size(); ++i) {
            if (folds.assignment.fold_of[i] == sampling::kHeldOut) {
                idx.push_back(i);
            }
        }
        if (idx.empty()) {
            throw ArgumentError("folds file has no held-out samples");
        }
    } else {
        idx = sampling::fold_split(folds.assignment, a.fold).validation;
    }
    const auto images = load_images(m, idx, a.workers);
    std::vector<int> y;
    for (const auto& img : images) {
        y.push_back(img.label);
    }
    const auto p = predict_all(*loaded.classifier, images, a.workers);

    int epochs = 35;
    int batch = 32;
    if (loaded.describe.contains("config")) {
        epochs = loaded.describe["config"].value("epochs", epochs);
        batch = loaded.describe["config"].value("batch_size", batch);
    }
    json cfg{{"command", "evaluate"},
             {"fold", a.fold},
             {"holdout", a.holdout},
             {"manifest_digest", file_digest(a.manifest)},
             {"folds_digest", file_digest(a.folds)},
             {"model", loaded.describe}};
    const auto report_metrics = metrics::evaluate(y, p);
    json report{{"schema", "leukex.report"},
                {"fold", a.fold},
                {"evaluated_on", a.holdout ? "holdout" : "validation"},
                {"n_evaluated", images.size()},
                {"protocol", protocol_block(folds.assignment.k, epochs, batch, a.fold)},
                {"model", loaded.describe},
                {"metrics", report_metrics},
                {"meta", artifact_meta(folds.assignment.seed, cfg)}};
    write_json(a.out, report);
    out << "accuracy " << format_double(report_metrics.accuracy) << " f1 " << format_double(report_metrics.f1)
        << " on " << images.size() << " images\n";
    return kExitOk;
}

ImageTensor read_input_image(const fs::path& path) {
    const auto bytes = imagestore::read_file_bytes(path);
    const bool is_png = bytes.size() >= 4 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G';
    const auto raw = is_png ? decode_png(bytes) : imagestore::decode_bmp(bytes);
    return imagestore::normalize_resize(raw);
}

int cmd_explain(const ExplainArgs& a, std::ostream& out) {
    const auto image = read_input_image(a.image);
    const auto loaded = load_model(a.model);

    explain::ExplainParams params;
    params.slic.n_segments = a.n_segments;
    params.slic.compactness = a.compactness;
    params.slic.iterations = a.slic_iterations;
    params.n_samples = a.samples;
    params.kernel_width = a.kernel_width;
    params.alpha = a.alpha;
    params.seed = a.seed;
    params.workers = resolve_workers(a.workers);
    if (a.top_k < 0) {
        throw ArgumentError("top-k must be non-negative");
    }

    json cfg{{"command", "explain"},
             {"image_digest", file_digest(a.image)},
             {"model", loaded.describe},
             {"lime", params},
             {"top_k", a.top_k},
             {"positive_only", a.positive_only}};
    const json meta = artifact_meta(a.seed, cfg);

    const auto result = explain::explain(image, *loaded.classifier, params);
    const auto& e = result.explanation;

    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    const auto save_png = [&](const std::string& name, const Rgb8Image& img) {
        imagestore::write_file_bytes(dir / name, encode_png(img));
    };
    save_png("segments.png", explain::render_segments(image, result.segments));
    save_png("boundaries.png", explain::render_boundaries(image, result.segments));
    save_png("heatmap.png", explain::render_heatmap(image, result.segments, e, false, a.top_k));
    if (a.positive_only) {
        save_png("heatmap_positive.png", explain::render_heatmap(image, result.segments, e, true, a.top_k));
    } else {
        // Positive tints only, without graying out the rest.
        auto positives = e;
        for (auto& sw : positives.segment_weights) {
            sw.weight = std::max(sw.weight, 0.0);
        }
        save_png("heatmap_positive.png", explain::render_heatmap(image, result.segments, positives, false, a.top_k));
    }

    json doc = e;
    doc["schema"] = "leukex.explanation";
    doc["image"] = {{"digest", cfg["image_digest"]}, {"height", kModelSide}, {"width", kModelSide}};
    doc["top_k"] = a.top_k;
    doc["positive_only"] = a.positive_only;
    doc["artifacts"] = {"segments.png", "boundaries.png", "heatmap.png", "heatmap_positive.png"};
    doc["meta"] = meta;
    write_json(dir / "explanation.json", doc);

    out << "The Prediction of the sample is: It Is " << e.target_name << '\n';
    out << "Prediction Confidence Percentage is: " << format_double(e.confidence * 100.0) << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Blood-cell image classification with local surrogate explanations", "leukex"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string config_path;
    const auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Flat key = value file; command-line flags take precedence")
            ->check(CLI::ExistingFile);
    };

    IngestArgs ia;
    auto* ingest = app.add_subcommand("ingest", "Scan a directory tree of BMP files into manifest.jsonl");
    ingest->add_option("root", ia.root, "Dataset root directory")->required();
    ingest->add_option("--out", ia.out, "Manifest path")->capture_default_str();
    ingest->add_option("--patient-pattern", ia.patient_pattern, "Regex on file names; group 1 is the patient id");
    ingest->add_option("--label", ia.labels, "Directory-name rule name=class (repeatable)");
    ingest->add_option("--workers", ia.workers, "Threads (0 = all cores)");
    add_config(ingest);

    WeightsArgs wa;
    auto* weights = app.add_subcommand("weights", "Balanced class weights for a manifest");
    weights->add_option("--manifest", wa.manifest)->capture_default_str();
    weights->add_option("--out", wa.out)->capture_default_str();
    add_config(weights);

    SplitArgs sa;
    auto* split = app.add_subcommand("split", "Stratified k-fold assignment");
    split->add_option("--manifest", sa.manifest)->capture_default_str();
    split->add_option("--out", sa.out)->capture_default_str();
    split->add_option("--k", sa.k, "Number of folds")->capture_default_str();
    split->add_option("--seed", sa.seed)->capture_default_str();
    split->add_option("--holdout-fraction", sa.holdout_fraction, "Stratified fraction kept out of every fold")
        ->capture_default_str();
    split->add_flag("--check", sa.check, "Re-read the written file and verify stratification");
    add_config(split);

    TrainArgs ta;
    auto* train = app.add_subcommand("train-ref", "Train the reference network on k-1 folds");
    train->add_option("--manifest", ta.manifest)->capture_default_str();
    train->add_option("--folds", ta.folds)->capture_default_str();
    train->add_option("--out-dir", ta.out_dir)->capture_default_str();
    train->add_option("--fold", ta.fold, "Validation fold index")->capture_default_str();
    train->add_option("--seed", ta.seed)->capture_default_str();
    train->add_option("--epochs", ta.epochs)->capture_default_str();
    train->add_option("--batch-size", ta.batch_size)->capture_default_str();
    train->add_option("--hidden", ta.hidden)->capture_default_str();
    train->add_option("--input-side", ta.input_side, "Downsampled input side")->capture_default_str();
    train->add_option("--learning-rate", ta.learning_rate)->capture_default_str();
    train->add_flag("--augment,!--no-augment", ta.augment, "Re-augment training images every epoch");
    train->add_option("--workers", ta.workers, "Threads (0 = all cores)");
    add_config(train);

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "Score a model on a fold or the holdout set");
    evaluate->add_option("--manifest", ea.manifest)->capture_default_str();
    evaluate->add_option("--folds", ea.folds)->capture_default_str();
    evaluate->add_option("--model", ea.model, "Reference model JSON or .onnx with sidecar")->required();
    evaluate->add_option("--out", ea.out)->capture_default_str();
    evaluate->add_option("--fold", ea.fold)->capture_default_str();
    evaluate->add_flag("--holdout", ea.holdout, "Evaluate on held-out samples instead of a fold");
    evaluate->add_option("--workers", ea.workers, "Threads (0 = all cores)");
    add_config(evaluate);

    ExplainArgs xa;
    auto* expl = app.add_subcommand("explain", "Explain one prediction with superpixel LIME");
    expl->add_option("image", xa.image, "BMP or PNG image")->required();
    expl->add_option("--model", xa.model, "Reference model JSON or .onnx with sidecar")->required();
    expl->add_option("--out-dir", xa.out_dir)->capture_default_str();
    expl->add_option("--seed", xa.seed)->capture_default_str();
    expl->add_option("--n-segments", xa.n_segments)->capture_default_str();
    expl->add_option("--compactness", xa.compactness)->capture_default_str();
    expl->add_option("--slic-iterations", xa.slic_iterations)->capture_default_str();
    expl->add_option("--samples", xa.samples)->capture_default_str();
    expl->add_option("--kernel-width", xa.kernel_width)->capture_default_str();
    expl->add_option("--alpha", xa.alpha)->capture_default_str();
    expl->add_option("--top-k", xa.top_k)->capture_default_str();
    expl->add_flag("--positive-only,!--no-positive-only", xa.positive_only,
                   "Gray out everything but the top positive segments in heatmap_positive.png");
    expl->add_option("--workers", xa.workers, "Threads (0 = all cores)");
    add_config(expl);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        auto* sub = app.get_subcommands().front();
        apply_config_file(*sub, config_path);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (ingest->parsed()) {
            return cmd_ingest(ia, out, err);
        }
        if (weights->parsed()) {
            return cmd_weights(wa, out);
        }
        if (split->parsed()) {
            return cmd_split(sa, out, err);
        }
        if (train->parsed()) {
            return cmd_train_ref(ta, out);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(ea, out);
        }
        return cmd_explain(xa, out);
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace leukex::cli
