// pagevis command-line entry point.
//
// Human-readable progress goes to stderr; each subcommand prints one JSON
// summary object on stdout. Exit codes: 0 success, 1 operational failure,
// 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include "pagevis/analytics.hpp"
#include "pagevis/cocoset.hpp"
#include "pagevis/config.hpp"
#include "pagevis/embedstore.hpp"
#include "pagevis/evalmap.hpp"
#include "pagevis/image.hpp"
#include "pagevis/log.hpp"
#include "pagevis/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace pagevis;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void emit(const ordered_json& summary) { std::cout << summary.dump() << std::endl; }

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error(fmt::format("cannot open {}", p.string()));
    return json::parse(in);
}

bool looks_like_jsonl(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".jsonl" || ext == ".ndjson";
}

std::set<ClassId> parse_classes(const std::vector<std::string>& names) {
    std::set<ClassId> out;
    for (const auto& n : names) {
        if (auto c = class_from_name(n)) {
            out.insert(*c);
            continue;
        }
        try {
            if (auto c = class_from_code(std::stoll(n))) {
                out.insert(*c);
                continue;
            }
        } catch (const std::exception&) {
        }
        throw UsageError(fmt::format("unknown class '{}'", n));
    }
    return out;
}

std::vector<PageRecord> load_records(const fs::path& root, std::size_t& bad) {
    std::vector<PageRecord> out;
    for (const auto& p : find_page_records(root)) {
        try {
            out.push_back(read_page_record(p));
        } catch (const RecordError& e) {
            // run artifacts and foreign JSON files are not page records
            log()->warn("skipping {}: {}", p.string(), e.what());
            ++bad;
        }
    }
    return out;
}

// ----------------------------------------------------------------- commands

struct ManifestArgs {
    std::string source;
    std::string batch;
    std::string out;
};

int cmd_manifest_build(const ManifestArgs& a) {
    auto source_loc = a.source;
    if (source_loc.empty()) {
        if (const char* env = std::getenv("NN_SOURCE_URL"); env && *env) source_loc = env;
    }
    if (source_loc.empty()) throw UsageError("--source is required (or set NN_SOURCE_URL)");
    const auto source = open_source(source_loc);
    const auto built = build_manifest(*source, a.batch);
    std::ostringstream text;
    write_manifest(text, built.manifest);
    if (a.out.empty()) {
        std::cerr << text.str();
    } else {
        write_file_atomic(a.out, text.str());
    }
    ordered_json s;
    s["command"] = "manifest build";
    s["batch"] = built.manifest.batch_name;
    s["entries"] = built.manifest.entries.size();
    s["warnings"] = built.warnings;
    if (!a.out.empty()) s["manifest"] = a.out;
    emit(s);
    return kExitOk;
}

struct PipelineArgs {
    std::string manifest;
    std::string out;
    std::string config_file;
    std::string detector = "stub";
    std::string predictions;
    std::string embedder = "none";
    std::optional<std::string> source;
    std::optional<int> workers;
    std::optional<int> downsample_factor;
    std::optional<double> save_floor;
    std::optional<double> embed_floor;
    std::optional<std::string> containment;
    std::optional<int> jpeg_quality;
};

int cmd_pipeline_run(const PipelineArgs& a) {
    PipelineConfig config;
    if (!a.config_file.empty()) load_config_file(config, a.config_file);
    apply_environment(config);
    if (a.source) config.source = *a.source;
    if (a.workers) config.worker_count = *a.workers;
    if (a.downsample_factor) config.downsample_factor = *a.downsample_factor;
    if (a.save_floor) config.save_floor = *a.save_floor;
    if (a.embed_floor) config.embed_floor = *a.embed_floor;
    if (a.jpeg_quality) config.jpeg_quality = *a.jpeg_quality;
    if (a.containment) {
        auto p = containment_from_string(*a.containment);
        if (!p) throw UsageError(fmt::format("unknown containment policy '{}'", *a.containment));
        config.containment_policy = *p;
    }
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (config.source.empty()) throw UsageError("a page source is required (--source, config 'source' or NN_SOURCE_URL)");

    std::unique_ptr<Detector> detector;
    if (a.detector == "stub") {
        detector = std::make_unique<StubDetector>();
    } else {
        if (a.predictions.empty()) throw UsageError("--detector file requires --predictions");
        auto fd = FileDetector::from_file(a.predictions);
        if (!fd.predictions().rejections.empty()) {
            std::cerr << fmt::format("{} prediction records rejected\n", fd.predictions().rejections.size());
        }
        detector = std::make_unique<FileDetector>(std::move(fd));
    }
    std::unique_ptr<Embedder> embedder;
    if (a.embedder == "stub") embedder = std::make_unique<StubEmbedder>();

    const auto manifest = read_manifest_file(a.manifest);
    const auto source = open_source(config.source);
    std::cerr << fmt::format("processing {} pages from {} with {} worker(s), detector={}\n", manifest.entries.size(),
                             source->describe(), config.worker_count, detector->name());
    const auto report = run(manifest, *source, *detector, embedder.get(), config, a.out);
    std::cerr << fmt::format("succeeded: {}  failed: {}\n", report.success.entries.size(), report.failures.size());

    ordered_json s;
    s["command"] = "pipeline run";
    s["batch"] = manifest.batch_name;
    s["pages"] = manifest.entries.size();
    s["succeeded"] = report.success.entries.size();
    s["failed"] = report.failures.size();
    s["predictions"] = report.predictions;
    s["crops_written"] = report.crops_written;
    s["crops_skipped"] = report.crops_skipped;
    auto failures = ordered_json::array();
    for (const auto& f : report.failures) failures.push_back({{"entry", f.entry}, {"stage", f.stage}, {"message", f.message}});
    s["failures"] = std::move(failures);
    emit(s);
    return kExitOk;
}

struct CocoConvertArgs {
    std::string export_file;
    std::string mapping;
    std::string dims;
    std::string images_root;
    std::string out;
};

int cmd_coco_convert(const CocoConvertArgs& a) {
    const auto mapping = a.mapping.empty() ? ExportMapping::defaults() : ExportMapping::from_json(read_json_file(a.mapping));
    const auto raw = read_json_file(a.export_file);
    ImageDims dims;
    if (!a.dims.empty()) {
        const auto table = read_json_file(a.dims);
        for (const auto& [k, v] : table.items()) dims[k] = {v.at(0).get<int>(), v.at(1).get<int>()};
    } else if (!a.images_root.empty()) {
        // probe every image the export references
        const json* records = mapping.records.empty() ? &raw : &raw.at(json::json_pointer("/" + mapping.records));
        std::set<std::string> keys;
        for (const auto& rec : *records) {
            const json* cur = &rec;
            std::string_view rest = mapping.image;
            while (cur && !rest.empty()) {
                const auto dot = rest.find('.');
                const std::string key(rest.substr(0, dot));
                cur = cur->is_object() && cur->contains(key) ? &(*cur)[key] : nullptr;
                rest = dot == std::string_view::npos ? std::string_view() : rest.substr(dot + 1);
            }
            if (cur && cur->is_string()) keys.insert(cur->get<std::string>());
        }
        for (const auto& k : keys) {
            const auto path = fs::path(a.images_root) / k;
            std::ifstream in(path, std::ios::binary);
            if (!in) continue;
            const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            try {
                const auto img = decode_image(bytes);
                dims[k] = {img.cols, img.rows};
            } catch (const ImageError& e) {
                log()->warn("cannot probe {}: {}", path.string(), e.what());
            }
        }
    } else {
        throw UsageError("one of --dims or --images-root is required");
    }

    const auto result = convert(raw, mapping, dims);
    write_file_atomic(a.out, dump_record(to_json(result.dataset)));
    ordered_json s;
    s["command"] = "coco convert";
    s["images"] = result.dataset.images.size();
    s["annotations"] = result.dataset.annotations.size();
    s["input_regions"] = result.input_regions;
    s["rejections"] = result.rejections;
    ordered_json counts;
    for (auto c : kAllClasses) counts[std::string(class_name(c))] = result.counts[code(c)];
    s["counts"] = std::move(counts);
    s["out"] = a.out;
    emit(s);
    return kExitOk;
}

struct CocoSplitArgs {
    std::string in;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    std::string train_out;
    std::string val_out;
};

int cmd_coco_split(const CocoSplitArgs& a) {
    const auto data = read_coco(a.in);
    const auto s = split(data, a.val_fraction, a.seed);
    write_file_atomic(a.train_out, dump_record(to_json(s.train)));
    write_file_atomic(a.val_out, dump_record(to_json(s.val)));
    ordered_json out;
    out["command"] = "coco split";
    out["train_images"] = s.train.images.size();
    out["val_images"] = s.val.images.size();
    out["train_annotations"] = s.train.annotations.size();
    out["val_annotations"] = s.val.annotations.size();
    emit(out);
    return kExitOk;
}

struct EvalArgs {
    std::string preds;
    std::string gt;
    std::string json_out;
};

int cmd_eval(const EvalArgs& a) {
    std::ifstream pin(a.preds);
    if (!pin) throw std::runtime_error(fmt::format("cannot open {}", a.preds));
    const auto preds = read_predictions(pin);

    std::vector<GroundTruth> gts;
    if (looks_like_jsonl(a.gt)) {
        std::ifstream gin(a.gt);
        if (!gin) throw std::runtime_error(fmt::format("cannot open {}", a.gt));
        gts = ground_truth_from_predictions(read_predictions(gin).by_page);
    } else {
        gts = ground_truth_from_coco(read_coco(a.gt));
    }
    const auto result = evaluate(preds.by_page, gts);
    std::cerr << format_table(result);
    std::cerr << fmt::format("mAP {:.4f}\n", result.map_value);

    auto j = to_json(result);
    if (!a.json_out.empty()) write_file_atomic(a.json_out, dump_record(j));
    ordered_json s;
    s["command"] = "eval";
    s["prediction_rejections"] = preds.rejections.size();
    s["result"] = std::move(j);
    emit(s);
    return kExitOk;
}

std::vector<double> parse_thresholds(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError(fmt::format("bad threshold '{}'", tok));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct StatsArgs {
    std::string records;
    std::string thresholds = "0.5,0.7,0.9";
    std::string csv;
    std::string json_out;
};

int cmd_stats(const StatsArgs& a) {
    StatsReport report(parse_thresholds(a.thresholds));
    std::size_t bad = 0;
    for (const auto& p : find_page_records(a.records)) {
        try {
            report.add(read_page_record(p));
        } catch (const RecordError& e) {
            log()->warn("skipping {}: {}", p.string(), e.what());
            ++bad;
        }
    }
    if (!a.csv.empty()) write_file_atomic(a.csv, report.to_csv());
    auto j = report.to_json();
    if (!a.json_out.empty()) write_file_atomic(a.json_out, dump_record(j));
    for (std::size_t t = 0; t < report.thresholds().size(); ++t) {
        std::cerr << fmt::format(">= {}: {} predictions\n", report.thresholds()[t], report.total(t));
    }
    ordered_json s;
    s["command"] = "stats";
    s["unreadable_files"] = bad;
    s["report"] = std::move(j);
    emit(s);
    return kExitOk;
}

struct ExportArgs {
    std::string records;
    std::string crops;
    std::string dest;
    std::string from = "0001-01-01";
    std::string to = "9999-12-31";
    std::vector<std::string> classes;
    double min_score = kEmbedFloor;
};

int cmd_export(const ExportArgs& a) {
    SubsetFilter filter = [&] {
        try {
            return SubsetFilter::make(a.from, a.to, parse_classes(a.classes), a.min_score);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    std::size_t bad = 0;
    const auto records = load_records(a.records, bad);
    const auto report = export_subset(records, a.crops.empty() ? a.records : a.crops, filter, a.dest);
    ordered_json s;
    s["command"] = "export";
    s["records"] = records.size();
    s["exported"] = report.exported;
    s["copied_crops"] = report.copied_crops;
    s["gaps"] = report.gaps;
    s["dest"] = a.dest;
    emit(s);
    return kExitOk;
}

struct SimilarArgs {
    std::string store;
    std::string query_crop;
    std::string query_vector;
    std::size_t k = 10;
    std::string family = "r18";
    std::string metric = "cosine";
};

int cmd_similar(const SimilarArgs& a) {
    const auto family = a.family == "r50" ? EmbeddingFamily::ResNet50 : EmbeddingFamily::ResNet18;
    const auto metric = a.metric == "euclidean" ? Metric::Euclidean : Metric::Cosine;
    const auto records = load_embedding_records(a.store);
    const EmbeddingStore store(family, records);
    for (const auto& r : store.rejections()) std::cerr << "rejected: " << r << '\n';

    std::vector<double> q;
    if (!a.query_crop.empty()) {
        auto id = store.find(a.query_crop);
        if (!id) throw std::runtime_error(fmt::format("crop {} has no embedding in the store", a.query_crop));
        const auto row = store.vector(*id);
        q.assign(row.data(), row.data() + row.size());
    } else if (!a.query_vector.empty()) {
        q = read_json_file(a.query_vector).get<std::vector<double>>();
    } else {
        throw UsageError("one of --query-crop or --query-vector is required");
    }
    const auto result = store.query(q, a.k, metric);
    ordered_json s;
    s["command"] = "similar";
    s["store_size"] = store.size();
    auto hits = ordered_json::array();
    for (const auto& n : result) {
        std::cerr << fmt::format("{:>10.6f}  {}\n", n.similarity, n.filepath);
        hits.push_back({{"id", n.id}, {"filepath", n.filepath}, {"similarity", n.similarity}});
    }
    s["results"] = std::move(hits);
    emit(s);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pagevis: visual content extraction and analysis for digitized newspaper pages"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log progress details to stderr");

    // manifest build
    auto* manifest = app.add_subcommand("manifest", "Manifest tools");
    manifest->require_subcommand(1);
    ManifestArgs margs;
    auto* mbuild = manifest->add_subcommand("build", "List page images with sibling OCR XML in a batch");
    mbuild->add_option("--source", margs.source, "Source root directory or http(s) URL (env NN_SOURCE_URL)");
    mbuild->add_option("--batch", margs.batch, "Batch directory below the source root")->required();
    mbuild->add_option("--out", margs.out, "Manifest file to write (stderr when omitted)");

    // pipeline run
    auto* pipeline = app.add_subcommand("pipeline", "Page processing pipeline");
    pipeline->require_subcommand(1);
    PipelineArgs pargs;
    auto* prun = pipeline->add_subcommand("run", "Fetch, downsample, detect, extract OCR, crop and emit page records");
    prun->add_option("--manifest", pargs.manifest, "Manifest file (one page path per line)")->required();
    prun->add_option("--out", pargs.out, "Output directory")->required();
    prun->add_option("--config", pargs.config_file, "Key-value config file");
    prun->add_option("--source", pargs.source, "Source root directory or http(s) URL (env NN_SOURCE_URL)");
    prun->add_option("--detector", pargs.detector, "Detector: stub | file")->check(CLI::IsMember({"stub", "file"}));
    prun->add_option("--predictions", pargs.predictions, "Prediction JSONL for --detector file");
    prun->add_option("--embedder", pargs.embedder, "Embedder: none | stub")->check(CLI::IsMember({"none", "stub"}));
    prun->add_option("--workers", pargs.workers, "Worker threads [default: 1, env NN_WORKERS]");
    prun->add_option("--downsample-factor", pargs.downsample_factor, "Integer downsampling factor [default: 6]");
    prun->add_option("--save-floor", pargs.save_floor, "Minimum score of persisted predictions [default: 0.05]");
    prun->add_option("--embed-floor", pargs.embed_floor, "Minimum score for embeddings [default: 0.5]");
    prun->add_option("--containment", pargs.containment, "OCR containment: center | full | any-overlap [default: center]");
    prun->add_option("--jpeg-quality", pargs.jpeg_quality, "Crop JPEG quality [default: 90]");

    // coco
    auto* coco = app.add_subcommand("coco", "COCO training-set tools");
    coco->require_subcommand(1);
    CocoConvertArgs cargs;
    auto* cconv = coco->add_subcommand("convert", "Convert a crowdsourced annotation export to COCO JSON");
    cconv->add_option("--export", cargs.export_file, "Raw annotation export JSON")->required();
    cconv->add_option("--mapping", cargs.mapping, "Export field mapping JSON (built-in Beyond Words layout when omitted)");
    cconv->add_option("--dims", cargs.dims, "JSON object: image key -> [width, height]");
    cconv->add_option("--images-root", cargs.images_root, "Directory to probe image sizes from");
    cconv->add_option("--out", cargs.out, "COCO JSON to write")->required();
    CocoSplitArgs sargs;
    auto* csplit = coco->add_subcommand("split", "Image-level train/validation split");
    csplit->add_option("--in", sargs.in, "COCO JSON")->required();
    csplit->add_option("--val-fraction", sargs.val_fraction, "Validation fraction");
    csplit->add_option("--seed", sargs.seed, "Shuffle seed");
    csplit->add_option("--train-out", sargs.train_out, "Training split output")->required();
    csplit->add_option("--val-out", sargs.val_out, "Validation split output")->required();

    // eval
    EvalArgs eargs;
    auto* eval = app.add_subcommand("eval", "COCO-style AP/mAP of predictions against ground truth");
    eval->add_option("--preds", eargs.preds, "Prediction JSONL")->required();
    eval->add_option("--gt", eargs.gt, "Ground truth: COCO JSON, or prediction-format .jsonl")->required();
    eval->add_option("--json", eargs.json_out, "Also write the result JSON here");

    // stats
    StatsArgs targs;
    auto* stats = app.add_subcommand("stats", "Threshold-cut counts, per-year averages and page coverage");
    stats->add_option("--records", targs.records, "Directory of page records")->required();
    stats->add_option("--thresholds", targs.thresholds, "Comma-separated score thresholds");
    stats->add_option("--csv", targs.csv, "Write the per-year CSV report here");
    stats->add_option("--json", targs.json_out, "Write the JSON report here");

    // export
    ExportArgs xargs;
    auto* exp = app.add_subcommand("export", "Package a filtered subset of crops with an index");
    exp->add_option("--records", xargs.records, "Directory of page records")->required();
    exp->add_option("--crops", xargs.crops, "Root the crop paths are relative to [default: --records]");
    exp->add_option("--dest", xargs.dest, "Destination directory")->required();
    exp->add_option("--from", xargs.from, "First publication date (inclusive)");
    exp->add_option("--to", xargs.to, "Last publication date (inclusive)");
    exp->add_option("--classes", xargs.classes, "Class names or codes (all when omitted)");
    exp->add_option("--min-score", xargs.min_score, "Minimum score (>= 0.05)");

    // similar
    SimilarArgs qargs;
    auto* sim = app.add_subcommand("similar", "Exact nearest neighbours over crop embeddings");
    sim->add_option("--store", qargs.store, "Directory of *_embeddings.json files")->required();
    sim->add_option("--query-crop", qargs.query_crop, "Crop path whose stored vector is the query");
    sim->add_option("--query-vector", qargs.query_vector, "JSON array holding the query vector");
    sim->add_option("--k", qargs.k, "Number of neighbours")->check(CLI::PositiveNumber);
    sim->add_option("--family", qargs.family, "Embedding family: r18 | r50")->check(CLI::IsMember({"r18", "r50"}));
    sim->add_option("--metric", qargs.metric, "cosine | euclidean")->check(CLI::IsMember({"cosine", "euclidean"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }
    log()->set_level(verbose ? spdlog::level::info : spdlog::level::warn);

    try {
        if (mbuild->parsed()) return cmd_manifest_build(margs);
        if (prun->parsed()) return cmd_pipeline_run(pargs);
        if (cconv->parsed()) return cmd_coco_convert(cargs);
        if (csplit->parsed()) return cmd_coco_split(sargs);
        if (eval->parsed()) return cmd_eval(eargs);
        if (stats->parsed()) return cmd_stats(targs);
        if (exp->parsed()) return cmd_export(xargs);
        if (sim->parsed()) return cmd_similar(qargs);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    std::cerr << app.help();
    return kExitUsage;
}
