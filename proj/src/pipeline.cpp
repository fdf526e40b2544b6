#include "pagevis/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include <fmt/format.h>

#include "pagevis/image.hpp"
#include "pagevis/log.hpp"
#include "pagevis/rng.hpp"

namespace pagevis {
namespace fs = std::filesystem;

// ---------------------------------------------------------------- manifests

bool is_page_image(std::string_view path) {
    static const std::set<std::string, std::less<>> kExt = {".jp2", ".jpg", ".jpeg", ".png", ".tif", ".tiff"};
    auto ext = fs::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return kExt.contains(ext);
}

std::string ocr_path_for(std::string_view image_path) {
    return fs::path(image_path).replace_extension(".xml").generic_string();
}

ManifestBuild build_manifest(const PageSource& source, const std::string& batch_name) {
    ManifestBuild out;
    out.manifest.batch_name = batch_name;
    const auto files = source.list(batch_name);
    const std::set<std::string, std::less<>> all(files.begin(), files.end());
    for (const auto& f : files) {
        if (!is_page_image(f)) continue;
        if (all.contains(ocr_path_for(f))) {
            out.manifest.entries.push_back(f);
        } else {
            out.warnings.push_back(fmt::format("{}: no OCR XML alongside page image", f));
        }
    }
    if (out.manifest.entries.empty() && out.warnings.empty()) {
        out.warnings.push_back(fmt::format("batch '{}' contains no page images", batch_name));
    }
    for (const auto& w : out.warnings) log()->warn("{}", w);
    return out;
}

Manifest read_manifest(std::istream& in) {
    Manifest m;
    std::set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t");
        std::string_view text(line.data() + first, last - first + 1);
        if (text.front() == '#') {
            text.remove_prefix(1);
            while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
            if (text.starts_with("batch:")) {
                text.remove_prefix(6);
                while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
                m.batch_name = std::string(text);
            }
            continue;
        }
        std::string entry(text);
        if (!seen.insert(entry).second) throw std::runtime_error(fmt::format("duplicate manifest entry {}", entry));
        m.entries.push_back(std::move(entry));
    }
    if (in.bad()) throw std::runtime_error("I/O error reading manifest");
    return m;
}

Manifest read_manifest_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open manifest {}", path.string()));
    auto m = read_manifest(in);
    if (m.batch_name.empty()) m.batch_name = path.stem().string();
    return m;
}

void write_manifest(std::ostream& out, const Manifest& m) {
    out << "# batch: " << m.batch_name << '\n';
    for (const auto& e : m.entries) out << e << '\n';
}

namespace {

bool valid_date(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1) return false;
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    const int max = (m == 2 && leap) ? 29 : kDays[m - 1];
    return d <= max;
}

bool date_shaped(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

}  // namespace

std::string parse_pub_date(std::string_view page_path) {
    std::vector<std::string_view> segs;
    for (std::size_t pos = 0; pos <= page_path.size();) {
        auto next = page_path.find('/', pos);
        if (next == std::string_view::npos) next = page_path.size();
        segs.push_back(page_path.substr(pos, next - pos));
        pos = next + 1;
    }
    auto check = [&](std::string_view seg, int y, int m, int d) {
        if (!valid_date(y, m, d)) throw MetadataError(fmt::format("invalid calendar date {} in {}", seg, page_path));
        return fmt::format("{:04}-{:02}-{:02}", y, m, d);
    };
    auto num = [](std::string_view s) { return std::stoi(std::string(s)); };
    for (auto seg : segs) {
        if (date_shaped(seg)) return check(seg, num(seg.substr(0, 4)), num(seg.substr(5, 2)), num(seg.substr(8, 2)));
    }
    // batch layout: .../<lccn>/<reel>/<YYYYMMDDEE>/<page>.jp2
    for (auto seg : segs) {
        if (seg.size() == 10 && std::all_of(seg.begin(), seg.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            return check(seg, num(seg.substr(0, 4)), num(seg.substr(4, 2)), num(seg.substr(6, 2)));
        }
    }
    throw MetadataError(fmt::format("no YYYY-MM-DD or YYYYMMDDEE segment in {}", page_path));
}

// ------------------------------------------------------------------- ocr

std::string_view to_string(ContainmentPolicy p) noexcept {
    switch (p) {
        case ContainmentPolicy::Center: return "center";
        case ContainmentPolicy::Full: return "full";
        case ContainmentPolicy::AnyOverlap: return "any-overlap";
    }
    return "center";
}

std::optional<ContainmentPolicy> containment_from_string(std::string_view s) noexcept {
    if (s == "center") return ContainmentPolicy::Center;
    if (s == "full") return ContainmentPolicy::Full;
    if (s == "any-overlap") return ContainmentPolicy::AnyOverlap;
    return std::nullopt;
}

std::vector<std::string> extract_ocr_in_box(const AltoPage& page, const NormBox& box, ContainmentPolicy policy) {
    std::vector<const WordToken*> hits;
    for (const auto& t : page.tokens) {
        bool in = false;
        switch (policy) {
            case ContainmentPolicy::Center:
                in = contains_point(box, t.box.center_x(), t.box.center_y());
                break;
            case ContainmentPolicy::Full:
                in = t.box.x1() >= box.x1() && t.box.x2() <= box.x2() && t.box.y1() >= box.y1() && t.box.y2() <= box.y2();
                break;
            case ContainmentPolicy::AnyOverlap:
                in = intersection_area(t.box, box) > 0.0;
                break;
        }
        if (in) hits.push_back(&t);
    }
    std::stable_sort(hits.begin(), hits.end(), [](auto* a, auto* b) { return a->order_index < b->order_index; });
    std::vector<std::string> words;
    words.reserve(hits.size());
    for (auto* t : hits) words.push_back(t->text);
    return words;
}

// ------------------------------------------------------------- embeddings

namespace {

constexpr int kThumb = 8;

std::vector<double> make_projection(std::size_t dim, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> p(dim * kThumb * kThumb);
    for (auto& v : p) v = 2.0 * rng.uniform() - 1.0;
    return p;
}

}  // namespace

StubEmbedder::StubEmbedder()
    : proj18_(make_projection(kResnet18Dim, 18)), proj50_(make_projection(kResnet50Dim, 50)) {}

EmbeddingPair StubEmbedder::embed(const cv::Mat& crop) const {
    // grayscale 8x8 thumbnail, cell means
    std::vector<double> thumb(kThumb * kThumb, 0.0);
    std::vector<int> counts(kThumb * kThumb, 0);
    const int ch = crop.channels();
    for (int y = 0; y < crop.rows; ++y) {
        const auto* row = crop.ptr<unsigned char>(y);
        const int cy = y * kThumb / crop.rows;
        for (int x = 0; x < crop.cols; ++x) {
            const int cx = x * kThumb / crop.cols;
            double v = 0.0;
            for (int c = 0; c < ch; ++c) v += row[x * ch + c];
            thumb[cy * kThumb + cx] += v / ch;
            ++counts[cy * kThumb + cx];
        }
    }
    double mean = 0.0;
    for (int i = 0; i < kThumb * kThumb; ++i) {
        thumb[i] = counts[i] ? thumb[i] / counts[i] / 255.0 : 0.0;
        mean += thumb[i];
    }
    mean /= kThumb * kThumb;
    for (auto& v : thumb) v -= mean;

    auto project = [&](const std::vector<double>& proj, std::size_t dim) {
        std::vector<double> out(dim, 0.0);
        for (std::size_t d = 0; d < dim; ++d) {
            double s = 0.0;
            for (int i = 0; i < kThumb * kThumb; ++i) s += proj[d * kThumb * kThumb + i] * thumb[i];
            out[d] = std::round(s * 1e6) / 1e6;
        }
        return out;
    };
    return EmbeddingPair{project(proj18_, kResnet18Dim), project(proj50_, kResnet50Dim)};
}

// -------------------------------------------------------------- pipeline

void PipelineConfig::validate() const {
    if (downsample_factor < 1) throw std::invalid_argument("downsample_factor must be a positive integer");
    if (worker_count < 1) throw std::invalid_argument("worker_count must be a positive integer");
    if (!(0.0 <= save_floor && save_floor <= embed_floor && embed_floor <= 1.0)) {
        throw std::invalid_argument("floors must satisfy 0 <= save_floor <= embed_floor <= 1");
    }
    if (jpeg_quality < 1 || jpeg_quality > 100) throw std::invalid_argument("jpeg_quality must be in 1..100");
}

PageOutputs page_outputs(const fs::path& out_root, std::string_view entry) {
    const fs::path rel(entry);
    auto stem = rel;
    stem.replace_extension();
    PageOutputs o;
    o.record = out_root / fs::path(stem.string() + ".json");
    o.embeddings = embeddings_path_for(o.record);
    o.crop_dir = out_root / stem;
    return o;
}

namespace {

void remove_outputs(const PageOutputs& o) {
    std::error_code ec;
    fs::remove(o.record, ec);
    fs::remove(o.embeddings, ec);
    fs::remove_all(o.crop_dir, ec);
}

template <class F>
auto at_stage(std::string_view tag, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const PageError&) {
        throw;
    } catch (const std::exception& e) {
        throw PageError(tag, e.what());
    }
}

struct PendingCrop {
    fs::path path;
    std::vector<unsigned char> jpeg;
};

}  // namespace

PageResult process_page(const std::string& entry, const PageSource& source, const Detector& detector,
                        const Embedder* embedder, const PipelineConfig& config, const fs::path& out_root) {
    const auto outputs = page_outputs(out_root, entry);
    PageResult result;
    auto& rec = result.record;
    rec.filepath = entry;
    rec.pub_date = at_stage(stage::Metadata, [&] { return parse_pub_date(entry); });

    const auto image_bytes = at_stage(stage::Fetch, [&] { return source.fetch(entry); });
    const auto xml_bytes = at_stage(stage::Fetch, [&] { return source.fetch(ocr_path_for(entry)); });
    const auto full = at_stage(stage::Decode, [&] { return decode_image(image_bytes); });
    const auto alto = at_stage(stage::Ocr, [&] { return parse_alto(xml_bytes, full.cols, full.rows); });
    const auto small = at_stage(stage::Decode, [&] { return downsample(full, config.downsample_factor); });

    auto preds = at_stage(stage::Detect, [&] { return detector.detect(entry, small); });
    std::erase_if(preds, [&](const Prediction& p) { return p.score < config.save_floor; });
    sort_predictions(preds);

    const auto crop_rel_dir = fs::relative(outputs.crop_dir, out_root);
    std::vector<PendingCrop> pending;
    std::optional<EmbeddingRecord> emb;
    if (embedder) emb = EmbeddingRecord{entry, {}, {}, {}};

    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& p = preds[i];
        rec.boxes.push_back(p.box);
        rec.scores.push_back(p.score);
        rec.pred_classes.push_back(p.class_id);
        rec.ocr.push_back(extract_ocr_in_box(alto, p.box, config.containment_policy));
        if (p.class_id == ClassId::Headline) continue;

        auto pixels = at_stage(stage::Crop, [&] { return crop(small, p.box); });
        if (!pixels) {
            log()->info("{}: prediction {} {} is sub-pixel at {}x{}, crop skipped", entry, i, to_string(p.box),
                        small.cols, small.rows);
            rec.visual_content_filepaths.emplace_back(std::nullopt);
            ++result.crops_skipped;
            continue;
        }
        const auto name = fmt::format("{:03}_{}.jpg", i, class_slug(p.class_id));
        const auto rel = (crop_rel_dir / name).generic_string();
        rec.visual_content_filepaths.emplace_back(rel);
        pending.push_back({outputs.crop_dir / name,
                           at_stage(stage::Crop, [&] { return encode_jpeg(*pixels, config.jpeg_quality); })});

        if (emb && p.score >= config.embed_floor) {
            auto v = at_stage(stage::Embed, [&] { return embedder->embed(*pixels); });
            if (v.resnet_18.size() != kResnet18Dim || v.resnet_50.size() != kResnet50Dim) {
                throw PageError(stage::Embed, fmt::format("embedder returned {}/{} dimensions", v.resnet_18.size(),
                                                          v.resnet_50.size()));
            }
            emb->resnet_18_embeddings.push_back(std::move(v.resnet_18));
            emb->resnet_50_embeddings.push_back(std::move(v.resnet_50));
            emb->visual_content_filepaths.push_back(rel);
        }
    }

    // Record JSON goes last: its presence means the page is complete.
    try {
        std::error_code ec;
        fs::remove_all(outputs.crop_dir, ec);
        for (const auto& c : pending) {
            write_file_atomic(c.path, std::string_view(reinterpret_cast<const char*>(c.jpeg.data()), c.jpeg.size()));
        }
        if (emb) write_file_atomic(outputs.embeddings, dump_record(to_json(*emb)));
        write_file_atomic(outputs.record, dump_record(to_json(rec)));
    } catch (const std::exception& e) {
        remove_outputs(outputs);
        throw PageError(stage::Write, e.what());
    }
    result.crops_written = pending.size();
    result.embeddings = std::move(emb);
    return result;
}

void write_failures(std::ostream& out, const std::vector<PageFailure>& failures) {
    auto clean = [](std::string s) {
        std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
        return s;
    };
    for (const auto& f : failures) out << f.entry << '\t' << f.stage << '\t' << clean(f.message) << '\n';
}

std::vector<PageFailure> read_failures(std::istream& in) {
    std::vector<PageFailure> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        const auto a = line.find('\t');
        const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
        if (b == std::string::npos) throw std::runtime_error(fmt::format("malformed failure line: {}", line));
        out.push_back({line.substr(0, a), line.substr(a + 1, b - a - 1), line.substr(b + 1)});
    }
    return out;
}

namespace {

/// Serializes detect() for detectors that cannot run concurrently.
class SerializedDetector final : public Detector {
public:
    explicit SerializedDetector(const Detector& inner) : inner_(inner) {}
    std::vector<Prediction> detect(std::string_view page_id, const cv::Mat& image) const override {
        std::lock_guard lock(mutex_);
        return inner_.detect(page_id, image);
    }
    std::string name() const override { return inner_.name(); }

private:
    const Detector& inner_;
    mutable std::mutex mutex_;
};

}  // namespace

RunReport run(const Manifest& manifest, const PageSource& source, const Detector& detector,
              const Embedder* embedder, const PipelineConfig& config, const fs::path& out_root) {
    config.validate();
    fs::create_directories(out_root);

    SerializedDetector serialized(detector);
    const Detector& det = detector.concurrent() ? detector : static_cast<const Detector&>(serialized);

    struct Done {
        std::size_t predictions, crops_written, crops_skipped;
    };
    using Outcome = std::variant<std::monostate, Done, PageFailure>;
    std::vector<Outcome> outcomes(manifest.entries.size());
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next++; i < manifest.entries.size(); i = next++) {
            const auto& entry = manifest.entries[i];
            try {
                const auto r = process_page(entry, source, det, embedder, config, out_root);
                outcomes[i] = Done{r.record.size(), r.crops_written, r.crops_skipped};
            } catch (const PageError& e) {
                remove_outputs(page_outputs(out_root, entry));
                outcomes[i] = PageFailure{entry, e.stage(), e.what()};
            } catch (const std::exception& e) {
                remove_outputs(page_outputs(out_root, entry));
                outcomes[i] = PageFailure{entry, "internal", e.what()};
            }
        }
    };
    {
        const auto n = static_cast<std::size_t>(config.worker_count);
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (std::size_t t = 0; t < std::min(n, std::max<std::size_t>(1, manifest.entries.size())); ++t) pool.emplace_back(work);
    }

    RunReport report;
    report.success.batch_name = manifest.batch_name;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto& o = outcomes[i];
        if (auto* ok = std::get_if<Done>(&o)) {
            report.success.entries.push_back(manifest.entries[i]);
            report.predictions += ok->predictions;
            report.crops_written += ok->crops_written;
            report.crops_skipped += ok->crops_skipped;
        } else if (auto* bad = std::get_if<PageFailure>(&o)) {
            log()->warn("{} failed at {}: {}", bad->entry, bad->stage, bad->message);
            report.failures.push_back(std::move(*bad));
        }
    }

    std::ostringstream ok, bad;
    write_manifest(ok, report.success);
    write_failures(bad, report.failures);
    write_file_atomic(out_root / "success_manifest.txt", ok.str());
    write_file_atomic(out_root / "failure_manifest.tsv", bad.str());
    return report;
}

}  // namespace pagevis
