#include "pagevis/records.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace pagevis {
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

nlohmann::ordered_json to_json(const PageRecord& r) {
    ordered_json j;
    j["filepath"] = r.filepath;
    j["pub_date"] = r.pub_date;
    auto boxes = ordered_json::array();
    for (const auto& b : r.boxes) boxes.push_back({b.x1(), b.y1(), b.x2(), b.y2()});
    j["boxes"] = std::move(boxes);
    j["scores"] = r.scores;
    auto classes = ordered_json::array();
    for (auto c : r.pred_classes) classes.push_back(code(c));
    j["pred_classes"] = std::move(classes);
    j["ocr"] = r.ocr;
    auto paths = ordered_json::array();
    for (const auto& p : r.visual_content_filepaths) {
        if (p) paths.push_back(*p);
        else paths.push_back(nullptr);
    }
    j["visual_content_filepaths"] = std::move(paths);
    return j;
}

nlohmann::ordered_json to_json(const EmbeddingRecord& r) {
    ordered_json j;
    j["filepath"] = r.filepath;
    j["resnet_50_embeddings"] = r.resnet_50_embeddings;
    j["resnet_18_embeddings"] = r.resnet_18_embeddings;
    j["visual_content_filepaths"] = r.visual_content_filepaths;
    return j;
}

namespace {

const json& field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw RecordError(fmt::format("missing field '{}'", key));
    return *it;
}

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(std::move(w));
    return out;
}

}  // namespace

PageRecord page_record_from_json(const json& j) {
    try {
        PageRecord r;
        r.filepath = field(j, "filepath").get<std::string>();
        r.pub_date = field(j, "pub_date").get<std::string>();
        for (const auto& b : field(j, "boxes")) {
            if (!b.is_array() || b.size() != 4) throw RecordError("box must have 4 coordinates");
            r.boxes.push_back(NormBox::from_raw(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                                b[3].get<double>()));
        }
        r.scores = field(j, "scores").get<std::vector<double>>();
        for (const auto& c : field(j, "pred_classes")) {
            auto cls = class_from_code(c.get<long long>());
            if (!cls) throw RecordError(fmt::format("class code {} outside 0-6", c.dump()));
            r.pred_classes.push_back(*cls);
        }
        // Older files carry one joined string per box.
        for (const auto& o : field(j, "ocr")) {
            if (o.is_string()) r.ocr.push_back(split_words(o.get<std::string>()));
            else r.ocr.push_back(o.get<std::vector<std::string>>());
        }
        for (const auto& p : field(j, "visual_content_filepaths")) {
            if (p.is_null()) r.visual_content_filepaths.emplace_back(std::nullopt);
            else r.visual_content_filepaths.emplace_back(p.get<std::string>());
        }
        const auto n = r.boxes.size();
        if (r.scores.size() != n || r.pred_classes.size() != n || r.ocr.size() != n) {
            throw RecordError(fmt::format("misaligned lists: boxes={}, scores={}, pred_classes={}, ocr={}", n,
                                          r.scores.size(), r.pred_classes.size(), r.ocr.size()));
        }
        const auto crops = static_cast<std::size_t>(
            std::count_if(r.pred_classes.begin(), r.pred_classes.end(), [](ClassId c) { return c != ClassId::Headline; }));
        if (r.visual_content_filepaths.size() != crops) {
            throw RecordError(fmt::format("{} visual_content_filepaths for {} non-headline predictions",
                                          r.visual_content_filepaths.size(), crops));
        }
        return r;
    } catch (const json::exception& e) {
        throw RecordError(e.what());
    } catch (const GeometryError& e) {
        throw RecordError(e.what());
    }
}

EmbeddingRecord embedding_record_from_json(const json& j) {
    try {
        EmbeddingRecord r;
        r.filepath = field(j, "filepath").get<std::string>();
        r.resnet_50_embeddings = field(j, "resnet_50_embeddings").get<std::vector<std::vector<double>>>();
        r.resnet_18_embeddings = field(j, "resnet_18_embeddings").get<std::vector<std::vector<double>>>();
        for (const auto& p : field(j, "visual_content_filepaths")) {
            if (p.is_array() && p.size() == 1) r.visual_content_filepaths.push_back(p[0].get<std::string>());
            else r.visual_content_filepaths.push_back(p.get<std::string>());
        }
        const auto n = r.visual_content_filepaths.size();
        if (r.resnet_50_embeddings.size() != n || r.resnet_18_embeddings.size() != n) {
            throw RecordError(fmt::format("misaligned embedding lists: paths={}, resnet_50={}, resnet_18={}", n,
                                          r.resnet_50_embeddings.size(), r.resnet_18_embeddings.size()));
        }
        return r;
    } catch (const json::exception& e) {
        throw RecordError(e.what());
    }
}

namespace {

json parse_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RecordError(fmt::format("cannot open {}", path.string()));
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw RecordError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace

PageRecord read_page_record(const fs::path& path) { return page_record_from_json(parse_file(path)); }

EmbeddingRecord read_embedding_record(const fs::path& path) { return embedding_record_from_json(parse_file(path)); }

std::string dump_record(const ordered_json& j) { return j.dump(2) + "\n"; }

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    static std::atomic<unsigned> counter{0};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += fmt::format(".tmp.{}.{}", std::hash<std::thread::id>{}(std::this_thread::get_id()) & 0xffff, counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error(fmt::format("failed writing {}", tmp.string()));
        }
    }
    fs::rename(tmp, path);
}

fs::path embeddings_path_for(const fs::path& page_json) {
    auto p = page_json;
    p.replace_filename(page_json.stem().string() + std::string(kEmbeddingsSuffix) + ".json");
    return p;
}

namespace {

bool is_embeddings_file(const fs::path& p) {
    const auto stem = p.stem().string();
    return stem.size() >= kEmbeddingsSuffix.size() && stem.ends_with(kEmbeddingsSuffix);
}

std::vector<fs::path> find_json(const fs::path& root, bool embeddings) {
    std::vector<fs::path> out;
    if (!fs::exists(root)) throw RecordError(fmt::format("{} does not exist", root.string()));
    if (fs::is_regular_file(root)) {
        out.push_back(root);
        return out;
    }
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().extension() != ".json") continue;
        if (is_embeddings_file(e.path()) == embeddings) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<fs::path> find_page_records(const fs::path& root) {
    return find_json(root, false);
}

std::vector<fs::path> find_embedding_records(const fs::path& root) { return find_json(root, true); }

}  // namespace pagevis
