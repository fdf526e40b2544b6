#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pagevis/detect.hpp"
#include "pagevis/geometry.hpp"

namespace pagevis {

/// Per-page output record. Field names and order on disk:
/// filepath, pub_date, boxes, scores, pred_classes, ocr, visual_content_filepaths.
///
/// `ocr[i]` holds the whitespace-separated word strings found in `boxes[i]`.
/// `visual_content_filepaths` has one entry per non-headline prediction, in
/// prediction order; std::nullopt (JSON null) marks a crop that was skipped.
struct PageRecord {
    std::string filepath;
    std::string pub_date;
    std::vector<NormBox> boxes;
    std::vector<double> scores;
    std::vector<ClassId> pred_classes;
    std::vector<std::vector<std::string>> ocr;
    std::vector<std::optional<std::string>> visual_content_filepaths;

    std::size_t size() const noexcept { return boxes.size(); }
    friend bool operator==(const PageRecord&, const PageRecord&) = default;
};

/// Embedding companion file (`<page>_embeddings.json`). Vectors are aligned
/// with `visual_content_filepaths`.
struct EmbeddingRecord {
    std::string filepath;
    std::vector<std::vector<double>> resnet_50_embeddings;
    std::vector<std::vector<double>> resnet_18_embeddings;
    std::vector<std::string> visual_content_filepaths;

    friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

inline constexpr std::size_t kResnet18Dim = 512;
inline constexpr std::size_t kResnet50Dim = 2048;
inline constexpr std::string_view kEmbeddingsSuffix = "_embeddings";

class RecordError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::ordered_json to_json(const PageRecord& r);
nlohmann::ordered_json to_json(const EmbeddingRecord& r);

/// Throws RecordError on missing fields, misaligned lists or bad codes.
PageRecord page_record_from_json(const nlohmann::json& j);
EmbeddingRecord embedding_record_from_json(const nlohmann::json& j);

PageRecord read_page_record(const std::filesystem::path& path);
EmbeddingRecord read_embedding_record(const std::filesystem::path& path);

/// Serialized bytes exactly as written to disk (2-space indent, trailing newline).
std::string dump_record(const nlohmann::ordered_json& j);

/// Writes `bytes` to `path` via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// `<dir>/<stem>_embeddings.json` for a page record at `<dir>/<stem>.json`.
std::filesystem::path embeddings_path_for(const std::filesystem::path& page_json);

/// All page record files under `root` (recursive, sorted, excluding
/// embeddings companions and anything that is not *.json).
std::vector<std::filesystem::path> find_page_records(const std::filesystem::path& root);
std::vector<std::filesystem::path> find_embedding_records(const std::filesystem::path& root);

}  // namespace pagevis
