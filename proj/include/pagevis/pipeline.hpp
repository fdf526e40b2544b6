#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "pagevis/alto.hpp"
#include "pagevis/detect.hpp"
#include "pagevis/records.hpp"
#include "pagevis/source.hpp"

namespace pagevis {

// ---------------------------------------------------------------- manifests

struct Manifest {
    std::string batch_name;
    std::vector<std::string> entries;  // page image paths relative to the source root

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct ManifestBuild {
    Manifest manifest;
    std::vector<std::string> warnings;
};

/// Lists every page image under `batch_name` that has a sibling OCR XML
/// (same stem, ".xml"). Entries are sorted lexicographically. Images without
/// XML produce a warning each; an empty batch produces a warning too.
ManifestBuild build_manifest(const PageSource& source, const std::string& batch_name);

/// One path per line; blank lines and '#' comments ignored. A "# batch: NAME"
/// comment sets the batch name. Duplicate entries are an error.
Manifest read_manifest(std::istream& in);
Manifest read_manifest_file(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const Manifest& m);

bool is_page_image(std::string_view path);
/// "a/b/seq-1.jp2" -> "a/b/seq-1.xml".
std::string ocr_path_for(std::string_view image_path);

class MetadataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Publication date of a page path as YYYY-MM-DD: the first segment shaped
/// YYYY-MM-DD, else the first 10-digit issue segment YYYYMMDDEE. Throws
/// MetadataError when neither exists or the date is not a calendar date.
std::string parse_pub_date(std::string_view page_path);

// ------------------------------------------------------------------- ocr

enum class ContainmentPolicy { Center, Full, AnyOverlap };

std::string_view to_string(ContainmentPolicy p) noexcept;
std::optional<ContainmentPolicy> containment_from_string(std::string_view s) noexcept;

/// Words of `page` that fall in `box`, in reading order.
///   Center:     the token center lies in the half-open box
///   Full:       the token box lies entirely inside the box
///   AnyOverlap: the token box intersects the box with positive area
std::vector<std::string> extract_ocr_in_box(const AltoPage& page, const NormBox& box, ContainmentPolicy policy);

// ------------------------------------------------------------- embeddings

struct EmbeddingPair {
    std::vector<double> resnet_18;  // kResnet18Dim
    std::vector<double> resnet_50;  // kResnet50Dim
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual EmbeddingPair embed(const cv::Mat& crop) const = 0;
    virtual std::string name() const = 0;
};

/// Deterministic stand-in for the ResNet backbones: a fixed pseudo-random
/// projection of an 8x8 thumbnail. Similar crops get similar vectors.
class StubEmbedder final : public Embedder {
public:
    StubEmbedder();
    EmbeddingPair embed(const cv::Mat& crop) const override;
    std::string name() const override { return "stub"; }

private:
    std::vector<double> proj18_;
    std::vector<double> proj50_;
};

// -------------------------------------------------------------- pipeline

struct PipelineConfig {
    int downsample_factor = 6;
    double save_floor = kSaveFloor;
    double embed_floor = kEmbedFloor;
    ContainmentPolicy containment_policy = ContainmentPolicy::Center;
    int worker_count = 1;
    int jpeg_quality = 90;
    std::string source;  // directory or http(s) base URL

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Output layout under `out_root` for a manifest entry "dir/seq-1.jpg":
///   dir/seq-1.json              page record
///   dir/seq-1_embeddings.json   embeddings (when an embedder is configured)
///   dir/seq-1/NNN_<class>.jpg   crops; NNN is the prediction index
struct PageOutputs {
    std::filesystem::path record;
    std::filesystem::path embeddings;
    std::filesystem::path crop_dir;
};
PageOutputs page_outputs(const std::filesystem::path& out_root, std::string_view entry);

/// Failure stage tags.
namespace stage {
inline constexpr std::string_view Fetch = "fetch";
inline constexpr std::string_view Decode = "decode";
inline constexpr std::string_view Metadata = "metadata";
inline constexpr std::string_view Ocr = "ocr";
inline constexpr std::string_view Detect = "detect";
inline constexpr std::string_view Crop = "crop";
inline constexpr std::string_view Embed = "embed";
inline constexpr std::string_view Write = "write";
}  // namespace stage

struct PageFailure {
    std::string entry;
    std::string stage;
    std::string message;

    friend bool operator==(const PageFailure&, const PageFailure&) = default;
};

class PageError : public std::runtime_error {
public:
    PageError(std::string_view stage, const std::string& message)
        : std::runtime_error(message), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct PageResult {
    PageRecord record;
    std::optional<EmbeddingRecord> embeddings;
    std::size_t crops_written = 0;
    std::size_t crops_skipped = 0;
};

/// Runs fetch -> downsample -> detect -> OCR -> crop -> embed -> emit for one
/// page. Outputs appear only once every stage succeeded; throws PageError
/// tagged with the failing stage otherwise. `embedder` may be null.
PageResult process_page(const std::string& entry, const PageSource& source, const Detector& detector,
                        const Embedder* embedder, const PipelineConfig& config,
                        const std::filesystem::path& out_root);

struct RunReport {
    Manifest success;
    std::vector<PageFailure> failures;
    std::size_t predictions = 0;
    std::size_t crops_written = 0;
    std::size_t crops_skipped = 0;
};

/// Processes every entry with `config.worker_count` workers. Each entry lands
/// in exactly one of success/failures, both in manifest order. Writes
/// success_manifest.txt and failure_manifest.tsv under `out_root`.
RunReport run(const Manifest& manifest, const PageSource& source, const Detector& detector,
              const Embedder* embedder, const PipelineConfig& config, const std::filesystem::path& out_root);

/// Tab-separated "entry\tstage\tmessage" lines.
void write_failures(std::ostream& out, const std::vector<PageFailure>& failures);
std::vector<PageFailure> read_failures(std::istream& in);

}  // namespace pagevis
