#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pagevis/geometry.hpp"

namespace cv {
class Mat;
}

namespace pagevis {

/// Visual content classes with their fixed integer wire codes.
enum class ClassId : int {
    Photograph = 0,
    Illustration = 1,
    Map = 2,
    ComicsCartoon = 3,
    EditorialCartoon = 4,
    Headline = 5,
    Advertisement = 6,
};

inline constexpr int kClassCount = 7;
inline constexpr double kSaveFloor = 0.05;
inline constexpr double kEmbedFloor = 0.5;

inline constexpr std::array<ClassId, kClassCount> kAllClasses = {
    ClassId::Photograph,       ClassId::Illustration, ClassId::Map,           ClassId::ComicsCartoon,
    ClassId::EditorialCartoon, ClassId::Headline,     ClassId::Advertisement,
};

constexpr int code(ClassId c) noexcept { return static_cast<int>(c); }

/// Display name ("Comics/Cartoon", ...).
std::string_view class_name(ClassId c) noexcept;
/// Lowercase filesystem-safe name ("comics_cartoon").
std::string_view class_slug(ClassId c) noexcept;
std::optional<ClassId> class_from_code(long long code) noexcept;
std::optional<ClassId> class_from_name(std::string_view name) noexcept;

struct Prediction {
    NormBox box;
    double score = 0.0;
    ClassId class_id = ClassId::Photograph;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Descending score; ties by class code, then x1, then y1.
bool prediction_order(const Prediction& a, const Prediction& b) noexcept;
void sort_predictions(std::vector<Prediction>& preds);

class DetectorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Detector {
public:
    virtual ~Detector() = default;

    /// Predictions for one page, already floored at kSaveFloor and sorted by
    /// prediction_order. Throws DetectorError when no result can be produced.
    virtual std::vector<Prediction> detect(std::string_view page_id, const cv::Mat& image) const = 0;

    /// False when detect() must not be called from several threads at once.
    virtual bool concurrent() const noexcept { return true; }

    virtual std::string name() const = 0;
};

/// Deterministic placeholder: output is a pure function of page_id.
class StubDetector final : public Detector {
public:
    std::vector<Prediction> detect(std::string_view page_id, const cv::Mat& image) const override;
    std::string name() const override { return "stub"; }
};

struct Diagnostic {
    std::size_t line = 0;  // 1-based
    std::string message;
};

struct PredictionSet {
    std::map<std::string, std::vector<Prediction>> by_page;
    std::vector<Diagnostic> rejections;
    std::size_t below_floor = 0;
    std::size_t clamped = 0;
};

/// Reads the line-delimited prediction wire format:
///   {"page_id": str, "boxes": [[x1,y1,x2,y2],...], "scores": [...], "pred_classes": [...]}
/// Blank lines are ignored. A malformed line, or one carrying a class code
/// outside 0-6, rejects the whole record. Entries below kSaveFloor are dropped.
/// Lists for a page are sorted by prediction_order.
PredictionSet read_predictions(std::istream& in);

/// Writes one wire-format record (single line, trailing newline).
void write_prediction_record(std::ostream& out, std::string_view page_id, std::span<const Prediction> preds);

/// Serves predictions produced out of process (e.g. by an inference worker).
/// A page missing from the file is a detector error.
class FileDetector final : public Detector {
public:
    explicit FileDetector(PredictionSet set) : set_(std::move(set)) {}
    static FileDetector from_file(const std::string& path);

    std::vector<Prediction> detect(std::string_view page_id, const cv::Mat& image) const override;
    std::string name() const override { return "file"; }
    const PredictionSet& predictions() const noexcept { return set_; }

private:
    PredictionSet set_;
};

/// FNV-1a 64-bit; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view s) noexcept;

}  // namespace pagevis
