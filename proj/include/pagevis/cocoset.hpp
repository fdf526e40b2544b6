#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pagevis/detect.hpp"

namespace pagevis {

struct CocoImage {
    std::int64_t id = 0;
    std::string file_name;
    int width = 0;
    int height = 0;

    friend bool operator==(const CocoImage&, const CocoImage&) = default;
};

struct CocoAnnotation {
    std::int64_t id = 0;
    std::int64_t image_id = 0;
    int category_id = 0;                // 1..7, ClassId code + 1
    std::array<double, 4> bbox{};       // x, y, w, h in pixels
    double area = 0.0;                  // w * h
    int iscrowd = 0;

    friend bool operator==(const CocoAnnotation&, const CocoAnnotation&) = default;
};

struct CocoCategory {
    int id = 0;
    std::string name;

    friend bool operator==(const CocoCategory&, const CocoCategory&) = default;
};

/// COCO container. The 7 categories are fixed: id = ClassId code + 1.
struct CocoDataset {
    std::vector<CocoImage> images;
    std::vector<CocoAnnotation> annotations;
    std::vector<CocoCategory> categories = standard_categories();

    static std::vector<CocoCategory> standard_categories();
    friend bool operator==(const CocoDataset&, const CocoDataset&) = default;
};

constexpr int coco_category_id(ClassId c) noexcept { return code(c) + 1; }
std::optional<ClassId> class_from_coco_category(int category_id) noexcept;

class CocoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::ordered_json to_json(const CocoDataset& d);

/// Parses COCO JSON. Categories are matched by name onto the 7 classes and
/// annotation category ids renumbered accordingly. Referential integrity and
/// positive box sizes are checked.
CocoDataset coco_from_json(const nlohmann::json& j);
CocoDataset read_coco(const std::filesystem::path& path);

/// Throws CocoError describing the first violated invariant.
void validate(const CocoDataset& d);

std::array<std::size_t, kClassCount> count_by_class(const CocoDataset& d);

/// How to read a crowdsourcing export. Field locations are dotted paths
/// ("region.x"); an empty `records` path means the document root is the array.
struct ExportMapping {
    int version = 1;
    std::string records = "data";
    std::string image = "location.standard";
    std::string x = "region.x";
    std::string y = "region.y";
    std::string width = "region.width";
    std::string height = "region.height";
    std::string category = "data.category";
    bool normalized = false;  // region given as fractions of the image
    std::map<std::string, ClassId> labels;

    static ExportMapping defaults();
    static ExportMapping from_json(const nlohmann::json& j);
};

struct ConvertResult {
    CocoDataset dataset;
    std::array<std::size_t, kClassCount> counts{};
    std::vector<std::string> rejections;
    std::vector<std::string> warnings;
    std::size_t input_regions = 0;
};

using ImageDims = std::map<std::string, std::pair<int, int>>;

/// One annotation per region; images numbered 1.. in sorted key order,
/// annotations 1.. in input order. Unknown labels and pages without
/// dimensions are rejected; boxes spilling off the image are clamped.
/// Postcondition: annotations + rejections == input_regions.
ConvertResult convert(const nlohmann::json& raw, const ExportMapping& mapping, const ImageDims& dims);

struct CocoSplit {
    CocoDataset train;
    CocoDataset val;
};

/// Image-level split. |val| = round(val_fraction * N); the selection is a
/// seeded Fisher-Yates shuffle, identical for identical inputs.
CocoSplit split(const CocoDataset& d, double val_fraction, std::uint64_t seed);

}  // namespace pagevis
