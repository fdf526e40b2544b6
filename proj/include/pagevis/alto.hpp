#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pagevis/geometry.hpp"

namespace pagevis {

/// Malformed XML. `byte_offset` points at the position expat stopped.
class AltoParseError : public std::runtime_error {
public:
    AltoParseError(const std::string& what, long long byte_offset)
        : std::runtime_error(what), byte_offset_(byte_offset) {}
    long long byte_offset() const noexcept { return byte_offset_; }

private:
    long long byte_offset_;
};

/// Neither the Page element nor the tokens give a usable coordinate extent.
class AltoUnitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WordToken {
    std::string text;
    NormBox box;
    std::size_t order_index = 0;
};

enum class ScaleSource { PageDimensions, TokenExtent };

struct ScaleNote {
    ScaleSource source = ScaleSource::PageDimensions;
    double alto_width = 0.0;
    double alto_height = 0.0;
    // ALTO units per image pixel along each axis; informational only.
    double units_per_pixel_x = 0.0;
    double units_per_pixel_y = 0.0;
    std::string measurement_unit;
};

struct AltoPage {
    double source_width = 0.0;
    double source_height = 0.0;
    std::vector<WordToken> tokens;  // sorted by order_index
    ScaleNote scale_note;
    std::size_t string_elements = 0;
    std::size_t skipped = 0;  // Strings without usable content or coordinates
    std::size_t clamped = 0;
};

/// Parses ALTO (v1-v4, any namespace prefix) into word tokens in reading order.
///
/// Coordinates are normalized by the first Page element carrying WIDTH and
/// HEIGHT. Without one, the bounding extent of all Strings is used instead and
/// recorded in scale_note. Enclosing METS wrappers are tolerated: only the
/// ALTO elements are looked at.
AltoPage parse_alto(std::span<const char> xml, int image_width, int image_height);

}  // namespace pagevis
