#include "pagevis/alto.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>

#include <expat.h>
#include <fmt/format.h>

#include "pagevis/log.hpp"

namespace pagevis {
namespace {

std::string_view local_name(const XML_Char* name) {
    std::string_view n(name);
    if (auto pos = n.rfind(':'); pos != std::string_view::npos) n.remove_prefix(pos + 1);
    return n;
}

std::optional<double> parse_number(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool has_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

struct RawString {
    std::string content;
    double hpos, vpos, width, height;
};

struct ParseState {
    std::optional<double> page_width;
    std::optional<double> page_height;
    std::vector<RawString> strings;
    std::size_t string_elements = 0;
    std::size_t skipped = 0;
    bool in_measurement_unit = false;
    std::string measurement_unit;
};

void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
    auto& st = *static_cast<ParseState*>(user);
    const auto element = local_name(name);

    if (element == "MeasurementUnit") {
        st.in_measurement_unit = true;
        return;
    }

    if (element == "Page") {
        if (st.page_width && st.page_height) return;
        std::optional<double> w, h;
        for (auto a = attrs; *a; a += 2) {
            const auto key = local_name(a[0]);
            if (key == "WIDTH") w = parse_number(a[1]);
            else if (key == "HEIGHT") h = parse_number(a[1]);
        }
        if (w && h && *w > 0.0 && *h > 0.0) {
            st.page_width = w;
            st.page_height = h;
        }
        return;
    }

    if (element != "String") return;
    ++st.string_elements;

    const char* content = nullptr;
    std::optional<double> hpos, vpos, width, height;
    for (auto a = attrs; *a; a += 2) {
        const auto key = local_name(a[0]);
        if (key == "CONTENT") content = a[1];
        else if (key == "HPOS") hpos = parse_number(a[1]);
        else if (key == "VPOS") vpos = parse_number(a[1]);
        else if (key == "WIDTH") width = parse_number(a[1]);
        else if (key == "HEIGHT") height = parse_number(a[1]);
    }
    if (!content || !hpos || !vpos || !width || !height || *width <= 0.0 || *height <= 0.0) {
        ++st.skipped;
        return;
    }
    std::string_view text(content);
    if (text.empty() || has_space(text)) {
        ++st.skipped;
        return;
    }
    st.strings.push_back(RawString{std::string(text), *hpos, *vpos, *width, *height});
}

void on_end(void* user, const XML_Char* name) {
    auto& st = *static_cast<ParseState*>(user);
    if (local_name(name) == "MeasurementUnit") st.in_measurement_unit = false;
}

void on_text(void* user, const XML_Char* s, int len) {
    auto& st = *static_cast<ParseState*>(user);
    if (!st.in_measurement_unit) return;
    for (int i = 0; i < len; ++i) {
        if (s[i] != ' ' && s[i] != '\n' && s[i] != '\r' && s[i] != '\t') st.measurement_unit.push_back(s[i]);
    }
}

struct ParserDeleter {
    void operator()(XML_Parser p) const noexcept { XML_ParserFree(p); }
};

}  // namespace

AltoPage parse_alto(std::span<const char> xml, int image_width, int image_height) {
    if (xml.size() > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
        throw AltoParseError("ALTO document too large", 0);
    }

    ParseState st;
    std::unique_ptr<std::remove_pointer_t<XML_Parser>, ParserDeleter> parser(XML_ParserCreate(nullptr));
    if (!parser) throw std::bad_alloc();
    XML_SetUserData(parser.get(), &st);
    XML_SetElementHandler(parser.get(), on_start, on_end);
    XML_SetCharacterDataHandler(parser.get(), on_text);

    if (XML_Parse(parser.get(), xml.data(), static_cast<int>(xml.size()), XML_TRUE) == XML_STATUS_ERROR) {
        const auto offset = static_cast<long long>(XML_GetCurrentByteIndex(parser.get()));
        throw AltoParseError(fmt::format("malformed XML at byte {} (line {}): {}", offset,
                                         XML_GetCurrentLineNumber(parser.get()),
                                         XML_ErrorString(XML_GetErrorCode(parser.get()))),
                             offset);
    }

    AltoPage page;
    page.string_elements = st.string_elements;
    page.skipped = st.skipped;
    page.scale_note.measurement_unit = st.measurement_unit;

    if (st.page_width && st.page_height) {
        page.source_width = *st.page_width;
        page.source_height = *st.page_height;
        page.scale_note.source = ScaleSource::PageDimensions;
    } else {
        double right = 0.0, bottom = 0.0;
        for (const auto& s : st.strings) {
            right = std::max(right, s.hpos + s.width);
            bottom = std::max(bottom, s.vpos + s.height);
        }
        if (right <= 0.0 || bottom <= 0.0) {
            throw AltoUnitError("ALTO page has no WIDTH/HEIGHT and no token extent to normalize against");
        }
        page.source_width = right;
        page.source_height = bottom;
        page.scale_note.source = ScaleSource::TokenExtent;
        log()->debug("ALTO page lacks dimensions, normalizing by token extent {}x{}", right, bottom);
    }
    page.scale_note.alto_width = page.source_width;
    page.scale_note.alto_height = page.source_height;
    if (image_width > 0 && image_height > 0) {
        page.scale_note.units_per_pixel_x = page.source_width / image_width;
        page.scale_note.units_per_pixel_y = page.source_height / image_height;
    }

    page.tokens.reserve(st.strings.size());
    for (auto& s : st.strings) {
        const double x1 = s.hpos / page.source_width;
        const double y1 = s.vpos / page.source_height;
        const double x2 = (s.hpos + s.width) / page.source_width;
        const double y2 = (s.vpos + s.height) / page.source_height;
        bool clamped = false;
        try {
            auto box = NormBox::from_raw(x1, y1, x2, y2, &clamped);
            if (clamped) ++page.clamped;
            page.tokens.push_back(WordToken{std::move(s.content), box, page.tokens.size()});
        } catch (const GeometryError&) {
            // entirely outside the page
            ++page.skipped;
        }
    }
    if (page.clamped > 0) log()->debug("clamped {} ALTO token boxes to page bounds", page.clamped);
    return page;
}

}  // namespace pagevis
