#include <string>

#include "doctest.h"
#include "pagevis/alto.hpp"
#include "support.hpp"

using namespace pagevis;

namespace {

AltoPage parse(const std::string& xml, int w = 0, int h = 0) { return parse_alto(xml, w, h); }

}  // namespace

TEST_SUITE("alto") {

TEST_CASE("single token normalizes by page dimensions") {
    const auto xml = testsupport::alto_xml(10000, 14000, {{"GETTYSBURG", 1000, 700, 2000, 350}});
    const auto page = parse(xml, 1667, 2333);
    REQUIRE(page.tokens.size() == 1);
    const auto& t = page.tokens[0];
    CHECK(t.text == "GETTYSBURG");
    CHECK(t.order_index == 0);
    // 1000/10000, 700/14000, 3000/10000, 1050/14000
    CHECK(t.box.x1() == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(t.box.y1() == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(t.box.x2() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(t.box.y2() == doctest::Approx(0.075).epsilon(1e-12));
    CHECK(page.scale_note.source == ScaleSource::PageDimensions);
    CHECK(page.scale_note.measurement_unit == "inch1200");
    CHECK(page.scale_note.units_per_pixel_x == doctest::Approx(10000.0 / 1667));
}

TEST_CASE("page without strings gives no tokens") {
    const auto page = parse(testsupport::alto_xml(100, 100, {}));
    CHECK(page.tokens.empty());
    CHECK(page.string_elements == 0);
}

TEST_CASE("tokens keep document order") {
    const auto page = parse(testsupport::alto_xml(100, 100, {{"above", 50, 10, 10, 5}, {"the", 10, 10, 10, 5}}));
    REQUIRE(page.tokens.size() == 2);
    CHECK(page.tokens[0].text == "above");
    CHECK(page.tokens[0].order_index == 0);
    CHECK(page.tokens[1].text == "the");
    CHECK(page.tokens[1].order_index == 1);
}

TEST_CASE("malformed XML reports a byte offset") {
    const std::string xml = "<alto><Layout><Page WIDTH=\"10\" HEIGHT=\"10\"><String CONTENT=\"a\"</Page></alto>";
    try {
        parse(xml);
        FAIL("expected AltoParseError");
    } catch (const AltoParseError& e) {
        CHECK(e.byte_offset() > 0);
        CHECK(e.byte_offset() <= static_cast<long long>(xml.size()));
    }
    CHECK_THROWS_AS(parse("<alto><Layout>"), AltoParseError);
    CHECK_THROWS_AS(parse(""), AltoParseError);
}

TEST_CASE("strings without usable coordinates are skipped and tallied") {
    const std::string xml = R"(<alto><Layout><Page WIDTH="100" HEIGHT="100"><PrintSpace>
        <String CONTENT="ok" HPOS="1" VPOS="1" WIDTH="5" HEIGHT="5"/>
        <String CONTENT="nohpos" VPOS="1" WIDTH="5" HEIGHT="5"/>
        <String CONTENT="zero" HPOS="1" VPOS="1" WIDTH="0" HEIGHT="5"/>
        <String CONTENT="" HPOS="1" VPOS="1" WIDTH="5" HEIGHT="5"/>
        <String CONTENT="bad" HPOS="x" VPOS="1" WIDTH="5" HEIGHT="5"/>
        <String CONTENT="outside" HPOS="200" VPOS="200" WIDTH="5" HEIGHT="5"/>
        <String CONTENT="edge" HPOS="98" VPOS="1" WIDTH="5" HEIGHT="5"/>
        </PrintSpace></Page></Layout></alto>)";
    const auto page = parse(xml);
    CHECK(page.string_elements == 7);
    REQUIRE(page.tokens.size() == 2);
    CHECK(page.tokens[0].text == "ok");
    CHECK(page.tokens[1].text == "edge");
    CHECK(page.tokens[1].order_index == 1);
    CHECK(page.tokens[1].box.x2() == 1.0);
    CHECK(page.skipped == 5);
    CHECK(page.clamped == 1);
}

TEST_CASE("missing page dimensions fall back to token extent") {
    const std::string xml = R"(<alto><Layout><Page><String CONTENT="a" HPOS="0" VPOS="0" WIDTH="50" HEIGHT="20"/>
        <String CONTENT="b" HPOS="50" VPOS="20" WIDTH="50" HEIGHT="20"/></Page></Layout></alto>)";
    const auto page = parse(xml);
    CHECK(page.scale_note.source == ScaleSource::TokenExtent);
    REQUIRE(page.tokens.size() == 2);
    CHECK(page.tokens[1].box == NormBox(0.5, 0.5, 1.0, 1.0));
    CHECK_THROWS_AS(parse("<alto><Layout><Page/></Layout></alto>"), AltoUnitError);
}

TEST_CASE("namespace prefixes are ignored") {
    const std::string xml = R"(<a:alto xmlns:a="http://www.loc.gov/standards/alto/ns-v3#"><a:Layout>
        <a:Page WIDTH="200" HEIGHT="100"><a:String CONTENT="Union" HPOS="20" VPOS="10" WIDTH="40" HEIGHT="10"/>
        </a:Page></a:Layout></a:alto>)";
    const auto page = parse(xml);
    REQUIRE(page.tokens.size() == 1);
    CHECK(page.tokens[0].box == NormBox(0.1, 0.1, 0.3, 0.2));
}

TEST_CASE("entities in CONTENT are decoded") {
    const std::string xml = R"(<alto><Layout><Page WIDTH="10" HEIGHT="10">
        <String CONTENT="A&amp;P" HPOS="1" VPOS="1" WIDTH="2" HEIGHT="2"/></Page></Layout></alto>)";
    const auto page = parse(xml);
    REQUIRE(page.tokens.size() == 1);
    CHECK(page.tokens[0].text == "A&P");
}

TEST_CASE("parsing is deterministic") {
    const auto xml = testsupport::alto_xml(9000, 12000, testsupport::word_grid(9000, 12000, 5, 5));
    const auto a = parse(xml), b = parse(xml);
    REQUIRE(a.tokens.size() == b.tokens.size());
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
        CHECK(a.tokens[i].text == b.tokens[i].text);
        CHECK(a.tokens[i].box == b.tokens[i].box);
    }
}

}  // TEST_SUITE
