#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "pagevis/geometry.hpp"

using namespace pagevis;

namespace {

oracle::Box ob(const NormBox& b) { return {b.x1(), b.y1(), b.x2(), b.y2()}; }

NormBox random_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
        double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        if (a > b) std::swap(a, b);
        if (c > d) std::swap(c, d);
        if (b - a > 1e-3 && d - c > 1e-3) return NormBox(a, c, b, d);
    }
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("box construction validates coordinates") {
    CHECK_NOTHROW(NormBox(0, 0, 1, 1));
    CHECK_THROWS_AS(NormBox(0.5, 0, 0.5, 1), GeometryError);
    CHECK_THROWS_AS(NormBox(0.6, 0, 0.5, 1), GeometryError);
    CHECK_THROWS_AS(NormBox(-0.1, 0, 0.5, 1), GeometryError);
    CHECK_THROWS_AS(NormBox(0, 0, 1.01, 1), GeometryError);
    CHECK_THROWS_AS(NormBox(0, 0, std::nan(""), 1), GeometryError);
}

TEST_CASE("from_raw swaps and clamps") {
    bool clamped = false;
    const auto b = NormBox::from_raw(0.8, 1.2, 0.2, -0.1, &clamped);
    CHECK(clamped);
    CHECK(b == NormBox(0.2, 0.0, 0.8, 1.0));
    CHECK_THROWS_AS(NormBox::from_raw(1.1, 0, 1.5, 1), GeometryError);
}

TEST_CASE("iou examples") {
    CHECK(iou(NormBox(0, 0, 1, 1), NormBox(0, 0, 1, 1)) == 1.0);
    CHECK(iou(NormBox(0, 0, 0.5, 0.5), NormBox(0.5, 0.5, 1, 1)) == 0.0);
    const NormBox a(0, 0, 0.5, 1), b(0.25, 0, 0.75, 1);
    // 0.25 / 0.75, checked against a 1000x1000 raster
    CHECK(oracle::raster_iou(ob(a), ob(b)) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
    CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("union_area examples") {
    CHECK(union_area({}) == 0.0);
    const std::vector<NormBox> one{NormBox(0, 0, 0.5, 0.5)};
    CHECK(union_area(one) == doctest::Approx(0.25));
    const std::vector<NormBox> twice{NormBox(0, 0, 0.5, 0.5), NormBox(0, 0, 0.5, 0.5)};
    CHECK(union_area(twice) == doctest::Approx(0.25));
    const std::vector<NormBox> overlap{NormBox(0, 0, 0.5, 1), NormBox(0.25, 0, 0.75, 1)};
    CHECK(oracle::raster_union({ob(overlap[0]), ob(overlap[1])}) == doctest::Approx(0.75).epsilon(1e-3));
    CHECK(union_area(overlap) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("contains_point is half-open") {
    CHECK(contains_point(NormBox(0, 0, 1, 1), 0.5, 0.5));
    CHECK_FALSE(contains_point(NormBox(0, 0, 0.5, 0.5), 0.5, 0.5));
    CHECK(contains_point(NormBox(0.2, 0.2, 0.4, 0.4), 0.2, 0.3));
    CHECK_FALSE(contains_point(NormBox(0.2, 0.2, 0.4, 0.4), 0.3, 0.4));
}

TEST_CASE("iou properties on random boxes") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_box(rng), b = random_box(rng);
        const double v = iou(a, b);
        CHECK(v == iou(b, a));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(v == doctest::Approx(oracle::iou(ob(a), ob(b))).epsilon(1e-12));
    }
}

TEST_CASE("union_area properties on random sets") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 300; ++i) {
        std::vector<NormBox> boxes;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int k = 0; k < n; ++k) boxes.push_back(random_box(rng));
        const double u = union_area(boxes);
        CHECK(u >= 0.0);
        CHECK(u <= 1.0);
        double max_single = 0.0, sum = 0.0;
        for (const auto& b : boxes) {
            max_single = std::max(max_single, b.area());
            sum += b.area();
        }
        CHECK(u >= max_single - 1e-12);
        CHECK(u <= sum + 1e-12);
        // adding a box never shrinks the union
        auto more = boxes;
        more.push_back(random_box(rng));
        CHECK(union_area(more) >= u - 1e-12);
        // order does not matter
        std::shuffle(boxes.begin(), boxes.end(), rng);
        CHECK(union_area(boxes) == doctest::Approx(u).epsilon(1e-12));
    }
}

TEST_CASE("union_area matches a raster oracle exactly on grid-aligned boxes") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 10; ++i) {
        std::vector<NormBox> boxes;
        std::vector<oracle::Box> raw;
        const int n = 1 + static_cast<int>(rng() % 20);
        for (int k = 0; k < n; ++k) {
            const int a = static_cast<int>(rng() % 199), c = static_cast<int>(rng() % 199);
            const int b = a + 1 + static_cast<int>(rng() % static_cast<unsigned>(200 - a));
            const int d = c + 1 + static_cast<int>(rng() % static_cast<unsigned>(200 - c));
            boxes.emplace_back(a / 200.0, c / 200.0, b / 200.0, d / 200.0);
            raw.push_back(ob(boxes.back()));
        }
        CHECK(union_area(boxes) == doctest::Approx(oracle::raster_union(raw, 200)).epsilon(1e-9));
    }
}

}  // TEST_SUITE
