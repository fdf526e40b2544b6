#include <random>

#include "doctest.h"
#include "pagevis/evalmap.hpp"
#include "scenes.hpp"

using namespace pagevis;

namespace {

Prediction pred(NormBox b, double s, ClassId c = ClassId::Photograph) { return {b, s, c}; }

using testsupport::jitter;
using testsupport::random_scene;

}  // namespace

TEST_SUITE("evalmap") {

TEST_CASE("thresholds and recall grid") {
    const auto t = iou_thresholds();
    CHECK(t.front() == 0.5);
    CHECK(t.back() == 0.95);
    const auto r = recall_points();
    CHECK(r.size() == 101);
    CHECK(r.front() == 0.0);
    CHECK(r.back() == 1.0);
}

TEST_CASE("matching: exact hit and duplicate penalty") {
    const std::vector<NormBox> gt{NormBox(0.1, 0.1, 0.5, 0.5)};
    const std::vector<Prediction> one{pred(gt[0], 0.9)};
    const auto m1 = match_at_threshold(one, gt, 0.5);
    REQUIRE(m1.size() == 1);
    CHECK(m1[0].matched);
    const std::vector<Prediction> two{pred(gt[0], 0.8), pred(gt[0], 0.9)};
    const auto m2 = match_at_threshold(two, gt, 0.5);
    REQUIRE(m2.size() == 2);
    CHECK(m2[0].prediction.score == 0.9);
    CHECK(m2[0].matched);
    CHECK_FALSE(m2[1].matched);
}

TEST_CASE("matching agrees with exhaustive search") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<NormBox> gts;
        for (int i = 0; i < 2 + static_cast<int>(rng() % 2); ++i) {
            const double x = u(rng) * 0.5, y = u(rng) * 0.5;
            gts.emplace_back(x, y, x + 0.2 + u(rng) * 0.2, y + 0.2 + u(rng) * 0.2);
        }
        std::vector<Prediction> preds;
        for (int i = 0; i < 3 + static_cast<int>(rng() % 2); ++i) {
            preds.push_back(pred(jitter(gts[rng() % gts.size()], rng, 0.12), 0.05 + u(rng) * 0.95));
        }
        const double t = iou_thresholds()[rng() % 10];
        const auto got = match_at_threshold(preds, gts, t);
        std::vector<oracle::Box> op, og;
        for (const auto& m : got) op.push_back({m.prediction.box.x1(), m.prediction.box.y1(), m.prediction.box.x2(), m.prediction.box.y2()});
        for (const auto& g : gts) og.push_back({g.x1(), g.y1(), g.x2(), g.y2()});
        const auto want = oracle::exhaustive_match(op, og, t);
        REQUIRE(want.size() == got.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].matched == (want[i] >= 0));
    }
}

TEST_CASE("AP hand traces") {
    // 1 gt; correct at 0.9 then false at 0.8: precision 1 at every recall point
    CHECK(*average_precision({{0.9, true}, {0.8, false}}, 1) == 1.0);
    // false at 0.9 then correct at 0.8: envelope 0.5 everywhere
    CHECK(*average_precision({{0.8, true}, {0.9, false}}, 1) == 0.5);
    CHECK(*average_precision({}, 3) == 0.0);
    CHECK_FALSE(average_precision({{0.9, false}}, 0));
    // 2 gts, one found: recall 0.5 reached at precision 1 -> points 0..50 score 1
    CHECK(*average_precision({{0.9, true}}, 2) == doctest::Approx(51.0 / 101.0));
}

TEST_CASE("perfect scene scores 1 everywhere") {
    PagePredictions preds;
    std::vector<GroundTruth> gts;
    const std::vector<std::pair<NormBox, ClassId>> objects{{NormBox(0.1, 0.1, 0.3, 0.3), ClassId::Photograph},
                                                           {NormBox(0.5, 0.1, 0.9, 0.2), ClassId::Headline},
                                                           {NormBox(0.2, 0.5, 0.8, 0.9), ClassId::Advertisement}};
    for (const auto& [b, c] : objects) {
        preds["page"].push_back(pred(b, 0.9, c));
        gts.push_back({"page", b, c});
    }
    const auto r = evaluate(preds, gts);
    CHECK(*r.per_category_ap[code(ClassId::Photograph)] == 1.0);
    CHECK(*r.per_category_ap[code(ClassId::Headline)] == 1.0);
    CHECK(*r.per_category_ap[code(ClassId::Advertisement)] == 1.0);
    CHECK_FALSE(r.per_category_ap[code(ClassId::Map)]);
    CHECK(r.map_value == 1.0);
    CHECK(r.one_class_ap == 1.0);
}

TEST_CASE("no predictions gives AP 0; empty ground truth is an error") {
    const std::vector<GroundTruth> gts{{"p", NormBox(0, 0, 0.5, 0.5), ClassId::Map}};
    const auto r = evaluate({}, gts);
    CHECK(*r.per_category_ap[code(ClassId::Map)] == 0.0);
    CHECK(r.map_value == 0.0);
    CHECK_THROWS_AS(evaluate({}, std::vector<GroundTruth>{}), EvalError);
}

TEST_CASE("matching never crosses pages") {
    PagePredictions preds;
    preds["a"].push_back(pred(NormBox(0, 0, 0.5, 0.5), 0.9));
    const std::vector<GroundTruth> gts{{"b", NormBox(0, 0, 0.5, 0.5), ClassId::Photograph}};
    CHECK(evaluate(preds, gts).map_value == 0.0);
}

TEST_CASE("evaluate matches the direct-definition oracle") {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 120; ++i) {
        const auto s = random_scene(rng);
        const auto got = evaluate(s.preds, s.gts);
        const auto want = oracle::evaluate(s.odets, s.otruths);
        for (int c = 0; c < kClassCount; ++c) {
            REQUIRE(got.per_category_ap[c].has_value() == want.per_class[c].has_value());
            if (want.per_class[c]) CHECK(*got.per_category_ap[c] == doctest::Approx(*want.per_class[c]).epsilon(1e-9));
        }
        CHECK(got.map_value == doctest::Approx(want.map).epsilon(1e-9));
        CHECK(got.one_class_ap == doctest::Approx(want.one_class).epsilon(1e-9));
    }
}

TEST_CASE("AP invariants") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 80; ++i) {
        const auto s = random_scene(rng);
        const auto base = evaluate(s.preds, s.gts);

        // strictly monotone score transform keeps every AP
        auto squashed = s.preds;
        for (auto& [_, list] : squashed) {
            for (auto& p : list) p.score = 0.05 + 0.95 * p.score * p.score;
        }
        const auto t = evaluate(squashed, s.gts);
        CHECK(t.map_value == doctest::Approx(base.map_value).epsilon(1e-12));
        CHECK(t.one_class_ap == doctest::Approx(base.one_class_ap).epsilon(1e-12));

        // a false positive below every score never helps
        auto extra = s.preds;
        extra["p0"].push_back(pred(NormBox(0.97, 0.97, 1.0, 1.0), 0.05, s.gts[0].class_id));
        CHECK(evaluate(extra, s.gts).per_category_ap[code(s.gts[0].class_id)].value() <=
              base.per_category_ap[code(s.gts[0].class_id)].value() + 1e-12);

        // one-class AP ignores labels
        auto relabeled = s.preds;
        for (auto& [_, list] : relabeled) {
            for (auto& p : list) p.class_id = static_cast<ClassId>((code(p.class_id) + 3) % kClassCount);
        }
        auto gts = s.gts;
        for (auto& g : gts) g.class_id = ClassId::Map;
        CHECK(evaluate(relabeled, gts).one_class_ap == doctest::Approx(base.one_class_ap).epsilon(1e-12));

        double lo = 1.0, hi = 0.0;
        for (const auto& ap : base.per_category_ap) {
            if (!ap) continue;
            CHECK(*ap >= 0.0);
            CHECK(*ap <= 1.0);
            lo = std::min(lo, *ap);
            hi = std::max(hi, *ap);
        }
        CHECK(base.map_value >= lo - 1e-12);
        CHECK(base.map_value <= hi + 1e-12);
    }
}

TEST_CASE("report formats") {
    const std::vector<GroundTruth> gts{{"p", NormBox(0, 0, 0.5, 0.5), ClassId::Map}};
    PagePredictions preds;
    preds["p"].push_back(pred(NormBox(0, 0, 0.5, 0.5), 0.7, ClassId::Map));
    const auto r = evaluate(preds, gts);
    const auto j = to_json(r);
    CHECK(j["map"] == 1.0);
    CHECK(j["per_category"][0]["ap"].is_null());
    CHECK(j["per_category"][2]["ap"] == 1.0);
    const auto table = format_table(r);
    CHECK(table.find("N/A") != std::string::npos);
    CHECK(table.find("100.00%") != std::string::npos);
}

}  // TEST_SUITE
