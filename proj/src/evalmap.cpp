#include "pagevis/evalmap.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include <fmt/format.h>

#include "pagevis/log.hpp"

namespace pagevis {

std::array<double, 10> iou_thresholds() {
    std::array<double, 10> t{};
    for (int i = 0; i < 10; ++i) t[i] = (50.0 + 5.0 * i) / 100.0;
    return t;
}

std::array<double, 101> recall_points() {
    std::array<double, 101> r{};
    for (int i = 0; i <= 100; ++i) r[i] = i * 0.01;
    return r;
}

std::vector<MatchedPrediction> match_at_threshold(std::span<const Prediction> preds, std::span<const NormBox> gts,
                                                  double iou_t) {
    std::vector<Prediction> ordered(preds.begin(), preds.end());
    sort_predictions(ordered);
    std::vector<bool> taken(gts.size(), false);
    std::vector<MatchedPrediction> out;
    out.reserve(ordered.size());
    for (const auto& p : ordered) {
        double best = -1.0;
        std::size_t best_idx = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            const double v = iou(p.box, gts[g]);
            if (v > best) {
                best = v;
                best_idx = g;
            }
        }
        const bool hit = best_idx < gts.size() && best >= iou_t;
        if (hit) taken[best_idx] = true;
        out.push_back({p, hit});
    }
    return out;
}

std::optional<double> average_precision(std::vector<ScoredMatch> matches, std::size_t gt_count) {
    if (gt_count == 0) return std::nullopt;
    std::stable_sort(matches.begin(), matches.end(),
                     [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });
    const auto n = matches.size();
    std::vector<double> recall(n), precision(n);
    std::size_t tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (matches[k].matched) ++tp;
        recall[k] = static_cast<double>(tp) / static_cast<double>(gt_count);
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    }
    // monotone non-increasing envelope
    for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);

    double sum = 0.0;
    for (double r : recall_points()) {
        const auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return sum / 101.0;
}

namespace {

struct PooledEntry {
    const std::string* page;
    Prediction prediction;
    bool matched;
};

/// AP for one label group averaged over IoU thresholds. `preds` and `gts`
/// are already restricted to the group and keyed by page.
std::optional<double> group_ap(const std::map<std::string, std::vector<Prediction>>& preds,
                               const std::map<std::string, std::vector<NormBox>>& gts, std::size_t gt_count) {
    if (gt_count == 0) return std::nullopt;
    static const std::vector<NormBox> kNoBoxes;
    double total = 0.0;
    for (double t : iou_thresholds()) {
        std::vector<PooledEntry> pooled;
        for (const auto& [page, list] : preds) {
            auto git = gts.find(page);
            const auto& page_gts = git == gts.end() ? kNoBoxes : git->second;
            for (const auto& m : match_at_threshold(list, page_gts, t)) pooled.push_back({&page, m.prediction, m.matched});
        }
        // global order: prediction_order, then page id; stable keeps in-page order
        std::stable_sort(pooled.begin(), pooled.end(), [](const PooledEntry& a, const PooledEntry& b) {
            if (prediction_order(a.prediction, b.prediction)) return true;
            if (prediction_order(b.prediction, a.prediction)) return false;
            return *a.page < *b.page;
        });
        std::vector<ScoredMatch> flat;
        flat.reserve(pooled.size());
        for (const auto& e : pooled) flat.push_back({e.prediction.score, e.matched});
        total += *average_precision(std::move(flat), gt_count);
    }
    return total / static_cast<double>(iou_thresholds().size());
}

}  // namespace

ApResult evaluate(const PagePredictions& preds, std::span<const GroundTruth> gts) {
    if (gts.empty()) throw EvalError("no ground truth to evaluate against");

    ApResult result;
    std::array<std::map<std::string, std::vector<Prediction>>, kClassCount> preds_by_class;
    std::array<std::map<std::string, std::vector<NormBox>>, kClassCount> gts_by_class;
    std::map<std::string, std::vector<Prediction>> merged_preds;
    std::map<std::string, std::vector<NormBox>> merged_gts;

    for (const auto& [page, list] : preds) {
        for (const auto& p : list) {
            if (p.score < kSaveFloor) continue;
            preds_by_class[code(p.class_id)][page].push_back(p);
            auto relabeled = p;
            relabeled.class_id = ClassId::Photograph;
            merged_preds[page].push_back(relabeled);
        }
    }
    for (const auto& g : gts) {
        gts_by_class[code(g.class_id)][g.page_id].push_back(g.box);
        ++result.per_category_gt_counts[code(g.class_id)];
        merged_gts[g.page_id].push_back(g.box);
    }
    result.one_class_gt_count = gts.size();

    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < kClassCount; ++c) {
        result.per_category_ap[c] = group_ap(preds_by_class[c], gts_by_class[c], result.per_category_gt_counts[c]);
        if (result.per_category_ap[c]) {
            sum += *result.per_category_ap[c];
            ++present;
        }
    }
    result.map_value = present ? sum / present : 0.0;
    result.one_class_ap = *group_ap(merged_preds, merged_gts, gts.size());
    return result;
}

std::vector<GroundTruth> ground_truth_from_coco(const CocoDataset& d) {
    std::map<std::int64_t, const CocoImage*> images;
    for (const auto& im : d.images) images[im.id] = &im;
    std::vector<GroundTruth> out;
    out.reserve(d.annotations.size());
    for (const auto& a : d.annotations) {
        const auto* im = images.at(a.image_id);
        const double w = im->width, h = im->height;
        bool clamped = false;
        auto box = NormBox::from_raw(a.bbox[0] / w, a.bbox[1] / h, (a.bbox[0] + a.bbox[2]) / w,
                                     (a.bbox[1] + a.bbox[3]) / h, &clamped);
        if (clamped) log()->info("annotation {} clamped to image bounds", a.id);
        out.push_back({im->file_name, box, *class_from_coco_category(a.category_id)});
    }
    return out;
}

std::vector<GroundTruth> ground_truth_from_predictions(const PagePredictions& p) {
    std::vector<GroundTruth> out;
    for (const auto& [page, list] : p) {
        for (const auto& pred : list) out.push_back({page, pred.box, pred.class_id});
    }
    return out;
}

nlohmann::ordered_json to_json(const ApResult& r) {
    nlohmann::ordered_json j;
    auto cats = nlohmann::ordered_json::array();
    for (auto c : kAllClasses) {
        nlohmann::ordered_json row;
        row["class_id"] = code(c);
        row["name"] = class_name(c);
        const auto& ap = r.per_category_ap[code(c)];
        row["ap"] = ap ? nlohmann::ordered_json(*ap) : nlohmann::ordered_json(nullptr);
        row["gt_count"] = r.per_category_gt_counts[code(c)];
        cats.push_back(std::move(row));
    }
    j["per_category"] = std::move(cats);
    j["map"] = r.map_value;
    j["one_class_ap"] = r.one_class_ap;
    j["one_class_gt_count"] = r.one_class_gt_count;
    return j;
}

std::string format_table(const ApResult& r) {
    std::string out = fmt::format("{:<20} {:>8} {:>10}\n", "Category", "AP", "# GT");
    for (auto c : kAllClasses) {
        const auto& ap = r.per_category_ap[code(c)];
        out += fmt::format("{:<20} {:>8} {:>10}\n", class_name(c), ap ? fmt::format("{:.2f}%", *ap * 100.0) : "N/A",
                           r.per_category_gt_counts[code(c)]);
    }
    out += fmt::format("{:<20} {:>8} {:>10}\n", "Averaged (mAP)", fmt::format("{:.2f}%", r.map_value * 100.0), "N/A");
    out += fmt::format("{:<20} {:>8} {:>10}\n", "One Class", fmt::format("{:.2f}%", r.one_class_ap * 100.0),
                       r.one_class_gt_count);
    return out;
}

}  // namespace pagevis
