#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pagevis/cocoset.hpp"
#include "pagevis/detect.hpp"

namespace pagevis {

struct GroundTruth {
    std::string page_id;
    NormBox box;
    ClassId class_id = ClassId::Photograph;
};

/// Predictions keyed by page id (the shape read_predictions produces).
using PagePredictions = std::map<std::string, std::vector<Prediction>>;

struct MatchedPrediction {
    Prediction prediction;
    bool matched = false;
};

/// Greedy one-to-one matching within one page and one category.
/// Predictions are visited in prediction_order; each takes the unmatched
/// ground truth of highest IoU (lowest index on ties) when that IoU >= iou_t.
/// Output follows the visiting order.
std::vector<MatchedPrediction> match_at_threshold(std::span<const Prediction> preds,
                                                  std::span<const NormBox> gts, double iou_t);

struct ScoredMatch {
    double score = 0.0;
    bool matched = false;
};

/// 101-point interpolated AP of a match list pooled across pages.
/// The list is ordered by descending score (stable, so callers control ties).
/// Returns std::nullopt when gt_count == 0.
std::optional<double> average_precision(std::vector<ScoredMatch> matches, std::size_t gt_count);

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> iou_thresholds();
/// Recall sample points 0.00, 0.01, ..., 1.00 (i * 0.01).
std::array<double, 101> recall_points();

struct ApResult {
    std::array<std::optional<double>, kClassCount> per_category_ap{};
    std::array<std::size_t, kClassCount> per_category_gt_counts{};
    double map_value = 0.0;
    double one_class_ap = 0.0;
    std::size_t one_class_gt_count = 0;
};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// COCO-style evaluation: per-class AP averaged over the 10 IoU thresholds,
/// mAP over classes that have ground truth, and AP with all classes merged.
/// Predictions scoring below kSaveFloor are ignored. Throws EvalError when
/// there is no ground truth at all.
ApResult evaluate(const PagePredictions& preds, std::span<const GroundTruth> gts);

std::vector<GroundTruth> ground_truth_from_coco(const CocoDataset& d);
/// Ground truth from a prediction wire-format set (scores ignored).
std::vector<GroundTruth> ground_truth_from_predictions(const PagePredictions& p);

nlohmann::ordered_json to_json(const ApResult& r);
/// Human-readable table, one row per class plus mAP and one-class rows.
std::string format_table(const ApResult& r);

}  // namespace pagevis
