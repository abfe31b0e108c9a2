#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detkit/suppression.hpp"

namespace detkit {

struct GtInstance {
    std::int64_t id = 0;
    int class_id = 0;
    Box box;
    double area = 0.0;  // annotation area when present, else box area
    bool ignore = false;
};

struct GtImage {
    std::int64_t id = 0;
    std::vector<GtInstance> instances;
};

struct GroundTruthSet {
    std::vector<GtImage> images;
    std::vector<int> category_ids;
};

struct Detection {
    std::int64_t image_id = 0;
    int class_id = 0;
    Box box;
    double score = 0.0;
    std::int64_t original_index = 0;  // position in the detections file
};

// Half-open area interval [lo, hi) in pixels^2.
struct AreaRange {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
};

struct EvalConfig {
    std::vector<double> iou_thresholds;  // default 0.50:0.05:0.95
    AreaRange range_all{"ALL", 0.0, 0.0};
    AreaRange range_s{"S", 0.0, 0.0};
    AreaRange range_m{"M", 0.0, 0.0};
    AreaRange range_l{"L", 0.0, 0.0};
    std::size_t max_detections = 100;
    int recall_points = 101;
    int threads = 1;

    void validate() const;

    // Area boundaries 10/144/1024 as published alongside the metrics.
    static EvalConfig paper_defaults();
    // Stock COCO boundaries 1024/9216.
    static EvalConfig coco_defaults();
};

enum class MatchFlag { TP, FP, IGNORED };

// Greedy matching for one image and one class at IoU threshold t.
// Detections are visited in descending score order (ties: lower
// original_index); each takes the unmatched non-ignore GT of highest
// IoU >= t, falling back to an unmatched ignore GT; each GT matches at
// most once. Detections matched to ignore GTs are neither TP nor FP.
// Flags are returned aligned with the input detection order.
std::vector<MatchFlag> match_image(const std::vector<ScoredBox>& dets,
                                   const std::vector<GtInstance>& gts,
                                   double iou_threshold);

struct ScoredFlag {
    double score = 0.0;
    std::int64_t image_id = 0;
    std::int64_t original_index = 0;
    MatchFlag flag = MatchFlag::FP;
};

// 101-point interpolated average precision over the detections' global
// score ordering (ties: image_id, then original_index). IGNORED entries do
// not enter the curve. Returns nullopt when n_gt is zero.
std::optional<double> average_precision(std::vector<ScoredFlag> flags,
                                        std::int64_t n_gt,
                                        int recall_points);

struct MetricRow {
    std::optional<double> ap, ap50, ap75, ap_s, ap_m, ap_l;
};

struct EvalReport {
    MetricRow overall;
    std::map<int, MetricRow> per_category;
    std::int64_t n_images = 0;
    std::int64_t n_detections = 0;
    std::int64_t n_ground_truth = 0;
};

// Full evaluation: detections truncated per image to cfg.max_detections by
// score, matched per (category, IoU threshold, area range) with
// out-of-range GTs treated as ignore, then category-then-threshold
// averaged. Detections citing a class absent from gts.category_ids are
// rejected.
EvalReport evaluate(const std::vector<Detection>& dets,
                    const GroundTruthSet& gts, const EvalConfig& cfg);

// Six-column plain-text row in the order AP AP50 AP75 AP_S AP_M AP_L.
std::string report_table(const EvalReport& report);

}  // namespace detkit
