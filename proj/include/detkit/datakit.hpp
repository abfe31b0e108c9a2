#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "detkit/evalkit.hpp"
#include "detkit/geometry.hpp"

namespace detkit {

struct DatasetImage {
    std::int64_t id = 0;
    std::string file_name;
    ImageSize size;
};

struct Annotation {
    std::int64_t id = 0;
    std::int64_t image_id = 0;
    int class_id = 0;
    Xywh bbox;
    double area = 0.0;
    bool ignore = false;
};

struct Category {
    int id = 0;
    std::string name;
};

struct Dataset {
    std::vector<DatasetImage> images;
    std::vector<Annotation> annotations;
    std::vector<Category> categories;
    // free-form metadata, serialized as the COCO "info" object
    std::map<std::string, std::string> info;
    std::int64_t clamp_warnings = 0;

    void validate() const;
};

// COCO detection schema reader. Cross-references are validated and boxes
// extending past the image bounds are clamped (counted in clamp_warnings).
// Malformed JSON, dangling ids and negative box sizes raise ValidationError
// naming the offending record.
Dataset load_dataset(const std::string& path);
Dataset parse_dataset(const std::string& json_text);
std::string dataset_to_json(const Dataset& ds);
void save_dataset(const Dataset& ds, const std::string& path);

// Flat detection-results schema: [{image_id, category_id, bbox, score}].
std::vector<Detection> load_detections(const std::string& path);
std::vector<Detection> parse_detections(const std::string& json_text);
std::string detections_to_json(const std::vector<Detection>& dets);
void save_detections(const std::vector<Detection>& dets,
                     const std::string& path);

GroundTruthSet to_ground_truth(const Dataset& ds);

struct TileConfig {
    int patch = 800;
    int stride = 800;
    double retention = 0.5;  // min kept fraction of a clipped box's area
    int threads = 1;

    void validate() const;
};

// Cuts every image into patch x patch windows on a stride grid; the last
// row/column shifts inward so patches never exceed the source. Annotations
// are clipped to each intersecting patch, translated to patch coordinates,
// and kept iff clipped-area/original-area >= retention. Sources smaller
// than the patch yield a single full-image patch, counted in
// info["undersized_patches"].
Dataset tile(const Dataset& ds, const TileConfig& cfg);

struct InstanceStat {
    std::int64_t image_id = 0;
    std::int64_t annotation_id = 0;
    int class_id = 0;
    double norm_w = 0.0;
    double norm_h = 0.0;
    double sqrt_area = 0.0;
};

struct Histogram {
    double bin_width = 10.0;
    std::vector<std::int64_t> counts;  // bin k covers [k*bw, (k+1)*bw)

    std::int64_t total() const;
};

struct StatsConfig {
    double bin_width = 10.0;       // sqrt-area units
    double small_threshold = 0.2;  // normalized-dimension cutoff
};

struct StatsReport {
    std::vector<InstanceStat> instances;  // sorted by (image_id, ann id)
    Histogram overall;
    std::map<int, Histogram> per_category;
    double fraction_small = 0.0;  // norm_w and norm_h both <= threshold
    double small_threshold = 0.2;
};

// Per-instance normalized dimensions (w/image_width, h/image_height) and
// sqrt(w*h), plus sqrt-area histograms overall and per category.
StatsReport stats(const Dataset& ds, const StatsConfig& cfg = {});

std::string stats_to_csv(const StatsReport& report);
std::string stats_to_json(const StatsReport& report);

}  // namespace detkit
