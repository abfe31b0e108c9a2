#include "detkit/datakit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "detkit/errors.hpp"
#include "detkit/parallel.hpp"

namespace detkit {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << text;
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError("malformed " + what + " JSON: " + e.what());
    }
}

double number_field(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_number())
        throw ValidationError(ctx + ": missing numeric field '" + key + "'");
    return j[key].get<double>();
}

std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return buf;
}

}  // namespace

void Dataset::validate() const {
    std::set<std::int64_t> image_ids;
    std::set<int> category_ids;
    for (const auto& img : images) {
        if (img.size.width < 1 || img.size.height < 1)
            throw ValidationError("image " + std::to_string(img.id) +
                                  " has non-positive dimensions");
        if (!image_ids.insert(img.id).second)
            throw ValidationError("duplicate image id " +
                                  std::to_string(img.id));
    }
    for (const auto& cat : categories)
        if (!category_ids.insert(cat.id).second)
            throw ValidationError("duplicate category id " +
                                  std::to_string(cat.id));
    std::set<std::int64_t> ann_ids;
    for (const auto& ann : annotations) {
        const std::string ctx = "annotation " + std::to_string(ann.id);
        if (!ann_ids.insert(ann.id).second)
            throw ValidationError("duplicate " + ctx);
        if (!image_ids.count(ann.image_id))
            throw ValidationError(ctx + " references missing image " +
                                  std::to_string(ann.image_id));
        if (!category_ids.count(ann.class_id))
            throw ValidationError(ctx + " references missing category " +
                                  std::to_string(ann.class_id));
        if (ann.bbox.w < 0.0 || ann.bbox.h < 0.0)
            throw ValidationError(ctx + " has negative box dimensions");
        if (ann.area < 0.0)
            throw ValidationError(ctx + " has negative area");
    }
}

Dataset parse_dataset(const std::string& json_text) {
    const json root = parse_json(json_text, "annotation");
    if (!root.is_object())
        throw ValidationError("annotation JSON must be an object");

    Dataset ds;
    for (const auto& j : root.value("images", json::array())) {
        DatasetImage img;
        img.id = static_cast<std::int64_t>(number_field(j, "id", "image"));
        const std::string ctx = "image " + std::to_string(img.id);
        img.size.width = static_cast<int>(number_field(j, "width", ctx));
        img.size.height = static_cast<int>(number_field(j, "height", ctx));
        img.file_name = j.value("file_name", std::string{});
        ds.images.push_back(std::move(img));
    }
    for (const auto& j : root.value("categories", json::array())) {
        Category cat;
        cat.id = static_cast<int>(number_field(j, "id", "category"));
        cat.name = j.value("name", std::string{});
        ds.categories.push_back(std::move(cat));
    }
    for (const auto& j : root.value("annotations", json::array())) {
        Annotation ann;
        ann.id = static_cast<std::int64_t>(number_field(j, "id", "annotation"));
        const std::string ctx = "annotation " + std::to_string(ann.id);
        ann.image_id =
            static_cast<std::int64_t>(number_field(j, "image_id", ctx));
        ann.class_id = static_cast<int>(number_field(j, "category_id", ctx));
        if (!j.contains("bbox") || !j["bbox"].is_array() ||
            j["bbox"].size() != 4)
            throw ValidationError(ctx + ": bbox must be [x,y,w,h]");
        ann.bbox = {j["bbox"][0].get<double>(), j["bbox"][1].get<double>(),
                    j["bbox"][2].get<double>(), j["bbox"][3].get<double>()};
        ann.area = j.contains("area") ? j["area"].get<double>()
                                      : ann.bbox.w * ann.bbox.h;
        ann.ignore = j.value("iscrowd", 0) != 0 || j.value("ignore", false);
        ds.annotations.push_back(std::move(ann));
    }
    if (root.contains("info") && root["info"].is_object())
        for (const auto& [key, value] : root["info"].items())
            ds.info[key] = value.is_string()
                               ? value.get<std::string>()
                               : value.dump();

    ds.validate();

    // clamp boxes to image bounds, counting how many needed it
    std::map<std::int64_t, ImageSize> sizes;
    for (const auto& img : ds.images) sizes[img.id] = img.size;
    for (auto& ann : ds.annotations) {
        const ImageSize sz = sizes.at(ann.image_id);
        const double w = static_cast<double>(sz.width);
        const double h = static_cast<double>(sz.height);
        const double x1 = std::clamp(ann.bbox.x, 0.0, w);
        const double y1 = std::clamp(ann.bbox.y, 0.0, h);
        const double x2 = std::clamp(ann.bbox.x + ann.bbox.w, 0.0, w);
        const double y2 = std::clamp(ann.bbox.y + ann.bbox.h, 0.0, h);
        const Xywh clamped{x1, y1, x2 - x1, y2 - y1};
        if (clamped != ann.bbox) {
            ann.bbox = clamped;
            ++ds.clamp_warnings;
        }
    }
    return ds;
}

Dataset load_dataset(const std::string& path) {
    return parse_dataset(read_file(path));
}

std::string dataset_to_json(const Dataset& ds) {
    json root;
    root["images"] = json::array();
    for (const auto& img : ds.images)
        root["images"].push_back({{"id", img.id},
                                  {"file_name", img.file_name},
                                  {"width", img.size.width},
                                  {"height", img.size.height}});
    root["annotations"] = json::array();
    for (const auto& ann : ds.annotations)
        root["annotations"].push_back(
            {{"id", ann.id},
             {"image_id", ann.image_id},
             {"category_id", ann.class_id},
             {"bbox", {ann.bbox.x, ann.bbox.y, ann.bbox.w, ann.bbox.h}},
             {"area", ann.area},
             {"iscrowd", ann.ignore ? 1 : 0}});
    root["categories"] = json::array();
    for (const auto& cat : ds.categories)
        root["categories"].push_back({{"id", cat.id}, {"name", cat.name}});
    if (!ds.info.empty()) {
        json info = json::object();
        for (const auto& [key, value] : ds.info) info[key] = value;
        root["info"] = info;
    }
    return root.dump(2) + "\n";
}

void save_dataset(const Dataset& ds, const std::string& path) {
    write_file(path, dataset_to_json(ds));
}

std::vector<Detection> parse_detections(const std::string& json_text) {
    const json root = parse_json(json_text, "detections");
    if (!root.is_array())
        throw ValidationError("detections JSON must be an array");
    std::vector<Detection> dets;
    dets.reserve(root.size());
    for (std::size_t i = 0; i < root.size(); ++i) {
        const json& j = root[i];
        const std::string ctx = "detection #" + std::to_string(i);
        Detection d;
        d.image_id =
            static_cast<std::int64_t>(number_field(j, "image_id", ctx));
        d.class_id = static_cast<int>(number_field(j, "category_id", ctx));
        if (!j.contains("bbox") || !j["bbox"].is_array() ||
            j["bbox"].size() != 4)
            throw ValidationError(ctx + ": bbox must be [x,y,w,h]");
        d.box = xywh_to_box(j["bbox"][0].get<double>(),
                            j["bbox"][1].get<double>(),
                            j["bbox"][2].get<double>(),
                            j["bbox"][3].get<double>());
        d.score = number_field(j, "score", ctx);
        if (!(d.score >= 0.0 && d.score <= 1.0))
            throw ValidationError(ctx + ": score must lie in [0,1]");
        d.original_index = static_cast<std::int64_t>(i);
        dets.push_back(d);
    }
    return dets;
}

std::vector<Detection> load_detections(const std::string& path) {
    return parse_detections(read_file(path));
}

std::string detections_to_json(const std::vector<Detection>& dets) {
    json root = json::array();
    for (const auto& d : dets) {
        const Xywh b = box_to_xywh(d.box);
        root.push_back({{"image_id", d.image_id},
                        {"category_id", d.class_id},
                        {"bbox", {b.x, b.y, b.w, b.h}},
                        {"score", d.score}});
    }
    return root.dump(2) + "\n";
}

void save_detections(const std::vector<Detection>& dets,
                     const std::string& path) {
    write_file(path, detections_to_json(dets));
}

GroundTruthSet to_ground_truth(const Dataset& ds) {
    GroundTruthSet gts;
    for (const auto& cat : ds.categories) gts.category_ids.push_back(cat.id);
    std::map<std::int64_t, std::size_t> index;
    for (const auto& img : ds.images) {
        index[img.id] = gts.images.size();
        gts.images.push_back({img.id, {}});
    }
    for (const auto& ann : ds.annotations) {
        GtInstance inst;
        inst.id = ann.id;
        inst.class_id = ann.class_id;
        inst.box = xywh_to_box(ann.bbox.x, ann.bbox.y, ann.bbox.w, ann.bbox.h);
        inst.area = ann.area > 0.0 ? ann.area : area(inst.box);
        inst.ignore = ann.ignore;
        gts.images[index.at(ann.image_id)].instances.push_back(inst);
    }
    return gts;
}

void TileConfig::validate() const {
    if (patch < 1) throw ValidationError("patch size must be positive");
    if (stride < 1) throw ValidationError("stride must be positive");
    if (stride > patch)
        throw ValidationError("stride must not exceed the patch size");
    if (!(retention > 0.0 && retention <= 1.0))
        throw ValidationError("retention must lie in (0,1]");
}

namespace {

// Patch origins along one axis: i*stride, with the final origin shifted
// inward so the patch stays inside the source.
std::vector<int> patch_origins(int length, int patch, int stride) {
    if (length <= patch) return {0};
    const int span = length - patch;
    const int count = (span + stride - 1) / stride + 1;
    std::vector<int> origins;
    origins.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        origins.push_back(std::min(i * stride, span));
    origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
    return origins;
}

struct PatchRecord {
    std::string file_name;
    ImageSize size;
    bool undersized = false;
    std::vector<Annotation> annotations;  // ids unassigned, image-local
};

std::string patch_name(const std::string& source, int ox, int oy) {
    const auto dot = source.find_last_of('.');
    const std::string stem =
        dot == std::string::npos ? source : source.substr(0, dot);
    const std::string ext =
        dot == std::string::npos ? std::string{} : source.substr(dot);
    return stem + "__x" + std::to_string(ox) + "_y" + std::to_string(oy) + ext;
}

std::vector<PatchRecord> tile_image(const DatasetImage& img,
                                    const std::vector<const Annotation*>& anns,
                                    const TileConfig& cfg) {
    const auto xs = patch_origins(img.size.width, cfg.patch, cfg.stride);
    const auto ys = patch_origins(img.size.height, cfg.patch, cfg.stride);
    const int pw = std::min(cfg.patch, img.size.width);
    const int ph = std::min(cfg.patch, img.size.height);
    const bool undersized =
        img.size.width < cfg.patch || img.size.height < cfg.patch;

    std::vector<PatchRecord> patches;
    for (int oy : ys) {
        for (int ox : xs) {
            PatchRecord rec;
            rec.file_name = patch_name(img.file_name, ox, oy);
            rec.size = {pw, ph};
            rec.undersized = undersized;
            const Box patch_rect{static_cast<double>(ox),
                                 static_cast<double>(oy),
                                 static_cast<double>(ox + pw),
                                 static_cast<double>(oy + ph)};
            for (const Annotation* ann : anns) {
                const Box b = xywh_to_box(ann->bbox.x, ann->bbox.y,
                                          ann->bbox.w, ann->bbox.h);
                // closed-extent overlap so zero-area boxes on a patch edge
                // still land somewhere
                const double ix1 = std::max(b.x1, patch_rect.x1);
                const double iy1 = std::max(b.y1, patch_rect.y1);
                const double ix2 = std::min(b.x2, patch_rect.x2);
                const double iy2 = std::min(b.y2, patch_rect.y2);
                if (ix1 > ix2 || iy1 > iy2) continue;
                const double clipped_area = (ix2 - ix1) * (iy2 - iy1);
                const double orig_area = area(b);
                if (orig_area > 0.0 &&
                    clipped_area / orig_area < cfg.retention)
                    continue;
                Annotation clipped = *ann;
                clipped.bbox = {ix1 - ox, iy1 - oy, ix2 - ix1, iy2 - iy1};
                clipped.area = clipped_area;
                rec.annotations.push_back(clipped);
            }
            patches.push_back(std::move(rec));
        }
    }
    return patches;
}

}  // namespace

Dataset tile(const Dataset& ds, const TileConfig& cfg) {
    cfg.validate();
    ds.validate();

    std::vector<DatasetImage> sources = ds.images;
    std::sort(sources.begin(), sources.end(),
              [](const DatasetImage& a, const DatasetImage& b) {
                  return a.id < b.id;
              });
    std::map<std::int64_t, std::vector<const Annotation*>> by_image;
    for (const auto& ann : ds.annotations)
        by_image[ann.image_id].push_back(&ann);

    std::vector<std::vector<PatchRecord>> per_source(sources.size());
    parallel_for(sources.size(), cfg.threads, [&](std::size_t i) {
        static const std::vector<const Annotation*> kNone;
        const auto it = by_image.find(sources[i].id);
        per_source[i] =
            tile_image(sources[i], it == by_image.end() ? kNone : it->second,
                       cfg);
    });

    Dataset out;
    out.categories = ds.categories;
    std::int64_t next_image_id = 1;
    std::int64_t next_ann_id = 1;
    std::int64_t undersized = 0;
    for (auto& patches : per_source) {
        for (auto& rec : patches) {
            const std::int64_t image_id = next_image_id++;
            out.images.push_back({image_id, rec.file_name, rec.size});
            if (rec.undersized) ++undersized;
            for (auto& ann : rec.annotations) {
                ann.id = next_ann_id++;
                ann.image_id = image_id;
                out.annotations.push_back(ann);
            }
        }
    }
    out.info["tile_patch"] = std::to_string(cfg.patch);
    out.info["tile_stride"] = std::to_string(cfg.stride);
    out.info["tile_retention"] = csv_number(cfg.retention);
    out.info["undersized_patches"] = std::to_string(undersized);
    return out;
}

std::int64_t Histogram::total() const {
    std::int64_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

namespace {

void add_to_histogram(Histogram& h, double value) {
    const auto bin = static_cast<std::size_t>(
        std::max(0.0, std::floor(value / h.bin_width)));
    if (h.counts.size() <= bin) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
}

}  // namespace

StatsReport stats(const Dataset& ds, const StatsConfig& cfg) {
    if (!(cfg.bin_width > 0.0))
        throw ValidationError("histogram bin width must be positive");
    ds.validate();

    std::map<std::int64_t, ImageSize> sizes;
    for (const auto& img : ds.images) sizes[img.id] = img.size;

    StatsReport report;
    report.overall.bin_width = cfg.bin_width;
    report.small_threshold = cfg.small_threshold;

    for (const auto& ann : ds.annotations) {
        const ImageSize sz = sizes.at(ann.image_id);
        InstanceStat stat;
        stat.image_id = ann.image_id;
        stat.annotation_id = ann.id;
        stat.class_id = ann.class_id;
        stat.norm_w = ann.bbox.w / static_cast<double>(sz.width);
        stat.norm_h = ann.bbox.h / static_cast<double>(sz.height);
        stat.sqrt_area = std::sqrt(ann.bbox.w * ann.bbox.h);
        report.instances.push_back(stat);
    }
    std::sort(report.instances.begin(), report.instances.end(),
              [](const InstanceStat& a, const InstanceStat& b) {
                  if (a.image_id != b.image_id) return a.image_id < b.image_id;
                  return a.annotation_id < b.annotation_id;
              });

    std::int64_t small = 0;
    for (const auto& stat : report.instances) {
        add_to_histogram(report.overall, stat.sqrt_area);
        auto [it, inserted] =
            report.per_category.try_emplace(stat.class_id);
        if (inserted) it->second.bin_width = cfg.bin_width;
        add_to_histogram(it->second, stat.sqrt_area);
        if (stat.norm_w <= cfg.small_threshold &&
            stat.norm_h <= cfg.small_threshold)
            ++small;
    }
    report.fraction_small =
        report.instances.empty()
            ? 0.0
            : static_cast<double>(small) /
                  static_cast<double>(report.instances.size());
    return report;
}

std::string stats_to_csv(const StatsReport& report) {
    std::string out = "image_id,category_id,norm_w,norm_h,sqrt_area\n";
    for (const auto& s : report.instances) {
        out += std::to_string(s.image_id) + "," +
               std::to_string(s.class_id) + "," + csv_number(s.norm_w) + "," +
               csv_number(s.norm_h) + "," + csv_number(s.sqrt_area) + "\n";
    }
    return out;
}

std::string stats_to_json(const StatsReport& report) {
    json root;
    root["bin_width"] = report.overall.bin_width;
    root["total_instances"] = report.overall.total();
    root["small_threshold"] = report.small_threshold;
    root["fraction_small"] = report.fraction_small;
    root["overall"] = report.overall.counts;
    json per_cat = json::object();
    for (const auto& [cls, hist] : report.per_category)
        per_cat[std::to_string(cls)] = hist.counts;
    root["per_category"] = per_cat;
    return root.dump(2) + "\n";
}

}  // namespace detkit
