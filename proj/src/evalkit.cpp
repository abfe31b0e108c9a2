#include "detkit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "detkit/errors.hpp"
#include "detkit/parallel.hpp"

namespace detkit {

void EvalConfig::validate() const {
    if (iou_thresholds.empty())
        throw ValidationError("eval config needs at least one IoU threshold");
    double prev = 0.0;
    for (double t : iou_thresholds) {
        if (!(t > prev) || t > 1.0)
            throw ValidationError(
                "IoU thresholds must be strictly increasing in (0,1]");
        prev = t;
    }
    for (const AreaRange* r : {&range_all, &range_s, &range_m, &range_l})
        if (!(r->lo <= r->hi))
            throw ValidationError("area range " + r->name + " is inverted");
    if (range_s.hi > range_m.lo || range_m.hi > range_l.lo)
        throw ValidationError("S/M/L area ranges overlap");
    if (max_detections == 0)
        throw ValidationError("max_detections must be positive");
    if (recall_points < 2)
        throw ValidationError("recall_points must be at least 2");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
    return t;
}

}  // namespace

EvalConfig EvalConfig::paper_defaults() {
    EvalConfig cfg;
    cfg.iou_thresholds = default_thresholds();
    cfg.range_all = {"ALL", 0.0, kInf};
    cfg.range_s = {"S", 10.0, 144.0};
    cfg.range_m = {"M", 144.0, 1024.0};
    cfg.range_l = {"L", 1024.0, kInf};
    return cfg;
}

EvalConfig EvalConfig::coco_defaults() {
    EvalConfig cfg;
    cfg.iou_thresholds = default_thresholds();
    cfg.range_all = {"ALL", 0.0, kInf};
    cfg.range_s = {"S", 0.0, 1024.0};
    cfg.range_m = {"M", 1024.0, 9216.0};
    cfg.range_l = {"L", 9216.0, kInf};
    return cfg;
}

namespace {

bool det_ranks_before(const ScoredBox& a, const ScoredBox& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.original_index < b.original_index;
}

// Greedy matcher over detections already sorted by rank. iou_of(i,g) gives
// the overlap of sorted detection i with GT g.
template <typename IouFn>
std::vector<MatchFlag> greedy_match(std::size_t n_dets, std::size_t n_gts,
                                    const IouFn& iou_of,
                                    const std::vector<bool>& gt_ignore,
                                    double t) {
    std::vector<bool> used(n_gts, false);
    std::vector<MatchFlag> flags(n_dets, MatchFlag::FP);
    for (std::size_t i = 0; i < n_dets; ++i) {
        int best = -1;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < n_gts; ++g) {
            if (used[g] || gt_ignore[g]) continue;
            const double o = iou_of(i, g);
            if (o >= t && o > best_iou) {
                best = static_cast<int>(g);
                best_iou = o;
            }
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = true;
            flags[i] = MatchFlag::TP;
            continue;
        }
        // fall back to an ignore GT; such a match is neither TP nor FP
        for (std::size_t g = 0; g < n_gts; ++g) {
            if (used[g] || !gt_ignore[g]) continue;
            const double o = iou_of(i, g);
            if (o >= t && o > best_iou) {
                best = static_cast<int>(g);
                best_iou = o;
            }
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = true;
            flags[i] = MatchFlag::IGNORED;
        }
    }
    return flags;
}

}  // namespace

std::vector<MatchFlag> match_image(const std::vector<ScoredBox>& dets,
                                   const std::vector<GtInstance>& gts,
                                   double iou_threshold) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return det_ranks_before(dets[a], dets[b]);
    });
    std::vector<bool> gt_ignore(gts.size());
    for (std::size_t g = 0; g < gts.size(); ++g) gt_ignore[g] = gts[g].ignore;

    const auto iou_of = [&](std::size_t i, std::size_t g) {
        return iou(dets[order[i]].box, gts[g].box);
    };
    const auto sorted_flags =
        greedy_match(dets.size(), gts.size(), iou_of, gt_ignore, iou_threshold);

    std::vector<MatchFlag> flags(dets.size(), MatchFlag::FP);
    for (std::size_t i = 0; i < order.size(); ++i)
        flags[order[i]] = sorted_flags[i];
    return flags;
}

std::optional<double> average_precision(std::vector<ScoredFlag> flags,
                                        std::int64_t n_gt,
                                        int recall_points) {
    if (n_gt <= 0) return std::nullopt;
    std::sort(flags.begin(), flags.end(),
              [](const ScoredFlag& a, const ScoredFlag& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.image_id != b.image_id) return a.image_id < b.image_id;
                  return a.original_index < b.original_index;
              });

    std::vector<double> precision;
    std::vector<double> recall;
    std::int64_t tp = 0, fp = 0;
    for (const auto& f : flags) {
        if (f.flag == MatchFlag::IGNORED) continue;
        if (f.flag == MatchFlag::TP) ++tp; else ++fp;
        precision.push_back(static_cast<double>(tp) /
                            static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    }
    // monotone envelope from the right
    for (std::size_t k = precision.size(); k-- > 1;)
        precision[k - 1] = std::max(precision[k - 1], precision[k]);

    double total = 0.0;
    for (int i = 0; i < recall_points; ++i) {
        const double r =
            static_cast<double>(i) / static_cast<double>(recall_points - 1);
        const auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end())
            total += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return total / recall_points;
}

namespace {

struct ImageClassData {
    std::int64_t image_id = 0;
    std::vector<ScoredBox> dets;  // sorted by rank
    std::vector<double> det_areas;
    std::vector<const GtInstance*> gts;
    std::vector<std::vector<double>> ious;  // [det][gt]
};

bool in_range(double a, const AreaRange& r) { return a >= r.lo && a < r.hi; }

// AP per (threshold index, range index) plus the per-range GT counts for
// one category.
struct CategoryResult {
    // ap[range][threshold]
    std::vector<std::vector<std::optional<double>>> ap;
    std::vector<std::int64_t> n_gt;  // per range
};

CategoryResult evaluate_category(const std::vector<ImageClassData>& images,
                                 const std::vector<double>& thresholds,
                                 const std::vector<AreaRange>& ranges,
                                 int recall_points) {
    CategoryResult res;
    res.ap.assign(ranges.size(), std::vector<std::optional<double>>(
                                     thresholds.size(), std::nullopt));
    res.n_gt.assign(ranges.size(), 0);

    for (std::size_t ri = 0; ri < ranges.size(); ++ri) {
        const AreaRange& range = ranges[ri];
        std::int64_t n_gt = 0;
        std::vector<std::vector<bool>> ignore_masks(images.size());
        for (std::size_t m = 0; m < images.size(); ++m) {
            const auto& img = images[m];
            auto& mask = ignore_masks[m];
            mask.resize(img.gts.size());
            for (std::size_t g = 0; g < img.gts.size(); ++g) {
                mask[g] =
                    img.gts[g]->ignore || !in_range(img.gts[g]->area, range);
                if (!mask[g]) ++n_gt;
            }
        }
        res.n_gt[ri] = n_gt;

        for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
            std::vector<ScoredFlag> flags;
            for (std::size_t m = 0; m < images.size(); ++m) {
                const auto& img = images[m];
                const auto iou_of = [&](std::size_t i, std::size_t g) {
                    return img.ious[i][g];
                };
                const auto f =
                    greedy_match(img.dets.size(), img.gts.size(), iou_of,
                                 ignore_masks[m], thresholds[ti]);
                for (std::size_t i = 0; i < img.dets.size(); ++i) {
                    MatchFlag flag = f[i];
                    // an unmatched detection outside the range is not a miss
                    if (flag == MatchFlag::FP &&
                        !in_range(img.det_areas[i], range))
                        flag = MatchFlag::IGNORED;
                    flags.push_back({img.dets[i].score, img.image_id,
                                     img.dets[i].original_index, flag});
                }
            }
            res.ap[ri][ti] = average_precision(std::move(flags), n_gt,
                                               recall_points);
        }
    }
    return res;
}

std::optional<double> mean_over_categories(
    const std::vector<CategoryResult>& results, std::size_t range_idx,
    std::size_t threshold_idx) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : results) {
        const auto& v = r.ap[range_idx][threshold_idx];
        if (v.has_value()) {
            sum += *v;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

std::optional<double> mean_over_thresholds(
    const std::vector<std::optional<double>>& per_threshold,
    const std::vector<std::size_t>& threshold_indices) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t ti : threshold_indices) {
        if (per_threshold[ti].has_value()) {
            sum += *per_threshold[ti];
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

}  // namespace

EvalReport evaluate(const std::vector<Detection>& dets,
                    const GroundTruthSet& gts, const EvalConfig& cfg) {
    cfg.validate();

    std::set<int> known_classes(gts.category_ids.begin(),
                                gts.category_ids.end());
    std::set<std::int64_t> known_images;
    for (const auto& img : gts.images) {
        if (!known_images.insert(img.id).second)
            throw ValidationError("duplicate ground-truth image id " +
                                  std::to_string(img.id));
        for (const auto& inst : img.instances)
            if (!known_classes.count(inst.class_id))
                throw ValidationError(
                    "ground-truth instance " + std::to_string(inst.id) +
                    " has unknown class " + std::to_string(inst.class_id));
    }
    for (const auto& d : dets) {
        if (!known_classes.count(d.class_id))
            throw ValidationError(
                "detection class " + std::to_string(d.class_id) +
                " not present in the annotation categories");
        if (!known_images.count(d.image_id))
            throw ValidationError("detection references unknown image " +
                                  std::to_string(d.image_id));
    }

    // per-image truncation to max_detections, ranked by score
    std::map<std::int64_t, std::vector<const Detection*>> per_image;
    for (const auto& d : dets) per_image[d.image_id].push_back(&d);
    for (auto& [id, list] : per_image) {
        std::sort(list.begin(), list.end(),
                  [](const Detection* a, const Detection* b) {
                      if (a->score != b->score) return a->score > b->score;
                      return a->original_index < b->original_index;
                  });
        if (list.size() > cfg.max_detections) list.resize(cfg.max_detections);
    }

    // thresholds actually evaluated: the configured ones plus the fixed
    // 0.5 / 0.75 columns
    std::vector<double> thresholds = cfg.iou_thresholds;
    for (double fixed : {0.5, 0.75})
        if (std::find(thresholds.begin(), thresholds.end(), fixed) ==
            thresholds.end())
            thresholds.push_back(fixed);
    std::sort(thresholds.begin(), thresholds.end());
    std::vector<std::size_t> cfg_idx, idx50, idx75;
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (std::find(cfg.iou_thresholds.begin(), cfg.iou_thresholds.end(),
                      thresholds[i]) != cfg.iou_thresholds.end())
            cfg_idx.push_back(i);
        if (thresholds[i] == 0.5) idx50.push_back(i);
        if (thresholds[i] == 0.75) idx75.push_back(i);
    }

    const std::vector<AreaRange> ranges{cfg.range_all, cfg.range_s,
                                        cfg.range_m, cfg.range_l};

    // per (category, image) working data with IoU matrices computed once
    std::vector<int> categories(known_classes.begin(), known_classes.end());
    std::vector<std::vector<ImageClassData>> cat_images(categories.size());
    for (std::size_t ci = 0; ci < categories.size(); ++ci) {
        const int cls = categories[ci];
        for (const auto& img : gts.images) {
            ImageClassData data;
            data.image_id = img.id;
            for (const auto& inst : img.instances)
                if (inst.class_id == cls) data.gts.push_back(&inst);
            auto it = per_image.find(img.id);
            if (it != per_image.end()) {
                for (const Detection* d : it->second) {
                    if (d->class_id != cls) continue;
                    data.dets.push_back(
                        {d->box, d->score, d->class_id, d->original_index});
                    data.det_areas.push_back(area(d->box));
                }
            }
            if (data.dets.empty() && data.gts.empty()) continue;
            data.ious.assign(data.dets.size(),
                             std::vector<double>(data.gts.size(), 0.0));
            for (std::size_t i = 0; i < data.dets.size(); ++i)
                for (std::size_t g = 0; g < data.gts.size(); ++g)
                    data.ious[i][g] = iou(data.dets[i].box, data.gts[g]->box);
            cat_images[ci].push_back(std::move(data));
        }
    }

    std::vector<CategoryResult> results(categories.size());
    parallel_for(categories.size(), cfg.threads, [&](std::size_t ci) {
        results[ci] = evaluate_category(cat_images[ci], thresholds, ranges,
                                        cfg.recall_points);
    });

    const auto aggregate =
        [&](std::size_t range_idx,
            const std::vector<std::size_t>& tidx) -> std::optional<double> {
        double sum = 0.0;
        int count = 0;
        for (std::size_t ti : tidx) {
            const auto m = mean_over_categories(results, range_idx, ti);
            if (m.has_value()) {
                sum += *m;
                ++count;
            }
        }
        if (count == 0) return std::nullopt;
        return sum / count;
    };

    EvalReport report;
    report.overall.ap = aggregate(0, cfg_idx);
    report.overall.ap50 = aggregate(0, idx50);
    report.overall.ap75 = aggregate(0, idx75);
    report.overall.ap_s = aggregate(1, cfg_idx);
    report.overall.ap_m = aggregate(2, cfg_idx);
    report.overall.ap_l = aggregate(3, cfg_idx);

    for (std::size_t ci = 0; ci < categories.size(); ++ci) {
        MetricRow row;
        row.ap = mean_over_thresholds(results[ci].ap[0], cfg_idx);
        row.ap50 = mean_over_thresholds(results[ci].ap[0], idx50);
        row.ap75 = mean_over_thresholds(results[ci].ap[0], idx75);
        row.ap_s = mean_over_thresholds(results[ci].ap[1], cfg_idx);
        row.ap_m = mean_over_thresholds(results[ci].ap[2], cfg_idx);
        row.ap_l = mean_over_thresholds(results[ci].ap[3], cfg_idx);
        report.per_category[categories[ci]] = row;
    }

    report.n_images = static_cast<std::int64_t>(gts.images.size());
    report.n_detections = static_cast<std::int64_t>(dets.size());
    for (const auto& img : gts.images)
        report.n_ground_truth += static_cast<std::int64_t>(img.instances.size());
    return report;
}

std::string report_table(const EvalReport& report) {
    const auto cell = [](const std::optional<double>& v) {
        char buf[32];
        if (v.has_value())
            std::snprintf(buf, sizeof(buf), "%8.4f", *v);
        else
            std::snprintf(buf, sizeof(buf), "%8s", "-");
        return std::string(buf);
    };
    std::string out = "      AP    AP50    AP75    AP_S    AP_M    AP_L\n";
    out += cell(report.overall.ap) + cell(report.overall.ap50) +
           cell(report.overall.ap75) + cell(report.overall.ap_s) +
           cell(report.overall.ap_m) + cell(report.overall.ap_l) + "\n";
    return out;
}

}  // namespace detkit
