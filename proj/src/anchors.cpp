#include "detkit/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detkit/errors.hpp"

namespace detkit {

void PyramidConfig::validate() const {
    if (levels.empty()) throw ValidationError("pyramid config has no levels");
    if (aspect_ratios.empty())
        throw ValidationError("pyramid config has no aspect ratios");
    for (double r : aspect_ratios)
        if (!(r > 0.0)) throw ValidationError("aspect ratios must be positive");
    int prev_stride = 0;
    for (const auto& lv : levels) {
        if (lv.stride <= prev_stride)
            throw ValidationError("level strides must be strictly increasing");
        prev_stride = lv.stride;
        if (lv.sizes.empty())
            throw ValidationError("level " + lv.name + " has no anchor sizes");
        for (double s : lv.sizes)
            if (!(s > 0.0))
                throw ValidationError("anchor sizes must be positive");
    }
}

std::vector<double> variant_sizes(AnchorVariant v) {
    switch (v) {
        case AnchorVariant::A1: return {16, 64, 128, 256, 512};
        case AnchorVariant::A2: return {8, 64, 128, 256, 512};
        default: return {32, 64, 128, 256, 512};
    }
}

PyramidConfig make_pyramid_config(AnchorVariant v,
                                  std::vector<double> aspect_ratios) {
    const std::vector<double> sizes = variant_sizes(v);
    const int strides[5] = {4, 8, 16, 32, 64};
    PyramidConfig cfg;
    cfg.aspect_ratios = std::move(aspect_ratios);
    for (int i = 0; i < 5; ++i)
        cfg.levels.push_back(
            {"P" + std::to_string(i + 2), strides[i], {sizes[i]}});
    return cfg;
}

std::vector<LevelAnchors> generate_anchors(const PyramidConfig& cfg,
                                           const ImageSize& img) {
    cfg.validate();
    if (img.width < 1 || img.height < 1)
        throw ValidationError("image size must be positive");

    std::vector<LevelAnchors> out;
    out.reserve(cfg.levels.size());
    for (const auto& lv : cfg.levels) {
        LevelAnchors la;
        la.name = lv.name;
        la.stride = lv.stride;
        la.grid_h = (img.height + lv.stride - 1) / lv.stride;
        la.grid_w = (img.width + lv.stride - 1) / lv.stride;
        la.boxes.reserve(static_cast<std::size_t>(la.grid_h) * la.grid_w *
                         lv.sizes.size() * cfg.aspect_ratios.size());
        for (int i = 0; i < la.grid_h; ++i) {
            const double cy = (i + 0.5) * lv.stride;
            for (int j = 0; j < la.grid_w; ++j) {
                const double cx = (j + 0.5) * lv.stride;
                for (double s : lv.sizes) {
                    for (double r : cfg.aspect_ratios) {
                        const double w = s * std::sqrt(r);
                        const double h = s / std::sqrt(r);
                        la.boxes.push_back(Box{cx - w / 2.0, cy - h / 2.0,
                                               cx + w / 2.0, cy + h / 2.0});
                    }
                }
            }
        }
        out.push_back(std::move(la));
    }
    return out;
}

namespace {

struct CenterSize {
    double cx, cy, w, h;
};

CenterSize center_size(const Box& b) {
    return {(b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0, b.x2 - b.x1,
            b.y2 - b.y1};
}

}  // namespace

Deltas encode_deltas(const Box& anchor, const Box& target) {
    const CenterSize a = center_size(anchor);
    const CenterSize t = center_size(target);
    if (a.w <= 0.0 || a.h <= 0.0)
        throw ValidationError("anchor must have positive area");
    if (t.w <= 0.0 || t.h <= 0.0)
        throw ValidationError("encode target must have positive area");
    return Deltas{(t.cx - a.cx) / a.w, (t.cy - a.cy) / a.h,
                  std::log(t.w / a.w), std::log(t.h / a.h)};
}

Box decode_deltas(const Box& anchor, const Deltas& d) {
    const CenterSize a = center_size(anchor);
    if (a.w <= 0.0 || a.h <= 0.0)
        throw ValidationError("anchor must have positive area");
    const double cx = a.cx + d.dx * a.w;
    const double cy = a.cy + d.dy * a.h;
    const double w = a.w * std::exp(d.dw);
    const double h = a.h * std::exp(d.dh);
    return Box{cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
}

std::vector<Proposal> select_topk(const std::vector<Proposal>& proposals,
                                  std::size_t k) {
    std::vector<std::size_t> order(proposals.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return proposals[a].score > proposals[b].score;
                     });
    if (order.size() > k) order.resize(k);
    std::vector<Proposal> out;
    out.reserve(order.size());
    for (std::size_t idx : order) out.push_back(proposals[idx]);
    return out;
}

}  // namespace detkit
