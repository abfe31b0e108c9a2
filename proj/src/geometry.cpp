#include "detkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detkit/errors.hpp"

namespace detkit {

double area(const Box& b) { return (b.x2 - b.x1) * (b.y2 - b.y1); }

Box intersect(const Box& a, const Box& b) {
    Box inter{std::max(a.x1, b.x1), std::max(a.y1, b.y1),
              std::min(a.x2, b.x2), std::min(a.y2, b.y2)};
    if (inter.x1 >= inter.x2 || inter.y1 >= inter.y2)
        return Box{0.0, 0.0, 0.0, 0.0};
    return inter;
}

double iou(const Box& a, const Box& b) {
    const double ai = area(intersect(a, b));
    const double au = area(a) + area(b) - ai;
    if (au <= 0.0) return 0.0;
    return ai / au;
}

Box xywh_to_box(double x, double y, double w, double h) {
    if (w < 0.0 || h < 0.0)
        throw ValidationError("xywh box with negative size: w=" +
                              std::to_string(w) + " h=" + std::to_string(h));
    return Box{x, y, x + w, y + h};
}

Xywh box_to_xywh(const Box& b) {
    return Xywh{b.x1, b.y1, b.x2 - b.x1, b.y2 - b.y1};
}

namespace {

void require_inside(const Box& b, const ImageSize& sz) {
    if (b.x1 > b.x2 || b.y1 > b.y2 || b.x1 < 0.0 || b.y1 < 0.0 ||
        b.x2 > static_cast<double>(sz.width) ||
        b.y2 > static_cast<double>(sz.height))
        throw ValidationError("box outside image bounds");
}

}  // namespace

TransformedBox transform_box(const Box& b, const GeomTransform& t,
                             const ImageSize& sz) {
    if (sz.width < 1 || sz.height < 1)
        throw ValidationError("image size must be positive");
    require_inside(b, sz);
    const double w = static_cast<double>(sz.width);
    const double h = static_cast<double>(sz.height);

    if (std::holds_alternative<HFlip>(t)) {
        return {Box{w - b.x2, b.y1, w - b.x1, b.y2}, sz};
    }
    if (std::holds_alternative<VFlip>(t)) {
        return {Box{b.x1, h - b.y2, b.x2, h - b.y1}, sz};
    }
    if (std::holds_alternative<Rot90>(t)) {
        // clockwise: (x,y) -> (H-y, x), image size swaps
        return {Box{h - b.y2, b.x1, h - b.y1, b.x2},
                ImageSize{sz.height, sz.width}};
    }
    const auto& r = std::get<ResizeShortestEdge>(t);
    if (r.target <= 0.0 || r.max_size <= 0.0)
        throw ValidationError("resize parameters must be positive");
    double scale = r.target / std::min(w, h);
    if (scale * std::max(w, h) > r.max_size) scale = r.max_size / std::max(w, h);
    const auto dim = [scale](double v) {
        return std::max(1, static_cast<int>(std::lround(v * scale)));
    };
    return {Box{b.x1 * scale, b.y1 * scale, b.x2 * scale, b.y2 * scale},
            ImageSize{dim(w), dim(h)}};
}

}  // namespace detkit
