#pragma once

#include <cstdint>
#include <variant>

namespace detkit {

// Axis-aligned box in continuous pixel coordinates. (x1,y1) is the top-left
// corner (inclusive), (x2,y2) the bottom-right corner (exclusive), so
// area = (x2-x1)*(y2-y1) with no +1 term and degenerate boxes have area 0.
struct Box {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }

    bool operator==(const Box&) const = default;
};

struct ImageSize {
    int width = 0;
    int height = 0;

    bool operator==(const ImageSize&) const = default;
};

double area(const Box& b);

// |a∩b| / |a∪b| in [0,1]; 0 when the union has zero area.
double iou(const Box& a, const Box& b);

// Intersection rectangle, clamped so that an empty overlap has zero area.
Box intersect(const Box& a, const Box& b);

// COCO bbox convention: corner + size. Throws ValidationError for negative
// width or height.
Box xywh_to_box(double x, double y, double w, double h);

struct Xywh {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool operator==(const Xywh&) const = default;
};

Xywh box_to_xywh(const Box& b);

// Geometric augmentations from the ablation set, as box-coordinate maps.
struct HFlip {};
struct VFlip {};
struct Rot90 {};  // clockwise; applied four times is the identity
struct ResizeShortestEdge {
    double target = 800.0;
    double max_size = 1333.0;
};

using GeomTransform = std::variant<HFlip, VFlip, Rot90, ResizeShortestEdge>;

struct TransformedBox {
    Box box;
    ImageSize size;
};

// Maps a box through a transform, returning the box in the coordinates of
// the (possibly resized or rotated) output image. The box must lie within
// [0,width]x[0,height] of the input image.
TransformedBox transform_box(const Box& b, const GeomTransform& t,
                             const ImageSize& sz);

}  // namespace detkit
