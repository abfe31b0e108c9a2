#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detkit/geometry.hpp"

namespace detkit {

struct PyramidLevel {
    std::string name;
    int stride = 1;
    std::vector<double> sizes;
};

// Anchor grid description for the pyramid levels P2-P6. Strides must be
// strictly increasing; at least one size per level and one aspect ratio.
struct PyramidConfig {
    std::vector<PyramidLevel> levels;
    std::vector<double> aspect_ratios{0.5, 1.0, 2.0};

    void validate() const;
};

enum class AnchorVariant { DEFAULT, A1, A2 };

// Per-level base sizes for the named variants:
//   DEFAULT [32,64,128,256,512], A1 [16,64,128,256,512], A2 [8,64,128,256,512]
std::vector<double> variant_sizes(AnchorVariant v);

// Builds the P2-P6 pyramid with strides [4,8,16,32,64] and one size per
// level from the variant.
PyramidConfig make_pyramid_config(
    AnchorVariant v, std::vector<double> aspect_ratios = {0.5, 1.0, 2.0});

struct LevelAnchors {
    std::string name;
    int stride = 1;
    int grid_h = 0;
    int grid_w = 0;
    std::vector<Box> boxes;
};

// One anchor per (grid cell x size x aspect ratio). The grid has
// ceil(H/stride) x ceil(W/stride) cells; the anchor for size s and ratio r
// at cell (i,j) is centered at ((j+0.5)*stride, (i+0.5)*stride) with width
// s*sqrt(r) and height s/sqrt(r). Boxes are emitted row-major over cells,
// then by size, then by ratio, and may extend beyond the image (no clip).
std::vector<LevelAnchors> generate_anchors(const PyramidConfig& cfg,
                                           const ImageSize& img);

// Center shift normalized by anchor size plus log-scale size ratios, the
// standard box regression parameterization.
struct Deltas {
    double dx = 0.0;
    double dy = 0.0;
    double dw = 0.0;
    double dh = 0.0;
};

Deltas encode_deltas(const Box& anchor, const Box& target);
Box decode_deltas(const Box& anchor, const Deltas& d);

struct Proposal {
    Box box;
    double score = 0.0;
};

// The k highest-scoring proposals (all if fewer), sorted by descending
// score; ties keep the lower original index first.
std::vector<Proposal> select_topk(const std::vector<Proposal>& proposals,
                                  std::size_t k);

}  // namespace detkit
