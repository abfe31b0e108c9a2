#pragma once

#include <cstdint>
#include <vector>

#include "detkit/geometry.hpp"

namespace detkit {

struct ScoredBox {
    Box box;
    double score = 0.0;
    int class_id = 0;
    std::int64_t original_index = 0;
};

enum class SuppressionMode { HARD, SOFT_LINEAR };

struct SuppressionConfig {
    SuppressionMode mode = SuppressionMode::SOFT_LINEAR;
    double nt = 0.5;            // IoU threshold N_t
    double score_floor = 0.001;
    std::size_t max_detections = 1000;
    bool class_agnostic = false;

    void validate() const;
};

// Greedy suppression. Repeatedly selects the highest-scoring remaining
// detection d* (ties: lower original_index), emits it, and for every
// remaining detection with overlap o = iou(d*, .):
//   HARD        removes it when o >  nt;
//   SOFT_LINEAR rescales its score to score*(1-o) when o >= nt.
// Iteration stops once no remaining score exceeds score_floor. The output
// is sorted by final score descending (ties: lower original_index) and
// truncated to max_detections. With class_agnostic=false the iteration runs
// independently per class_id before the final sort and truncation.
std::vector<ScoredBox> suppress(const std::vector<ScoredBox>& dets,
                                const SuppressionConfig& cfg);

// Literal transcription of the definition above, kept free of indexing
// tricks so it can serve as the oracle side of the equivalence check.
std::vector<ScoredBox> reference_suppress(const std::vector<ScoredBox>& dets,
                                          const SuppressionConfig& cfg);

}  // namespace detkit
