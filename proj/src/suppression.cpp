#include "detkit/suppression.hpp"

#include <algorithm>
#include <map>

#include "detkit/errors.hpp"

namespace detkit {

void SuppressionConfig::validate() const {
    if (nt < 0.0 || nt > 1.0)
        throw ValidationError("nt must lie in [0,1]");
    if (score_floor < 0.0 || score_floor > 1.0)
        throw ValidationError("score_floor must lie in [0,1]");
    if (max_detections == 0)
        throw ValidationError("max_detections must be positive");
}

namespace {

bool ranks_before(const ScoredBox& a, const ScoredBox& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.original_index < b.original_index;
}

void sort_and_truncate(std::vector<ScoredBox>& kept,
                       const SuppressionConfig& cfg) {
    std::sort(kept.begin(), kept.end(), ranks_before);
    if (kept.size() > cfg.max_detections) kept.resize(cfg.max_detections);
}

// Single-class (or class-agnostic) pass over an index window [0, n).
// Selected detections are swapped to the front; survivors of a hard
// suppression or a decay stay in the active tail.
void suppress_group(std::vector<ScoredBox>& pool,
                    const SuppressionConfig& cfg,
                    std::vector<ScoredBox>& kept) {
    std::size_t n = pool.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t best = i;
        for (std::size_t j = i + 1; j < n; ++j)
            if (ranks_before(pool[j], pool[best])) best = j;
        if (!(pool[best].score > cfg.score_floor)) break;
        std::swap(pool[i], pool[best]);
        kept.push_back(pool[i]);

        std::size_t j = i + 1;
        while (j < n) {
            const double o = iou(pool[i].box, pool[j].box);
            if (cfg.mode == SuppressionMode::HARD) {
                if (o > cfg.nt) {
                    std::swap(pool[j], pool[n - 1]);
                    --n;
                    continue;
                }
            } else if (o >= cfg.nt) {
                pool[j].score *= (1.0 - o);
            }
            ++j;
        }
        ++i;
    }
}

}  // namespace

std::vector<ScoredBox> suppress(const std::vector<ScoredBox>& dets,
                                const SuppressionConfig& cfg) {
    cfg.validate();
    std::vector<ScoredBox> kept;
    if (cfg.class_agnostic) {
        std::vector<ScoredBox> pool = dets;
        suppress_group(pool, cfg, kept);
    } else {
        std::map<int, std::vector<ScoredBox>> by_class;
        for (const auto& d : dets) by_class[d.class_id].push_back(d);
        for (auto& [cls, pool] : by_class) suppress_group(pool, cfg, kept);
    }
    sort_and_truncate(kept, cfg);
    return kept;
}

namespace {

// Straight transcription of the iterative definition on a working list.
std::vector<ScoredBox> reference_group(std::vector<ScoredBox> remaining,
                                       const SuppressionConfig& cfg) {
    std::vector<ScoredBox> emitted;
    while (!remaining.empty()) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < remaining.size(); ++j)
            if (ranks_before(remaining[j], remaining[best])) best = j;
        if (!(remaining[best].score > cfg.score_floor)) break;

        const ScoredBox selected = remaining[best];
        emitted.push_back(selected);
        remaining.erase(remaining.begin() +
                        static_cast<std::ptrdiff_t>(best));

        std::vector<ScoredBox> next;
        for (const ScoredBox& d : remaining) {
            const double o = iou(selected.box, d.box);
            if (cfg.mode == SuppressionMode::HARD) {
                if (o > cfg.nt) continue;
                next.push_back(d);
            } else {
                ScoredBox copy = d;
                if (o >= cfg.nt) copy.score *= (1.0 - o);
                next.push_back(copy);
            }
        }
        remaining = std::move(next);
    }
    return emitted;
}

}  // namespace

std::vector<ScoredBox> reference_suppress(const std::vector<ScoredBox>& dets,
                                          const SuppressionConfig& cfg) {
    cfg.validate();
    std::vector<ScoredBox> kept;
    if (cfg.class_agnostic) {
        kept = reference_group(dets, cfg);
    } else {
        std::map<int, std::vector<ScoredBox>> by_class;
        for (const auto& d : dets) by_class[d.class_id].push_back(d);
        for (auto& [cls, group] : by_class) {
            auto emitted = reference_group(group, cfg);
            kept.insert(kept.end(), emitted.begin(), emitted.end());
        }
    }
    sort_and_truncate(kept, cfg);
    return kept;
}

}  // namespace detkit
