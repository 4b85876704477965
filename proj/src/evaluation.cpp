#include "kiln/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace kiln {

void GroundTruthSet::validate() const {
    std::set<std::string> seen;
    for (const GroundTruthKiln& k : kilns)
        if (!seen.insert(k.gt_id).second)
            throw DataError("ground truth ids not unique: '" + k.gt_id + "'");
}

bool GroundTruthSet::all_polygons() const {
    return std::all_of(kilns.begin(), kilns.end(),
                       [](const GroundTruthKiln& k) { return k.polygon.has_value(); });
}

MatchCriterion MatchCriterion::iou(double tau) {
    if (!(tau > 0.0 && tau <= 1.0))
        throw std::invalid_argument("IoU matching threshold must be in (0, 1]");
    return {Kind::IoU, tau};
}

MatchCriterion MatchCriterion::center_distance(double delta) {
    if (!(delta > 0.0))
        throw std::invalid_argument("center-distance matching threshold must be > 0");
    return {Kind::CenterDistance, delta};
}

namespace {

// Higher is better; nullopt when the pair fails the criterion.
std::optional<double> match_score(const GeoDetection& pred, const GroundTruthKiln& gt,
                                  const MatchCriterion& criterion) {
    if (criterion.kind == MatchCriterion::Kind::IoU) {
        if (!gt.polygon)
            throw DataError("IoU matching requires polygon ground truth (gt '" + gt.gt_id + "')");
        const double iou = quad_iou(pred.polygon, *gt.polygon);
        if (iou >= criterion.threshold) return iou;
        return std::nullopt;
    }
    const double dist = (pred.centroid_geo - gt.centroid).norm();
    if (dist <= criterion.threshold) return -dist;
    return std::nullopt;
}

}  // namespace

MatchResult match_detections(const std::vector<GeoDetection>& preds, const GroundTruthSet& gts,
                             const MatchCriterion& criterion) {
    if (criterion.kind == MatchCriterion::Kind::IoU)
        MatchCriterion::iou(criterion.threshold);
    else
        MatchCriterion::center_distance(criterion.threshold);
    gts.validate();

    std::vector<const GeoDetection*> order;
    order.reserve(preds.size());
    for (const GeoDetection& p : preds) order.push_back(&p);
    std::stable_sort(order.begin(), order.end(), [](const GeoDetection* a, const GeoDetection* b) {
        return std::make_tuple(-a->confidence, a->detection_id) <
               std::make_tuple(-b->confidence, b->detection_id);
    });

    MatchResult result;
    std::set<std::string> matched_gt;
    for (const GeoDetection* pred : order) {
        const GroundTruthKiln* best_free = nullptr;
        double best_free_score = 0;
        bool hits_taken_gt = false;
        for (const GroundTruthKiln& gt : gts.kilns) {
            const auto score = match_score(*pred, gt, criterion);
            if (!score) continue;
            if (matched_gt.count(gt.gt_id)) {
                hits_taken_gt = true;
                continue;
            }
            if (!best_free || *score > best_free_score ||
                (*score == best_free_score && gt.gt_id < best_free->gt_id)) {
                best_free = &gt;
                best_free_score = *score;
            }
        }
        if (best_free) {
            matched_gt.insert(best_free->gt_id);
            result.assignment.emplace_back(pred->detection_id, best_free->gt_id);
            ++result.tp;
        } else if (hits_taken_gt) {
            ++result.duplicates;
        } else {
            ++result.fp;
        }
    }
    result.fn = gts.kilns.size() - matched_gt.size();
    return result;
}

Metrics compute_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
    Metrics m;
    const double tpd = static_cast<double>(tp);
    if (tp + fp > 0) m.precision = tpd / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = tpd / static_cast<double>(tp + fn);
    if (m.precision + m.recall > 0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

EvaluationReport evaluate(const std::vector<GeoDetection>& preds, const GroundTruthSet& gts,
                          const MatchCriterion& criterion) {
    const MatchResult match = match_detections(preds, gts, criterion);
    EvaluationReport report;
    report.tp = match.tp;
    report.fp = match.fp;
    report.fn = match.fn;
    report.duplicates = match.duplicates;
    report.metrics = compute_metrics(match.tp, match.fp, match.fn);
    return report;
}

std::size_t grid_patch_count(std::int64_t stage2_width, std::int64_t stage2_height,
                             std::int64_t patch_size) {
    if (patch_size <= 0) throw std::invalid_argument("patch_size must be positive");
    if (stage2_width <= 0 || stage2_height <= 0) return 0;
    const auto across = (stage2_width + patch_size - 1) / patch_size;
    const auto down = (stage2_height + patch_size - 1) / patch_size;
    return static_cast<std::size_t>(across) * static_cast<std::size_t>(down);
}

WorkloadReport benchmark_workload(const PipelineReport& report, std::size_t baseline_patches) {
    WorkloadReport w;
    w.patches_examined = report.plan.patches.size();
    w.patches_total = baseline_patches;
    if (baseline_patches < w.patches_examined)
        throw std::invalid_argument("benchmark baseline smaller than examined patch count");
    w.reduction_ratio = static_cast<double>(baseline_patches) /
                        static_cast<double>(std::max<std::size_t>(w.patches_examined, 1));
    w.mean_timings = report.timings;
    return w;
}

WorkloadReport run_benchmark(const MultiSpectralTile& tile, const PipelineConfig& cfg,
                             std::size_t baseline_patches, std::size_t repetitions) {
    if (repetitions == 0) throw std::invalid_argument("repetitions must be >= 1");
    StageTimings sum;
    PipelineReport last;
    for (std::size_t i = 0; i < repetitions; ++i) {
        last = run_pipeline(tile, cfg);
        sum.indices_ms += last.timings.indices_ms;
        sum.classify_ms += last.timings.classify_ms;
        sum.regions_ms += last.timings.regions_ms;
        sum.patches_ms += last.timings.patches_ms;
        sum.detector_ms += last.timings.detector_ms;
        sum.postprocess_ms += last.timings.postprocess_ms;
        sum.total_ms += last.timings.total_ms;
    }
    WorkloadReport w = benchmark_workload(last, baseline_patches);
    const auto n = static_cast<double>(repetitions);
    w.mean_timings = {sum.indices_ms / n,  sum.classify_ms / n, sum.regions_ms / n,
                      sum.patches_ms / n,  sum.detector_ms / n, sum.postprocess_ms / n,
                      sum.total_ms / n};
    w.repetitions = repetitions;
    return w;
}

}  // namespace kiln
