#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kiln/pipeline.hpp"

namespace kiln {

/// A labeled kiln: a geo point plus, when the annotation carried one, the
/// full quadrilateral outline.
struct GroundTruthKiln {
    std::string gt_id;
    Eigen::Vector2d centroid{0, 0};
    std::optional<Quad> polygon;
    std::optional<double> theta;
};

struct GroundTruthSet {
    std::vector<GroundTruthKiln> kilns;

    void validate() const;  // unique gt_ids
    bool all_polygons() const;
};

struct MatchCriterion {
    enum class Kind { IoU, CenterDistance };
    Kind kind = Kind::CenterDistance;
    double threshold = 100.0;  // tau for IoU, delta (CRS units) for distance

    static MatchCriterion iou(double tau);
    static MatchCriterion center_distance(double delta);
};

struct MatchResult {
    std::vector<std::pair<std::string, std::string>> assignment;  // (detection_id, gt_id)
    std::size_t tp = 0, fp = 0, fn = 0;
    std::size_t duplicates = 0;  // post-dedup repeats on an already-matched GT
};

/// Greedy one-to-one matching by descending confidence (ties: detection_id).
/// Each prediction takes the best still-unmatched ground truth satisfying
/// the criterion; a prediction whose only satisfying GTs are taken counts as
/// a duplicate, and one satisfying none counts as a false positive.
MatchResult match_detections(const std::vector<GeoDetection>& preds, const GroundTruthSet& gts,
                             const MatchCriterion& criterion);

struct Metrics {
    double precision = 0, recall = 0, f1 = 0;
};

/// precision = tp/(tp+fp) (0 when tp+fp == 0), recall = tp/(tp+fn) (0 when
/// tp+fn == 0), f1 = 2PR/(P+R) (0 when P+R == 0).
Metrics compute_metrics(std::size_t tp, std::size_t fp, std::size_t fn);

struct EvaluationReport {
    std::size_t tp = 0, fp = 0, fn = 0, duplicates = 0;
    Metrics metrics;
    std::map<std::string, double> time_seconds;
};

EvaluationReport evaluate(const std::vector<GeoDetection>& preds, const GroundTruthSet& gts,
                          const MatchCriterion& criterion);

/// Stage-2 workload summary: how much of the full patch grid the detector
/// actually had to examine.
struct WorkloadReport {
    std::size_t patches_examined = 0;
    std::size_t patches_total = 0;
    double reduction_ratio = 1.0;  // patches_total / max(patches_examined, 1)
    StageTimings mean_timings;
    std::size_t repetitions = 1;
};

/// Ratio + timings from one completed run. baseline_patches is the
/// full-coverage patch count and must be >= the examined count.
WorkloadReport benchmark_workload(const PipelineReport& report, std::size_t baseline_patches);

/// Repeats the pipeline `repetitions` times (default 5) and averages the
/// per-stage timings; ratio comes from the final run.
WorkloadReport run_benchmark(const MultiSpectralTile& tile, const PipelineConfig& cfg,
                             std::size_t baseline_patches, std::size_t repetitions = 5);

/// Full-coverage patch count of a stage-2 raster grid.
std::size_t grid_patch_count(std::int64_t stage2_width, std::int64_t stage2_height,
                             std::int64_t patch_size);

}  // namespace kiln
