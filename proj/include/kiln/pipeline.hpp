#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kiln/classifier.hpp"
#include "kiln/geometry.hpp"
#include "kiln/raster.hpp"

namespace kiln {

/// One detector output record. The box lives in patch-local pixel
/// coordinates (it may extend past the patch window); box.theta always
/// equals the theta class degrees.
struct Detection {
    std::string patch_id;
    OrientedBox box;
    double confidence = 0;
    ThetaClass theta_class = ThetaClass::K0;
};

/// Parses detector output: one JSON object per line,
///   {"patch_id": str, "cx","cy","w","h": numbers, "class": "K0".."K160",
///    "conf": number in [0,1]}
/// Bad records raise DataError naming the offending line.
std::vector<Detection> ingest_detections(std::istream& jsonl);
std::vector<Detection> ingest_detections_file(const std::filesystem::path& path);

/// A detection lifted into CRS coordinates via the patch geotransform.
struct GeoDetection {
    std::string detection_id;
    Quad polygon;  // box corners mapped through the geotransform
    Eigen::Vector2d centroid_geo{0, 0};
    double confidence = 0;
    std::string patch_id;
    std::string crs;
};

GeoDetection geo_reference(const Detection& d, const GeoTransform& patch_gt);

struct DedupReport {
    std::vector<GeoDetection> kept;
    std::size_t duplicate_count = 0;
    std::vector<std::pair<std::string, std::string>> merge_log;  // (kept_id, removed_id)
};

/// Greedy cross-patch duplicate removal by descending confidence (ties:
/// lexicographic patch_id, then detection_id). A detection is a duplicate of
/// an already-kept one iff the two come from different patches and their
/// planar geo IoU exceeds iou_thresh. Same-patch suppression is NMS's job.
DedupReport dedup(std::vector<GeoDetection> dets, double iou_thresh = 0.3);

struct PipelineConfig {
    ClassifierThresholds thresholds;
    IndexOptions index_options;
    int connectivity = 8;
    std::int64_t patch_size = 256;
    double nms_iou = 0.5;
    double dedup_iou = 0.3;

    /// Command template invoked once with {patches} replaced by the patch
    /// list path; detections are read from its stdout as JSON lines.
    /// Empty means stage-1 only (the detector is never invoked).
    std::string detector_cmd;

    GeoTransform stage2_geotransform;
    std::int64_t stage2_width = 0;   // 0: derived from the tile extent
    std::int64_t stage2_height = 0;  // 0: derived from the tile extent

    std::filesystem::path work_dir;  // where the patch list file is written
};

struct StageTimings {
    double indices_ms = 0;
    double classify_ms = 0;
    double regions_ms = 0;
    double patches_ms = 0;
    double detector_ms = 0;
    double postprocess_ms = 0;
    double total_ms = 0;
};

struct PipelineReport {
    std::string tile_id;
    double filter_rate = 1.0;
    std::vector<CandidateRegion> regions;
    PatchPlan plan;
    std::int64_t stage2_width = 0, stage2_height = 0;

    std::size_t detector_invocations = 0;
    bool detector_failed = false;
    int detector_exit_code = 0;
    std::string detector_message;

    std::size_t raw_detection_count = 0;        // ingested, before NMS
    std::vector<GeoDetection> detections;       // post-NMS, geo-referenced
    DedupReport dedup;

    StageTimings timings;
};

/// Full coarse-to-fine run: indices -> fusion rule -> regions -> patch plan
/// -> one external detector call -> per-patch NMS -> geo-reference -> dedup.
/// Detector failure is reported in the result (stage-1 fields stay valid);
/// it is not an exception.
PipelineReport run_pipeline(const MultiSpectralTile& tile, const PipelineConfig& cfg);

/// Stage-2 pixel dimensions covering the tile extent under stage2_gt
/// (used when the config leaves them 0).
std::pair<std::int64_t, std::int64_t> derive_stage2_dims(const MultiSpectralTile& tile,
                                                         const GeoTransform& stage2_gt);

}  // namespace kiln
