#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kiln/indices.hpp"
#include "kiln/raster.hpp"

namespace kiln {

/// Fusion-rule thresholds. A pixel is a kiln candidate iff
///   NDVI < ndvi_max  &  EVI < evi_max  &  NDMI < ndmi_max  &
///   NDBI > ndbi_min  &  BAI > bai_min
/// with every comparison strict; boundary values classify 0.
struct ClassifierThresholds {
    double ndvi_max = 0.2;
    double evi_max = 0.2;
    double ndmi_max = 0.0;
    double ndbi_min = 0.0;
    double bai_min = 5e-8;

    void validate() const;  // all thresholds finite
};

/// Per-pixel candidate decisions for one tile (true = kiln candidate).
struct CandidateMask {
    MaskImage bits;
    std::string tile_id;

    Eigen::Index width() const { return bits.cols(); }
    Eigen::Index height() const { return bits.rows(); }
};

/// Connected group of candidate pixels. bbox is in inclusive pixel indices;
/// centroid_px is the mean of member pixel centers under the pixel-corner
/// convention (pixel (c, r) has center (c + 0.5, r + 0.5)).
struct CandidateRegion {
    int region_id = 0;
    std::int64_t pixel_count = 0;
    std::int64_t min_col = 0, min_row = 0, max_col = 0, max_row = 0;
    Eigen::Vector2d centroid_px{0, 0};
    Eigen::Vector2d centroid_geo{0, 0};
};

/// A 256x256 (configurable) window in stage-2 pixel space, snapped to the
/// global patch grid anchored at the stage-2 raster origin.
struct PatchRequest {
    std::string patch_id;
    std::int64_t col0 = 0, row0 = 0, size = 256;
    std::array<double, 4> geo_window{0, 0, 0, 0};  // [x0, y0, x1, y1]
};

struct PatchPlan {
    std::vector<PatchRequest> patches;
    std::vector<int> skipped_region_ids;  // centroid outside the stage-2 extent
};

bool classify_pixel(double ndvi, double evi, double ndmi, double ndbi, double bai,
                    const ClassifierThresholds& t);

/// Applies the fusion rule per pixel over the five index rasters. A pixel
/// that is nodata in any raster classifies 0.
CandidateMask classify(const std::map<IndexKind, IndexRaster>& indices,
                       const ClassifierThresholds& t, const std::string& tile_id = "",
                       unsigned threads = 1);

/// Maximal connected groups of true bits (connectivity 4 or 8). Region ids
/// are assigned in (min_row, min_col) order of the region bounding boxes.
std::vector<CandidateRegion> connected_components(const CandidateMask& mask,
                                                  const GeoTransform& gt, int connectivity = 8);

/// Fraction of pixels rejected by stage 1: false bits / total bits.
double filter_rate(const CandidateMask& mask);

/// One grid-aligned patch window per region centroid, duplicates merged,
/// sorted by (row0, col0). Regions whose centroid falls outside the stage-2
/// extent are listed as skipped, not errors.
PatchPlan candidate_patches(const std::vector<CandidateRegion>& regions,
                            const GeoTransform& stage2_gt, std::int64_t stage2_width,
                            std::int64_t stage2_height, std::int64_t patch_size = 256);

std::string patch_id_for(std::int64_t row0, std::int64_t col0);

}  // namespace kiln
