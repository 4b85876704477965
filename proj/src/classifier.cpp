#include "kiln/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace kiln {

void ClassifierThresholds::validate() const {
    for (double v : {ndvi_max, evi_max, ndmi_max, ndbi_min, bai_min})
        if (!std::isfinite(v)) throw std::invalid_argument("classifier threshold not finite");
}

bool classify_pixel(double ndvi, double evi, double ndmi, double ndbi, double bai,
                    const ClassifierThresholds& t) {
    return ndvi < t.ndvi_max && evi < t.evi_max && ndmi < t.ndmi_max && ndbi > t.ndbi_min &&
           bai > t.bai_min;
}

CandidateMask classify(const std::map<IndexKind, IndexRaster>& indices,
                       const ClassifierThresholds& t, const std::string& tile_id,
                       unsigned threads) {
    t.validate();
    for (IndexKind kind : kIndexKinds)
        if (indices.find(kind) == indices.end())
            throw DataError(std::string("classify: missing index ") + to_string(kind));

    const IndexRaster& ndvi = indices.at(IndexKind::NDVI);
    const IndexRaster& evi = indices.at(IndexKind::EVI);
    const IndexRaster& ndbi = indices.at(IndexKind::NDBI);
    const IndexRaster& ndmi = indices.at(IndexKind::NDMI);
    const IndexRaster& bai = indices.at(IndexKind::BAI);
    for (const IndexRaster* r : {&evi, &ndbi, &ndmi, &bai})
        if (r->width() != ndvi.width() || r->height() != ndvi.height())
            throw DataError("classify: index raster dimension mismatch");

    CandidateMask mask;
    mask.tile_id = tile_id;
    mask.bits.resize(ndvi.height(), ndvi.width());
    parallel_rows(ndvi.height(), threads, [&](Eigen::Index r0, Eigen::Index r1) {
        const Eigen::Index n = r1 - r0;
        mask.bits.middleRows(r0, n) =
            (ndvi.values.middleRows(r0, n).cast<double>() < t.ndvi_max) &&
            (evi.values.middleRows(r0, n).cast<double>() < t.evi_max) &&
            (ndmi.values.middleRows(r0, n).cast<double>() < t.ndmi_max) &&
            (ndbi.values.middleRows(r0, n).cast<double>() > t.ndbi_min) &&
            (bai.values.middleRows(r0, n).cast<double>() > t.bai_min) &&
            !ndvi.nodata.middleRows(r0, n) && !evi.nodata.middleRows(r0, n) &&
            !ndmi.nodata.middleRows(r0, n) && !ndbi.nodata.middleRows(r0, n) &&
            !bai.nodata.middleRows(r0, n);
    });
    return mask;
}

std::vector<CandidateRegion> connected_components(const CandidateMask& mask,
                                                  const GeoTransform& gt, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("connectivity must be 4 or 8");
    const Eigen::Index h = mask.height(), w = mask.width();
    Image<std::int32_t> label = Image<std::int32_t>::Constant(h, w, -1);

    struct Px {
        Eigen::Index r, c;
    };
    std::vector<CandidateRegion> regions;
    std::vector<Px> stack;

    for (Eigen::Index r = 0; r < h; ++r) {
        for (Eigen::Index c = 0; c < w; ++c) {
            if (!mask.bits(r, c) || label(r, c) >= 0) continue;
            const auto id = static_cast<std::int32_t>(regions.size());
            CandidateRegion region;
            region.min_col = region.max_col = c;
            region.min_row = region.max_row = r;
            double sum_c = 0, sum_r = 0;
            stack.push_back({r, c});
            label(r, c) = id;
            while (!stack.empty()) {
                const Px p = stack.back();
                stack.pop_back();
                ++region.pixel_count;
                sum_c += static_cast<double>(p.c) + 0.5;
                sum_r += static_cast<double>(p.r) + 0.5;
                region.min_col = std::min(region.min_col, static_cast<std::int64_t>(p.c));
                region.max_col = std::max(region.max_col, static_cast<std::int64_t>(p.c));
                region.min_row = std::min(region.min_row, static_cast<std::int64_t>(p.r));
                region.max_row = std::max(region.max_row, static_cast<std::int64_t>(p.r));
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        if (connectivity == 4 && dr != 0 && dc != 0) continue;
                        const Eigen::Index nr = p.r + dr, nc = p.c + dc;
                        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                        if (!mask.bits(nr, nc) || label(nr, nc) >= 0) continue;
                        label(nr, nc) = id;
                        stack.push_back({nr, nc});
                    }
                }
            }
            region.centroid_px = {sum_c / static_cast<double>(region.pixel_count),
                                  sum_r / static_cast<double>(region.pixel_count)};
            region.centroid_geo = pixel_to_geo(gt, region.centroid_px.x(), region.centroid_px.y());
            regions.push_back(std::move(region));
        }
    }

    // Ids follow (min_row, min_col) of the bounding box; scan order breaks
    // the rare tie where two regions share a bbox corner.
    std::stable_sort(regions.begin(), regions.end(),
                     [](const CandidateRegion& a, const CandidateRegion& b) {
                         return std::tie(a.min_row, a.min_col) < std::tie(b.min_row, b.min_col);
                     });
    for (std::size_t i = 0; i < regions.size(); ++i)
        regions[i].region_id = static_cast<int>(i);
    return regions;
}

double filter_rate(const CandidateMask& mask) {
    const auto total = static_cast<double>(mask.bits.size());
    if (total <= 0) throw std::invalid_argument("filter_rate: zero-size mask");
    const auto positives = static_cast<double>(mask.bits.count());
    return (total - positives) / total;
}

std::string patch_id_for(std::int64_t row0, std::int64_t col0) {
    return "p_r" + std::to_string(row0) + "_c" + std::to_string(col0);
}

PatchPlan candidate_patches(const std::vector<CandidateRegion>& regions,
                            const GeoTransform& stage2_gt, std::int64_t stage2_width,
                            std::int64_t stage2_height, std::int64_t patch_size) {
    if (patch_size <= 0) throw std::invalid_argument("patch_size must be positive");
    PatchPlan plan;
    std::set<std::pair<std::int64_t, std::int64_t>> windows;  // (row0, col0)
    for (const CandidateRegion& region : regions) {
        const Eigen::Vector2d px =
            geo_to_pixel(stage2_gt, region.centroid_geo.x(), region.centroid_geo.y());
        if (px.x() < 0 || px.y() < 0 || px.x() >= static_cast<double>(stage2_width) ||
            px.y() >= static_cast<double>(stage2_height)) {
            plan.skipped_region_ids.push_back(region.region_id);
            continue;
        }
        const auto col0 =
            static_cast<std::int64_t>(std::floor(px.x() / static_cast<double>(patch_size))) *
            patch_size;
        const auto row0 =
            static_cast<std::int64_t>(std::floor(px.y() / static_cast<double>(patch_size))) *
            patch_size;
        windows.emplace(row0, col0);
    }
    for (const auto& [row0, col0] : windows) {
        PatchRequest req;
        req.patch_id = patch_id_for(row0, col0);
        req.col0 = col0;
        req.row0 = row0;
        req.size = patch_size;
        const auto c0 = static_cast<double>(col0), r0 = static_cast<double>(row0);
        const auto s = static_cast<double>(patch_size);
        std::array<Eigen::Vector2d, 4> corners = {
            pixel_to_geo(stage2_gt, c0, r0), pixel_to_geo(stage2_gt, c0 + s, r0),
            pixel_to_geo(stage2_gt, c0 + s, r0 + s), pixel_to_geo(stage2_gt, c0, r0 + s)};
        double x0 = corners[0].x(), x1 = corners[0].x();
        double y0 = corners[0].y(), y1 = corners[0].y();
        for (const auto& p : corners) {
            x0 = std::min(x0, p.x());
            x1 = std::max(x1, p.x());
            y0 = std::min(y0, p.y());
            y1 = std::max(y1, p.y());
        }
        req.geo_window = {x0, y0, x1, y1};
        plan.patches.push_back(std::move(req));
    }
    return plan;
}

}  // namespace kiln
