#pragma once

#include <map>
#include <optional>
#include <string_view>

#include "kiln/raster.hpp"

namespace kiln {

enum class IndexKind { NDVI, EVI, NDBI, NDMI, BAI };

inline constexpr std::array<IndexKind, 5> kIndexKinds = {
    IndexKind::NDVI, IndexKind::EVI, IndexKind::NDBI, IndexKind::NDMI, IndexKind::BAI};

const char* to_string(IndexKind kind);
std::optional<IndexKind> index_kind_from_string(std::string_view s);

/// Per-pixel spectral index values. NDVI/NDBI/NDMI lie in [-1, 1] and BAI is
/// strictly positive wherever the pixel is not nodata.
struct IndexRaster : Raster<float> {
    IndexKind kind = IndexKind::NDVI;
};

/// The paper's moisture index uses Green and SWIR; NirSwir is the common
/// NIR/SWIR variant, off by default.
enum class NdmiVariant { Paper, NirSwir };

struct IndexOptions {
    double eps_den = 1e-12;  // |denominator| below this becomes nodata
    NdmiVariant ndmi_variant = NdmiVariant::Paper;
    unsigned threads = 1;
};

/// (a - b) / (a + b) per pixel, computed in float64 and stored as float32.
/// Pixels where |a + b| < eps_den or where either input is nodata are nodata.
IndexRaster normalized_difference(const BandRaster& a, const BandRaster& b,
                                  IndexKind kind = IndexKind::NDVI,
                                  const IndexOptions& opts = {});

IndexRaster ndvi(const MultiSpectralTile& tile, const IndexOptions& opts = {});
IndexRaster evi(const MultiSpectralTile& tile, const IndexOptions& opts = {});
IndexRaster ndbi(const MultiSpectralTile& tile, const IndexOptions& opts = {});
IndexRaster ndmi(const MultiSpectralTile& tile, const IndexOptions& opts = {});
IndexRaster bai(const MultiSpectralTile& tile, const IndexOptions& opts = {});

/// All five indices over co-registered bands. A pixel that is nodata in any
/// band is nodata in every output raster.
std::map<IndexKind, IndexRaster> compute_all_indices(const MultiSpectralTile& tile,
                                                     const IndexOptions& opts = {});

}  // namespace kiln
