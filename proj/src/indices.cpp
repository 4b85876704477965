#include "kiln/indices.hpp"

namespace kiln {

const char* to_string(IndexKind kind) {
    switch (kind) {
        case IndexKind::NDVI: return "NDVI";
        case IndexKind::EVI: return "EVI";
        case IndexKind::NDBI: return "NDBI";
        case IndexKind::NDMI: return "NDMI";
        case IndexKind::BAI: return "BAI";
    }
    return "?";
}

std::optional<IndexKind> index_kind_from_string(std::string_view s) {
    for (IndexKind kind : kIndexKinds)
        if (s == to_string(kind)) return kind;
    return std::nullopt;
}

namespace {

void check_same_dims(const BandRaster& a, const BandRaster& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DataError(std::string(what) + ": dimension mismatch");
}

IndexRaster make_blank(IndexKind kind, Eigen::Index height, Eigen::Index width) {
    IndexRaster out;
    out.kind = kind;
    out.values = ImageF::Zero(height, width);
    out.nodata = MaskImage::Constant(height, width, false);
    return out;
}

// Evaluates numerator/denominator in float64 row blocks, storing float32.
// Pixels with |denominator| < eps or any masked input become nodata with a
// zero value. NumFn/DenFn get the block row range and return double arrays.
template <typename NumFn, typename DenFn, typename MaskFn>
IndexRaster ratio_index(IndexKind kind, Eigen::Index height, Eigen::Index width,
                        const IndexOptions& opts, NumFn&& num_of, DenFn&& den_of,
                        MaskFn&& mask_of) {
    IndexRaster out = make_blank(kind, height, width);
    parallel_rows(height, opts.threads, [&](Eigen::Index r0, Eigen::Index r1) {
        const Eigen::Index n = r1 - r0;
        const ImageD num = num_of(r0, n);
        const ImageD den = den_of(r0, n);
        MaskImage mask = (mask_of(r0, n) || (den.abs() < opts.eps_den)).eval();
        ImageF vals = (num / den).cast<float>();
        out.values.middleRows(r0, n) = mask.select(ImageF::Zero(n, width), vals);
        out.nodata.middleRows(r0, n) = mask;
    });
    return out;
}

}  // namespace

IndexRaster normalized_difference(const BandRaster& a, const BandRaster& b, IndexKind kind,
                                  const IndexOptions& opts) {
    check_same_dims(a, b, "normalized_difference");
    return ratio_index(
        kind, a.height(), a.width(), opts,
        [&](Eigen::Index r0, Eigen::Index n) -> ImageD {
            return a.values.middleRows(r0, n).cast<double>() -
                   b.values.middleRows(r0, n).cast<double>();
        },
        [&](Eigen::Index r0, Eigen::Index n) -> ImageD {
            return a.values.middleRows(r0, n).cast<double>() +
                   b.values.middleRows(r0, n).cast<double>();
        },
        [&](Eigen::Index r0, Eigen::Index n) -> MaskImage {
            return a.nodata.middleRows(r0, n) || b.nodata.middleRows(r0, n);
        });
}

IndexRaster ndvi(const MultiSpectralTile& tile, const IndexOptions& opts) {
    return normalized_difference(tile.band(BandRole::NIR), tile.band(BandRole::Red),
                                 IndexKind::NDVI, opts);
}

IndexRaster evi(const MultiSpectralTile& tile, const IndexOptions& opts) {
    const BandRaster& nir = tile.band(BandRole::NIR);
    const BandRaster& red = tile.band(BandRole::Red);
    const BandRaster& blue = tile.band(BandRole::Blue);
    check_same_dims(nir, red, "evi");
    check_same_dims(nir, blue, "evi");
    return ratio_index(
        IndexKind::EVI, nir.height(), nir.width(), opts,
        [&](Eigen::Index r0, Eigen::Index n) -> ImageD {
            return 2.5 * (nir.values.middleRows(r0, n).cast<double>() -
                          red.values.middleRows(r0, n).cast<double>());
        },
        [&](Eigen::Index r0, Eigen::Index n) -> ImageD {
            return nir.values.middleRows(r0, n).cast<double>() +
                   6.0 * red.values.middleRows(r0, n).cast<double>() -
                   7.5 * blue.values.middleRows(r0, n).cast<double>() + 1.0;
        },
        [&](Eigen::Index r0, Eigen::Index n) -> MaskImage {
            return nir.nodata.middleRows(r0, n) || red.nodata.middleRows(r0, n) ||
                   blue.nodata.middleRows(r0, n);
        });
}

IndexRaster ndbi(const MultiSpectralTile& tile, const IndexOptions& opts) {
    return normalized_difference(tile.band(BandRole::SWIR), tile.band(BandRole::NIR),
                                 IndexKind::NDBI, opts);
}

IndexRaster ndmi(const MultiSpectralTile& tile, const IndexOptions& opts) {
    const BandRole first =
        opts.ndmi_variant == NdmiVariant::Paper ? BandRole::Green : BandRole::NIR;
    return normalized_difference(tile.band(first), tile.band(BandRole::SWIR), IndexKind::NDMI,
                                 opts);
}

IndexRaster bai(const MultiSpectralTile& tile, const IndexOptions& opts) {
    const BandRaster& red = tile.band(BandRole::Red);
    const BandRaster& nir = tile.band(BandRole::NIR);
    check_same_dims(red, nir, "bai");
    return ratio_index(
        IndexKind::BAI, red.height(), red.width(), opts,
        [&](Eigen::Index, Eigen::Index n) -> ImageD {
            return ImageD::Constant(n, red.width(), 1.0);
        },
        [&](Eigen::Index r0, Eigen::Index n) -> ImageD {
            return (0.1 - red.values.middleRows(r0, n).cast<double>()).square() +
                   (0.06 - nir.values.middleRows(r0, n).cast<double>()).square();
        },
        [&](Eigen::Index r0, Eigen::Index n) -> MaskImage {
            return red.nodata.middleRows(r0, n) || nir.nodata.middleRows(r0, n);
        });
}

std::map<IndexKind, IndexRaster> compute_all_indices(const MultiSpectralTile& tile,
                                                     const IndexOptions& opts) {
    tile.require_coregistered();
    MaskImage any_nodata = tile.band(BandRole::Blue).nodata;
    for (BandRole role : {BandRole::Green, BandRole::Red, BandRole::NIR, BandRole::SWIR})
        any_nodata = any_nodata || tile.band(role).nodata;

    std::map<IndexKind, IndexRaster> out;
    out.emplace(IndexKind::NDVI, ndvi(tile, opts));
    out.emplace(IndexKind::EVI, evi(tile, opts));
    out.emplace(IndexKind::NDBI, ndbi(tile, opts));
    out.emplace(IndexKind::NDMI, ndmi(tile, opts));
    out.emplace(IndexKind::BAI, bai(tile, opts));

    // A pixel nodata in any band is nodata in every output.
    for (auto& [kind, raster] : out) {
        raster.values = any_nodata.select(ImageF::Zero(raster.height(), raster.width()),
                                          raster.values);
        raster.nodata = raster.nodata || any_nodata;
    }
    return out;
}

}  // namespace kiln
