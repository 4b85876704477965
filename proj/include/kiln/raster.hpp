#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kiln/error.hpp"

namespace kiln {

/// Row-major dense image, width = cols(), height = rows().
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageF = Image<float>;
using ImageD = Image<double>;
using MaskImage = Image<bool>;

/// Single-band raster with a per-pixel validity mask (true = invalid sample).
/// Non-nodata values are finite; nodata pixels may hold anything (the raw
/// payload is preserved so save/load round-trips bit-exactly).
template <typename Scalar>
struct Raster {
    Image<Scalar> values;
    MaskImage nodata;

    Raster() = default;
    Raster(Image<Scalar> v, MaskImage m) : values(std::move(v)), nodata(std::move(m)) {
        if (values.rows() != nodata.rows() || values.cols() != nodata.cols())
            throw DataError("raster value/mask dimension mismatch");
    }

    Eigen::Index width() const { return values.cols(); }
    Eigen::Index height() const { return values.rows(); }
    Eigen::Index size() const { return values.size(); }

    static Raster constant(Eigen::Index height, Eigen::Index width, Scalar v) {
        return Raster(Image<Scalar>::Constant(height, width, v),
                      MaskImage::Constant(height, width, false));
    }
};

using BandRaster = Raster<float>;

enum class BandRole { Blue, Green, Red, NIR, SWIR };

inline constexpr std::array<BandRole, 5> kBandRoles = {
    BandRole::Blue, BandRole::Green, BandRole::Red, BandRole::NIR, BandRole::SWIR};

const char* to_string(BandRole role);
std::optional<BandRole> band_role_from_string(std::string_view s);

/// Affine map between fractional pixel coordinates and CRS coordinates,
/// GDAL coefficient order:
///   geo_x = c0 + col*c1 + row*c2
///   geo_y = c3 + col*c4 + row*c5
/// Pixel-corner convention: pixel (0,0) spans [0,1) x [0,1).
/// The 2x2 linear part must be invertible; rejected at construction.
class GeoTransform {
public:
    GeoTransform();  // identity transform, empty CRS
    GeoTransform(const std::array<double, 6>& coefficients, std::string crs_id);

    const std::array<double, 6>& coefficients() const { return c_; }
    const std::string& crs() const { return crs_; }

    Eigen::Vector2d origin() const { return {c_[0], c_[3]}; }
    Eigen::Matrix2d linear() const;
    const Eigen::Matrix2d& inverse_linear() const { return inv_; }

    /// Same linear part and CRS, origin moved to pixel (col, row).
    GeoTransform translated(double col, double row) const;

    bool operator==(const GeoTransform& o) const { return c_ == o.c_ && crs_ == o.crs_; }

private:
    std::array<double, 6> c_;
    Eigen::Matrix2d inv_;
    std::string crs_;
};

Eigen::Vector2d pixel_to_geo(const GeoTransform& gt, double col, double row);
Eigen::Vector2d geo_to_pixel(const GeoTransform& gt, double geo_x, double geo_y);

/// Co-registered multi-spectral tile. All bands must share dimensions before
/// index computation; resample_nearest() aligns coarser bands.
struct MultiSpectralTile {
    std::map<BandRole, BandRaster> bands;
    GeoTransform geotransform;
    std::string tile_id;

    const BandRaster& band(BandRole role) const;
    bool has_band(BandRole role) const { return bands.count(role) != 0; }

    Eigen::Index width() const { return bands.empty() ? 0 : bands.begin()->second.width(); }
    Eigen::Index height() const { return bands.empty() ? 0 : bands.begin()->second.height(); }

    /// Throws DataError unless all five roles are present with equal dimensions.
    void require_coregistered() const;
};

// ---------------------------------------------------------------------------
// Band file I/O: raw little-endian payload plus a JSON sidecar at <path>.json.
// Sidecar schema:
//   {"width": int, "height": int, "dtype": "f32"|"u16", "nodata": number|null,
//    "geotransform": [6 numbers], "crs": string,
//    "band_role": "Blue"|"Green"|"Red"|"NIR"|"SWIR"}   (or "index_kind": ...)
// ---------------------------------------------------------------------------

struct BandFileInfo {
    std::int64_t width = 0;
    std::int64_t height = 0;
    std::string dtype = "f32";  // "f32" | "u16"
    std::optional<double> nodata;
    GeoTransform geotransform;
    std::string band_role;   // empty unless the sidecar carried "band_role"
    std::string index_kind;  // empty unless the sidecar carried "index_kind"
};

std::filesystem::path sidecar_path(const std::filesystem::path& data_path);

BandFileInfo read_sidecar(const std::filesystem::path& data_path);
void write_sidecar(const std::filesystem::path& data_path, const BandFileInfo& info);

/// Reads the raw payload described by `info`. Values are stored as float
/// (u16 digital numbers convert exactly); the mask is set wherever the nodata
/// sentinel occurs and, for f32 payloads, wherever the value is non-finite.
BandRaster load_band(const std::filesystem::path& path, const BandFileInfo& info);

/// Convenience overload reading the sidecar at sidecar_path(path).
std::pair<BandRaster, BandFileInfo> load_band(const std::filesystem::path& path);

/// Writes payload (dtype per `info`) and sidecar. A raster loaded with
/// load_band and saved with the same info reproduces the payload bit-exactly.
void save_band(const std::filesystem::path& path, const BandRaster& raster, BandFileInfo info);

// ---------------------------------------------------------------------------
// Raster operations (pure; inputs immutable)
// ---------------------------------------------------------------------------

/// Divides every value by `scale` (> 0). Mask preserved; masked values carry
/// no meaning afterwards.
BandRaster normalize_reflectance(const BandRaster& raw, double scale);

/// Nearest-neighbor resampling with source index floor(i * src_dim / dst_dim).
/// Nodata propagates from the sampled source pixel.
BandRaster resample_nearest(const BandRaster& src, std::int64_t target_width,
                            std::int64_t target_height);

/// Splits [0, rows) into contiguous chunks and runs fn(begin, end) on worker
/// threads. Outputs must not overlap between chunks; results are then
/// independent of the partitioning. threads <= 1 runs inline.
void parallel_rows(Eigen::Index rows, unsigned threads,
                   const std::function<void(Eigen::Index, Eigen::Index)>& fn);

inline unsigned hardware_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

}  // namespace kiln
