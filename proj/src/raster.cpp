#include "kiln/raster.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace kiln {

using nlohmann::json;

const char* to_string(BandRole role) {
    switch (role) {
        case BandRole::Blue: return "Blue";
        case BandRole::Green: return "Green";
        case BandRole::Red: return "Red";
        case BandRole::NIR: return "NIR";
        case BandRole::SWIR: return "SWIR";
    }
    return "?";
}

std::optional<BandRole> band_role_from_string(std::string_view s) {
    for (BandRole role : kBandRoles)
        if (s == to_string(role)) return role;
    return std::nullopt;
}

GeoTransform::GeoTransform() : GeoTransform({0.0, 1.0, 0.0, 0.0, 0.0, 1.0}, "") {}

GeoTransform::GeoTransform(const std::array<double, 6>& coefficients, std::string crs_id)
    : c_(coefficients), crs_(std::move(crs_id)) {
    for (double v : c_)
        if (!std::isfinite(v)) throw std::invalid_argument("geotransform coefficient not finite");
    Eigen::Matrix2d lin = linear();
    const double det = lin.determinant();
    if (det == 0.0 || !std::isfinite(det))
        throw std::invalid_argument("geotransform linear part is singular");
    inv_ = lin.inverse();
}

Eigen::Matrix2d GeoTransform::linear() const {
    Eigen::Matrix2d m;
    m << c_[1], c_[2], c_[4], c_[5];
    return m;
}

GeoTransform GeoTransform::translated(double col, double row) const {
    const Eigen::Vector2d o = pixel_to_geo(*this, col, row);
    return GeoTransform({o.x(), c_[1], c_[2], o.y(), c_[4], c_[5]}, crs_);
}

Eigen::Vector2d pixel_to_geo(const GeoTransform& gt, double col, double row) {
    const auto& c = gt.coefficients();
    return {c[0] + col * c[1] + row * c[2], c[3] + col * c[4] + row * c[5]};
}

Eigen::Vector2d geo_to_pixel(const GeoTransform& gt, double geo_x, double geo_y) {
    const Eigen::Vector2d rhs(geo_x - gt.coefficients()[0], geo_y - gt.coefficients()[3]);
    return gt.inverse_linear() * rhs;
}

const BandRaster& MultiSpectralTile::band(BandRole role) const {
    auto it = bands.find(role);
    if (it == bands.end())
        throw DataError("tile '" + tile_id + "' is missing band " + to_string(role));
    return it->second;
}

void MultiSpectralTile::require_coregistered() const {
    const BandRaster* first = nullptr;
    for (BandRole role : kBandRoles) {
        const BandRaster& b = band(role);
        if (!first) {
            first = &b;
        } else if (b.width() != first->width() || b.height() != first->height()) {
            throw DataError(std::string("band ") + to_string(role) +
                            " dimension mismatch (resample before index computation)");
        }
    }
}

// --- band file I/O ---------------------------------------------------------

std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
    std::filesystem::path p = data_path;
    p += ".json";
    return p;
}

static GeoTransform geotransform_from_json(const json& j, const std::string& crs) {
    if (!j.is_array() || j.size() != 6)
        throw DataError("sidecar geotransform must be an array of 6 numbers");
    std::array<double, 6> c{};
    for (std::size_t i = 0; i < 6; ++i) c[i] = j[i].get<double>();
    try {
        return GeoTransform(c, crs);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("sidecar geotransform invalid: ") + e.what());
    }
}

BandFileInfo read_sidecar(const std::filesystem::path& data_path) {
    const auto sp = sidecar_path(data_path);
    std::ifstream in(sp);
    if (!in) throw DataError("cannot open sidecar " + sp.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("malformed sidecar " + sp.string() + ": " + e.what());
    }
    BandFileInfo info;
    try {
        info.width = j.at("width").get<std::int64_t>();
        info.height = j.at("height").get<std::int64_t>();
        info.dtype = j.at("dtype").get<std::string>();
        if (!j.at("nodata").is_null()) info.nodata = j.at("nodata").get<double>();
        info.geotransform =
            geotransform_from_json(j.at("geotransform"), j.at("crs").get<std::string>());
        if (j.contains("band_role")) info.band_role = j.at("band_role").get<std::string>();
        if (j.contains("index_kind")) info.index_kind = j.at("index_kind").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError("malformed sidecar " + sp.string() + ": " + e.what());
    }
    if (info.width <= 0 || info.height <= 0)
        throw DataError("sidecar " + sp.string() + " declares non-positive dimensions");
    if (info.dtype != "f32" && info.dtype != "u16")
        throw DataError("sidecar " + sp.string() + " has unknown dtype '" + info.dtype + "'");
    return info;
}

void write_sidecar(const std::filesystem::path& data_path, const BandFileInfo& info) {
    json j;
    j["width"] = info.width;
    j["height"] = info.height;
    j["dtype"] = info.dtype;
    if (info.nodata)
        j["nodata"] = *info.nodata;
    else
        j["nodata"] = nullptr;
    j["geotransform"] = info.geotransform.coefficients();
    j["crs"] = info.geotransform.crs();
    if (!info.band_role.empty()) j["band_role"] = info.band_role;
    if (!info.index_kind.empty()) j["index_kind"] = info.index_kind;
    const auto sp = sidecar_path(data_path);
    std::ofstream out(sp);
    if (!out) throw DataError("cannot write sidecar " + sp.string());
    out << j.dump(2) << "\n";
}

static std::vector<char> read_payload(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open band file " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw DataError("error reading band file " + path.string());
    return bytes;
}

BandRaster load_band(const std::filesystem::path& path, const BandFileInfo& info) {
    if (info.width <= 0 || info.height <= 0)
        throw DataError("band header declares non-positive dimensions");
    if (info.dtype != "f32" && info.dtype != "u16")
        throw DataError("band header has unknown dtype '" + info.dtype + "'");

    const std::size_t count = static_cast<std::size_t>(info.width) * info.height;
    const std::size_t elem = info.dtype == "f32" ? 4 : 2;
    const std::vector<char> bytes = read_payload(path);
    if (bytes.size() != count * elem)
        throw DataError("band file " + path.string() + " size mismatch: header declares " +
                        std::to_string(count) + " samples (" + std::to_string(count * elem) +
                        " bytes), payload holds " + std::to_string(bytes.size()) + " bytes");

    ImageF values(info.height, info.width);
    MaskImage mask = MaskImage::Constant(info.height, info.width, false);
    float* out = values.data();
    bool* m = mask.data();

    if (info.dtype == "f32") {
        std::memcpy(out, bytes.data(), bytes.size());
        for (std::size_t i = 0; i < count; ++i) {
            const float v = out[i];
            if (!std::isfinite(v)) m[i] = true;
            else if (info.nodata && static_cast<double>(v) == *info.nodata) m[i] = true;
        }
    } else {
        const auto* dn = reinterpret_cast<const std::uint16_t*>(bytes.data());
        for (std::size_t i = 0; i < count; ++i) {
            out[i] = static_cast<float>(dn[i]);
            if (info.nodata && static_cast<double>(dn[i]) == *info.nodata) m[i] = true;
        }
    }
    return BandRaster(std::move(values), std::move(mask));
}

std::pair<BandRaster, BandFileInfo> load_band(const std::filesystem::path& path) {
    BandFileInfo info = read_sidecar(path);
    return {load_band(path, info), std::move(info)};
}

void save_band(const std::filesystem::path& path, const BandRaster& raster, BandFileInfo info) {
    info.width = raster.width();
    info.height = raster.height();
    if (info.dtype != "f32" && info.dtype != "u16")
        throw DataError("save_band: unknown dtype '" + info.dtype + "'");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write band file " + path.string());
    const std::size_t count = static_cast<std::size_t>(raster.size());
    if (info.dtype == "f32") {
        out.write(reinterpret_cast<const char*>(raster.values.data()),
                  static_cast<std::streamsize>(count * 4));
    } else {
        std::vector<std::uint16_t> dn(count);
        const float* v = raster.values.data();
        for (std::size_t i = 0; i < count; ++i) dn[i] = static_cast<std::uint16_t>(v[i]);
        out.write(reinterpret_cast<const char*>(dn.data()),
                  static_cast<std::streamsize>(count * 2));
    }
    if (!out) throw DataError("error writing band file " + path.string());
    out.close();
    write_sidecar(path, info);
}

// --- raster operations -----------------------------------------------------

BandRaster normalize_reflectance(const BandRaster& raw, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("reflectance scale must be > 0");
    BandRaster out;
    out.values = (raw.values.cast<double>() / scale).cast<float>();
    out.nodata = raw.nodata;
    return out;
}

BandRaster resample_nearest(const BandRaster& src, std::int64_t target_width,
                            std::int64_t target_height) {
    if (target_width <= 0 || target_height <= 0)
        throw std::invalid_argument("resample target dimensions must be positive");
    const std::int64_t sw = src.width(), sh = src.height();
    BandRaster out;
    out.values.resize(target_height, target_width);
    out.nodata.resize(target_height, target_width);
    for (std::int64_t r = 0; r < target_height; ++r) {
        const std::int64_t sr = r * sh / target_height;
        for (std::int64_t c = 0; c < target_width; ++c) {
            const std::int64_t sc = c * sw / target_width;
            out.values(r, c) = src.values(sr, sc);
            out.nodata(r, c) = src.nodata(sr, sc);
        }
    }
    return out;
}

void parallel_rows(Eigen::Index rows, unsigned threads,
                   const std::function<void(Eigen::Index, Eigen::Index)>& fn) {
    if (rows <= 0) return;
    const Eigen::Index n = std::min<Eigen::Index>(rows, threads == 0 ? 1 : threads);
    if (n <= 1) {
        fn(0, rows);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n));
    const Eigen::Index chunk = (rows + n - 1) / n;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index r0 = i * chunk;
        const Eigen::Index r1 = std::min(rows, r0 + chunk);
        if (r0 >= r1) break;
        workers.emplace_back([&fn, r0, r1] { fn(r0, r1); });
    }
    for (auto& w : workers) w.join();
}

}  // namespace kiln
