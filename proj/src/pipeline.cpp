#include "kiln/pipeline.hpp"

#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "kiln/io.hpp"

namespace kiln {

using nlohmann::json;

std::vector<Detection> ingest_detections(std::istream& jsonl) {
    std::vector<Detection> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(jsonl, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("detection line " + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
        }
        try {
            Detection d;
            d.patch_id = j.at("patch_id").get<std::string>();
            const std::string cls = j.at("class").get<std::string>();
            const auto theta_cls = theta_class_from_string(cls);
            if (!theta_cls)
                throw DataError("detection line " + std::to_string(line_no) +
                                ": unknown class '" + cls +
                                "' (valid: K0, K20, K40, K140, K160)");
            d.theta_class = *theta_cls;
            d.confidence = j.at("conf").get<double>();
            if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
                throw DataError("detection line " + std::to_string(line_no) +
                                ": confidence outside [0, 1]");
            d.box = OrientedBox(j.at("cx").get<double>(), j.at("cy").get<double>(),
                                j.at("w").get<double>(), j.at("h").get<double>(),
                                theta_class_degrees(*theta_cls));
            out.push_back(std::move(d));
        } catch (const json::exception& e) {
            throw DataError("detection line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw DataError("detection line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Detection> ingest_detections_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open detections file " + path.string());
    return ingest_detections(in);
}

GeoDetection geo_reference(const Detection& d, const GeoTransform& patch_gt) {
    GeoDetection g;
    const Quad corners = box_corners(d.box);
    for (std::size_t i = 0; i < 4; ++i)
        g.polygon[i] = pixel_to_geo(patch_gt, corners[i].x(), corners[i].y());
    g.centroid_geo = pixel_to_geo(patch_gt, d.box.cx, d.box.cy);
    g.confidence = d.confidence;
    g.patch_id = d.patch_id;
    g.crs = patch_gt.crs();
    return g;
}

DedupReport dedup(std::vector<GeoDetection> dets, double iou_thresh) {
    if (dets.empty()) return {};
    for (const GeoDetection& d : dets)
        if (d.crs != dets.front().crs)
            throw DataError("dedup: detections mix CRS ids ('" + dets.front().crs + "' vs '" +
                            d.crs + "')");
    std::stable_sort(dets.begin(), dets.end(), [](const GeoDetection& a, const GeoDetection& b) {
        return std::make_tuple(-a.confidence, a.patch_id, a.detection_id) <
               std::make_tuple(-b.confidence, b.patch_id, b.detection_id);
    });
    DedupReport report;
    for (GeoDetection& d : dets) {
        const GeoDetection* dup_of = nullptr;
        for (const GeoDetection& k : report.kept) {
            if (k.patch_id == d.patch_id) continue;  // intra-patch pairs are NMS's job
            if (quad_iou(k.polygon, d.polygon) > iou_thresh) {
                dup_of = &k;
                break;
            }
        }
        if (dup_of) {
            report.merge_log.emplace_back(dup_of->detection_id, d.detection_id);
        } else {
            report.kept.push_back(std::move(d));
        }
    }
    report.duplicate_count = report.merge_log.size();
    return report;
}

std::pair<std::int64_t, std::int64_t> derive_stage2_dims(const MultiSpectralTile& tile,
                                                         const GeoTransform& stage2_gt) {
    const auto w = static_cast<double>(tile.width());
    const auto h = static_cast<double>(tile.height());
    double max_col = 0, max_row = 0;
    const std::array<std::pair<double, double>, 4> corners = {{{0, 0}, {w, 0}, {0, h}, {w, h}}};
    for (const auto& corner : corners) {
        const Eigen::Vector2d geo =
            pixel_to_geo(tile.geotransform, corner.first, corner.second);
        const Eigen::Vector2d px = geo_to_pixel(stage2_gt, geo.x(), geo.y());
        max_col = std::max(max_col, px.x());
        max_row = std::max(max_row, px.y());
    }
    return {static_cast<std::int64_t>(std::ceil(max_col)),
            static_cast<std::int64_t>(std::ceil(max_row))};
}

namespace {

struct DetectorResult {
    bool ok = false;
    int exit_code = 0;
    std::string message;
    std::string stdout_text;
};

DetectorResult invoke_detector(const std::string& cmd_template,
                               const std::filesystem::path& patches_path) {
    std::string cmd = cmd_template;
    const std::string placeholder = "{patches}";
    for (std::size_t pos = cmd.find(placeholder); pos != std::string::npos;
         pos = cmd.find(placeholder, pos)) {
        cmd.replace(pos, placeholder.size(), patches_path.string());
        pos += patches_path.string().size();
    }

    DetectorResult res;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
        res.message = "failed to spawn detector command: " + cmd;
        return res;
    }
    char buf[4096];
    std::string text;
    for (std::size_t n = 0; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;)
        text.append(buf, n);
    const int status = ::pclose(pipe);
    if (status == -1) {
        res.message = "failed to reap detector process";
        return res;
    }
    if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
        res.ok = true;
        res.stdout_text = std::move(text);
    } else {
        res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        res.message = "detector exited with status " + std::to_string(res.exit_code);
    }
    return res;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace

PipelineReport run_pipeline(const MultiSpectralTile& tile, const PipelineConfig& cfg) {
    PipelineReport report;
    report.tile_id = tile.tile_id;
    const auto t_start = std::chrono::steady_clock::now();

    auto t = std::chrono::steady_clock::now();
    const auto indices = compute_all_indices(tile, cfg.index_options);
    report.timings.indices_ms = ms_since(t);

    t = std::chrono::steady_clock::now();
    const CandidateMask mask =
        classify(indices, cfg.thresholds, tile.tile_id, cfg.index_options.threads);
    report.filter_rate = filter_rate(mask);
    report.timings.classify_ms = ms_since(t);

    t = std::chrono::steady_clock::now();
    report.regions = connected_components(mask, tile.geotransform, cfg.connectivity);
    report.timings.regions_ms = ms_since(t);

    t = std::chrono::steady_clock::now();
    auto [s2w, s2h] = std::pair{cfg.stage2_width, cfg.stage2_height};
    if (s2w <= 0 || s2h <= 0)
        std::tie(s2w, s2h) = derive_stage2_dims(tile, cfg.stage2_geotransform);
    report.stage2_width = s2w;
    report.stage2_height = s2h;
    report.plan =
        candidate_patches(report.regions, cfg.stage2_geotransform, s2w, s2h, cfg.patch_size);
    report.timings.patches_ms = ms_since(t);

    // Stage 2: one detector call over exactly the candidate patch list.
    std::vector<Detection> raw;
    if (!cfg.detector_cmd.empty() && !report.plan.patches.empty()) {
        t = std::chrono::steady_clock::now();
        const std::filesystem::path dir =
            cfg.work_dir.empty() ? std::filesystem::temp_directory_path() : cfg.work_dir;
        std::filesystem::create_directories(dir);
        const std::filesystem::path patches_path =
            dir / ("patches-" + (tile.tile_id.empty() ? "tile" : tile.tile_id) + ".json");
        write_patch_list(patches_path, report.plan.patches);

        const DetectorResult res = invoke_detector(cfg.detector_cmd, patches_path);
        report.detector_invocations = 1;
        report.timings.detector_ms = ms_since(t);
        if (!res.ok) {
            report.detector_failed = true;
            report.detector_exit_code = res.exit_code;
            report.detector_message = res.message;
            report.timings.total_ms = ms_since(t_start);
            return report;
        }
        std::istringstream stream(res.stdout_text);
        try {
            raw = ingest_detections(stream);
        } catch (const DataError& e) {
            report.detector_failed = true;
            report.detector_message = std::string("detector output rejected: ") + e.what();
            report.timings.total_ms = ms_since(t_start);
            return report;
        }
    }
    report.raw_detection_count = raw.size();

    t = std::chrono::steady_clock::now();
    std::map<std::string, const PatchRequest*> patch_by_id;
    for (const PatchRequest& p : report.plan.patches) patch_by_id[p.patch_id] = &p;

    std::map<std::string, std::vector<Detection>> by_patch;
    for (Detection& d : raw) {
        if (!patch_by_id.count(d.patch_id)) {
            report.detector_failed = true;
            report.detector_message =
                "detector output rejected: unknown patch_id '" + d.patch_id + "'";
            report.timings.total_ms = ms_since(t_start);
            return report;
        }
        by_patch[d.patch_id].push_back(std::move(d));
    }

    for (const PatchRequest& patch : report.plan.patches) {
        auto it = by_patch.find(patch.patch_id);
        if (it == by_patch.end()) continue;
        std::vector<ScoredBox> scored;
        scored.reserve(it->second.size());
        for (const Detection& d : it->second) scored.push_back({d.box, d.confidence});
        const std::vector<ScoredBox> kept = oriented_nms(std::move(scored), cfg.nms_iou);

        const GeoTransform patch_gt = cfg.stage2_geotransform.translated(
            static_cast<double>(patch.col0), static_cast<double>(patch.row0));
        std::size_t seq = 0;
        for (const ScoredBox& k : kept) {
            Detection det;
            det.patch_id = patch.patch_id;
            det.box = k.box;
            det.confidence = k.confidence;
            GeoDetection g = geo_reference(det, patch_gt);
            g.detection_id = patch.patch_id + "/" + std::to_string(seq++);
            report.detections.push_back(std::move(g));
        }
    }

    if (!report.detections.empty())
        report.dedup = dedup(report.detections, cfg.dedup_iou);
    report.timings.postprocess_ms = ms_since(t);
    report.timings.total_ms = ms_since(t_start);
    return report;
}

}  // namespace kiln
