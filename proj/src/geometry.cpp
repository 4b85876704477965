#include "kiln/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kiln {

double normalize_theta(double theta_deg) {
    if (!std::isfinite(theta_deg)) throw std::invalid_argument("theta must be finite");
    double t = std::fmod(theta_deg, 180.0);
    if (t < 0) t += 180.0;
    return t == 180.0 ? 0.0 : t;
}

OrientedBox::OrientedBox(double cx_, double cy_, double w_, double h_, double theta_deg)
    : cx(cx_), cy(cy_), w(w_), h(h_), theta(normalize_theta(theta_deg)) {
    if (!(w > 0) || !(h > 0)) throw std::invalid_argument("oriented box sides must be positive");
}

Quad box_corners(const OrientedBox& b) {
    const double rad = b.theta * std::numbers::pi / 180.0;
    const double ca = std::cos(rad), sa = std::sin(rad);
    const double hw = b.w / 2.0, hh = b.h / 2.0;
    const std::array<Point2d, 4> local = {Point2d{-hw, -hh}, Point2d{hw, -hh}, Point2d{hw, hh},
                                          Point2d{-hw, hh}};
    Quad out;
    for (std::size_t i = 0; i < 4; ++i) {
        out[i] = {b.cx + ca * local[i].x() - sa * local[i].y(),
                  b.cy + sa * local[i].x() + ca * local[i].y()};
    }
    return out;
}

double signed_area(std::span<const Point2d> poly) {
    double twice = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2d& p = poly[i];
        const Point2d& q = poly[(i + 1) % n];
        twice += p.x() * q.y() - p.y() * q.x();
    }
    return twice / 2.0;
}

static double cross2(const Point2d& a, const Point2d& b) {
    return a.x() * b.y() - a.y() * b.x();
}

std::vector<Point2d> clip_convex(std::span<const Point2d> subject, std::span<const Point2d> clip) {
    std::vector<Point2d> poly(subject.begin(), subject.end());
    std::vector<Point2d> ring(clip.begin(), clip.end());
    if (signed_area(ring) < 0) std::reverse(ring.begin(), ring.end());

    std::vector<Point2d> next;
    for (std::size_t i = 0; i < ring.size() && !poly.empty(); ++i) {
        const Point2d& p = ring[i];
        const Point2d edge = ring[(i + 1) % ring.size()] - p;
        next.clear();
        for (std::size_t j = 0; j < poly.size(); ++j) {
            const Point2d& s = poly[j];
            const Point2d& e = poly[(j + 1) % poly.size()];
            const double ds = cross2(edge, s - p);  // >= 0 means inside (left of edge)
            const double de = cross2(edge, e - p);
            if (ds >= 0) next.push_back(s);
            if ((ds > 0 && de < 0) || (ds < 0 && de > 0)) {
                const double t = ds / (ds - de);
                next.push_back(s + t * (e - s));
            }
        }
        poly = next;
    }
    return poly;
}

static double intersection_area(std::span<const Point2d> a, std::span<const Point2d> b) {
    const std::vector<Point2d> inter = clip_convex(a, b);
    if (inter.size() < 3) return 0.0;
    return std::abs(signed_area(inter));
}

double quad_iou(const Quad& a, const Quad& b) {
    const double area_a = std::abs(signed_area(a));
    const double area_b = std::abs(signed_area(b));
    const double inter = intersection_area(a, b);
    const double uni = area_a + area_b - inter;
    if (!(uni > 0)) return 0.0;
    return inter / uni;
}

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
    return quad_iou(box_corners(a), box_corners(b));
}

std::vector<ScoredBox> oriented_nms(std::vector<ScoredBox> dets, double iou_thresh) {
    if (!(iou_thresh >= 0.0 && iou_thresh <= 1.0))
        throw std::invalid_argument("iou_thresh must be in [0, 1]");
    for (const ScoredBox& d : dets)
        if (!std::isfinite(d.confidence))
            throw std::invalid_argument("detection confidence must be finite");
    std::stable_sort(dets.begin(), dets.end(), [](const ScoredBox& a, const ScoredBox& b) {
        return std::make_tuple(-a.confidence, a.box.cx, a.box.cy) <
               std::make_tuple(-b.confidence, b.box.cx, b.box.cy);
    });
    std::vector<ScoredBox> kept;
    for (const ScoredBox& d : dets) {
        bool suppressed = false;
        for (const ScoredBox& k : kept) {
            if (rotated_iou(d.box, k.box) > iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

// --- theta classes ----------------------------------------------------------

double theta_class_degrees(ThetaClass cls) {
    switch (cls) {
        case ThetaClass::K0: return 0.0;
        case ThetaClass::K20: return 20.0;
        case ThetaClass::K40: return 40.0;
        case ThetaClass::K140: return 140.0;
        case ThetaClass::K160: return 160.0;
    }
    return 0.0;
}

const char* to_string(ThetaClass cls) {
    switch (cls) {
        case ThetaClass::K0: return "K0";
        case ThetaClass::K20: return "K20";
        case ThetaClass::K40: return "K40";
        case ThetaClass::K140: return "K140";
        case ThetaClass::K160: return "K160";
    }
    return "?";
}

std::optional<ThetaClass> theta_class_from_string(std::string_view s) {
    for (ThetaClass cls : kThetaClasses)
        if (s == to_string(cls)) return cls;
    return std::nullopt;
}

double circular_angle_distance(double a_deg, double b_deg) {
    double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
    return std::min(d, 180.0 - d);
}

OrientedBox theta_class_to_box(const OrientedBox& axis_box, ThetaClass cls) {
    if (axis_box.theta != 0.0)
        throw std::invalid_argument("theta_class_to_box expects an axis-aligned box (theta == 0)");
    return OrientedBox(axis_box.cx, axis_box.cy, axis_box.w, axis_box.h,
                       theta_class_degrees(cls));
}

std::size_t nearest_angle_class(double theta_deg, std::span<const double> class_degrees) {
    if (class_degrees.empty()) throw std::invalid_argument("empty class list");
    std::size_t best = 0;
    double best_dist = circular_angle_distance(theta_deg, class_degrees[0]);
    for (std::size_t i = 1; i < class_degrees.size(); ++i) {
        const double d = circular_angle_distance(theta_deg, class_degrees[i]);
        if (d < best_dist) {  // strict: ties stay with the smaller degree
            best = i;
            best_dist = d;
        }
    }
    return best;
}

ThetaClass nearest_theta_class(double theta_deg) {
    static constexpr std::array<double, 5> degrees = {0, 20, 40, 140, 160};
    return kThetaClasses[nearest_angle_class(theta_deg, degrees)];
}

}  // namespace kiln
