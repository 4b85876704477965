#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace kiln {

using Point2d = Eigen::Vector2d;
using Quad = std::array<Point2d, 4>;

/// Maps an angle in degrees onto [0, 180); rectangles are 180-degree
/// symmetric so this range covers every distinct orientation.
double normalize_theta(double theta_deg);

/// Center/size/angle rectangle. theta is degrees counterclockwise in
/// [0, 180); w and h are positive. area() is exactly w*h.
struct OrientedBox {
    double cx = 0, cy = 0;
    double w = 1, h = 1;
    double theta = 0;

    OrientedBox() = default;
    OrientedBox(double cx_, double cy_, double w_, double h_, double theta_deg);

    double area() const { return w * h; }
};

/// The four vertices rotated by theta about the center, counterclockwise
/// starting from the corner at (-w/2, -h/2) in the local frame.
Quad box_corners(const OrientedBox& b);

/// Shoelace area; positive for counterclockwise rings.
double signed_area(std::span<const Point2d> poly);

/// Sutherland-Hodgman clip of a convex subject polygon against a convex
/// clip polygon (either winding accepted). Result with < 3 vertices means
/// empty intersection.
std::vector<Point2d> clip_convex(std::span<const Point2d> subject, std::span<const Point2d> clip);

/// Intersection-over-union of two convex quadrilaterals (any winding).
double quad_iou(const Quad& a, const Quad& b);

/// Rotated-box IoU via convex polygon clipping of the corner quads.
double rotated_iou(const OrientedBox& a, const OrientedBox& b);

/// Greedy non-maximum suppression over oriented boxes: descending confidence
/// (ties toward smaller cx, then cy); a box is kept iff its IoU with every
/// already-kept box is <= iou_thresh. Output preserves kept order.
struct ScoredBox {
    OrientedBox box;
    double confidence = 0;
};
std::vector<ScoredBox> oriented_nms(std::vector<ScoredBox> dets, double iou_thresh);

// ---------------------------------------------------------------------------
// Theta quantization: five classes replacing continuous angle regression.
// ---------------------------------------------------------------------------

enum class ThetaClass { K0, K20, K40, K140, K160 };

inline constexpr std::array<ThetaClass, 5> kThetaClasses = {
    ThetaClass::K0, ThetaClass::K20, ThetaClass::K40, ThetaClass::K140, ThetaClass::K160};

double theta_class_degrees(ThetaClass cls);
const char* to_string(ThetaClass cls);
std::optional<ThetaClass> theta_class_from_string(std::string_view s);

/// Angular distance on the 180-degree-periodic orientation axis:
/// min(|a-b| mod 180, 180 - |a-b| mod 180).
double circular_angle_distance(double a_deg, double b_deg);

/// Rotates an axis-aligned box (theta must be 0) to its class angle;
/// center and sides unchanged.
OrientedBox theta_class_to_box(const OrientedBox& axis_box, ThetaClass cls);

/// Class minimizing circular angular distance; ties break toward the
/// smaller class degree.
ThetaClass nearest_theta_class(double theta_deg);

/// Generic nearest-class lookup over an arbitrary ascending degree list;
/// returns the index of the winning class.
std::size_t nearest_angle_class(double theta_deg, std::span<const double> class_degrees);

}  // namespace kiln
