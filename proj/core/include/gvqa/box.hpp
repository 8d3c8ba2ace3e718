#pragma once

namespace gvqa {

// Axis-aligned box in corner convention, x1 < x2 and y1 < y2. Coordinates are
// pixels in tubelets and files; the grounder works on normalized centers
// internally and converts at its boundary.
struct BoundingBox {
    double x1{0.0};
    double y1{0.0};
    double x2{0.0};
    double y2{0.0};

    [[nodiscard]] double width() const { return x2 - x1; }
    [[nodiscard]] double height() const { return y2 - y1; }
    [[nodiscard]] double area() const { return width() * height(); }

    [[nodiscard]] bool valid() const { return x2 > x1 && y2 > y1; }

    bool operator==(const BoundingBox&) const = default;
};

double intersection_area(const BoundingBox& a, const BoundingBox& b);

// Intersection over union. Throws on degenerate (zero-area) boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

// IoU minus the normalized slack of the smallest enclosing box; in [-1, 1].
double generalized_iou(const BoundingBox& a, const BoundingBox& b);

} // namespace gvqa
