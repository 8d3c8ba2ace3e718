#include "gvqa/box.hpp"

#include <algorithm>

#include "gvqa/error.hpp"

namespace gvqa {

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    return iw * ih;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    require(a.valid() && b.valid(), "iou: degenerate box");
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

double generalized_iou(const BoundingBox& a, const BoundingBox& b) {
    require(a.valid() && b.valid(), "generalized_iou: degenerate box");
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    const BoundingBox hull{std::min(a.x1, b.x1), std::min(a.y1, b.y1),
                           std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
    const double hull_area = hull.area();
    return inter / uni - (hull_area - uni) / hull_area;
}

} // namespace gvqa
