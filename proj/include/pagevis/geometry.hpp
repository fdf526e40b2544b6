#pragma once

#include <span>
#include <stdexcept>
#include <string>

namespace pagevis {

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Axis-aligned rectangle in page-normalized coordinates.
///
/// Origin is the top-left corner of the page; x is divided by page width and
/// y by page height. A NormBox always satisfies 0 <= x1 < x2 <= 1 and
/// 0 <= y1 < y2 <= 1, so every instance has strictly positive area.
class NormBox {
public:
    /// Strict constructor: throws GeometryError unless the invariant holds.
    NormBox(double x1, double y1, double x2, double y2);

    /// Ingest path for upstream data. Swaps reversed corners, clamps to [0,1]
    /// and then validates. `clamped` is set when any coordinate moved.
    static NormBox from_raw(double x1, double y1, double x2, double y2, bool* clamped = nullptr);

    double x1() const noexcept { return x1_; }
    double y1() const noexcept { return y1_; }
    double x2() const noexcept { return x2_; }
    double y2() const noexcept { return y2_; }

    double width() const noexcept { return x2_ - x1_; }
    double height() const noexcept { return y2_ - y1_; }
    double area() const noexcept { return width() * height(); }
    double center_x() const noexcept { return 0.5 * (x1_ + x2_); }
    double center_y() const noexcept { return 0.5 * (y1_ + y2_); }

    friend bool operator==(const NormBox&, const NormBox&) = default;

private:
    double x1_, y1_, x2_, y2_;
};

std::string to_string(const NormBox& box);

double intersection_area(const NormBox& a, const NormBox& b) noexcept;

double iou(const NormBox& a, const NormBox& b) noexcept;

/// Exact area of the union of `boxes`, overlaps counted once.
///
/// Sweeps the distinct x-cuts; within each slab the y-intervals of the boxes
/// spanning it are merged. O(n^2 log n), no rasterization.
double union_area(std::span<const NormBox> boxes);

/// Half-open containment: x1 <= x < x2 and y1 <= y < y2.
bool contains_point(const NormBox& box, double x, double y) noexcept;

}  // namespace pagevis
