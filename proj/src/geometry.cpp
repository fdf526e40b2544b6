#include "pagevis/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace pagevis {

NormBox::NormBox(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
    const bool finite = std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
    if (!finite || x1 < 0.0 || y1 < 0.0 || x2 > 1.0 || y2 > 1.0 || !(x1 < x2) || !(y1 < y2)) {
        throw GeometryError(fmt::format("invalid normalized box [{}, {}, {}, {}]", x1, y1, x2, y2));
    }
}

NormBox NormBox::from_raw(double x1, double y1, double x2, double y2, bool* clamped) {
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);
    bool moved = false;
    auto clamp01 = [&moved](double v) {
        const double c = std::clamp(v, 0.0, 1.0);
        if (c != v) moved = true;
        return c;
    };
    x1 = clamp01(x1);
    y1 = clamp01(y1);
    x2 = clamp01(x2);
    y2 = clamp01(y2);
    if (clamped) *clamped = moved;
    return NormBox(x1, y1, x2, y2);
}

std::string to_string(const NormBox& box) {
    return fmt::format("[{}, {}, {}, {}]", box.x1(), box.y1(), box.x2(), box.y2());
}

double intersection_area(const NormBox& a, const NormBox& b) noexcept {
    const double w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
    const double h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

double iou(const NormBox& a, const NormBox& b) noexcept {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    return inter / (a.area() + b.area() - inter);
}

double union_area(std::span<const NormBox> boxes) {
    if (boxes.empty()) return 0.0;

    std::vector<double> xs;
    xs.reserve(boxes.size() * 2);
    for (const auto& b : boxes) {
        xs.push_back(b.x1());
        xs.push_back(b.x2());
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

    std::vector<std::pair<double, double>> spans;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double left = xs[i];
        const double right = xs[i + 1];
        spans.clear();
        for (const auto& b : boxes) {
            if (b.x1() <= left && b.x2() >= right) spans.emplace_back(b.y1(), b.y2());
        }
        if (spans.empty()) continue;
        std::sort(spans.begin(), spans.end());
        double covered = 0.0;
        double lo = spans.front().first;
        double hi = spans.front().second;
        for (const auto& [s, e] : spans) {
            if (s > hi) {
                covered += hi - lo;
                lo = s;
                hi = e;
            } else {
                hi = std::max(hi, e);
            }
        }
        covered += hi - lo;
        total += covered * (right - left);
    }
    return std::min(total, 1.0);
}

bool contains_point(const NormBox& box, double x, double y) noexcept {
    return box.x1() <= x && x < box.x2() && box.y1() <= y && y < box.y2();
}

}  // namespace pagevis
