#pragma once

// Reference implementations written straight from the definitions, sharing
// no code with the library beyond plain data types. Slow on purpose.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

struct Box {
    double x1, y1, x2, y2;
};

inline double iou(const Box& a, const Box& b) {
    const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    const double inter = (w > 0 && h > 0) ? w * h : 0.0;
    const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
    return uni > 0 ? inter / uni : 0.0;
}

/// Fraction of an n x n grid of cell centres covered by any box.
inline double raster_union(const std::vector<Box>& boxes, int n = 1000) {
    std::size_t hit = 0;
    for (int j = 0; j < n; ++j) {
        const double y = (j + 0.5) / n;
        for (int i = 0; i < n; ++i) {
            const double x = (i + 0.5) / n;
            for (const auto& b : boxes) {
                if (x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2) {
                    ++hit;
                    break;
                }
            }
        }
    }
    return static_cast<double>(hit) / (static_cast<double>(n) * n);
}

inline double raster_iou(const Box& a, const Box& b, int n = 1000) {
    std::size_t inter = 0, uni = 0;
    for (int j = 0; j < n; ++j) {
        const double y = (j + 0.5) / n;
        for (int i = 0; i < n; ++i) {
            const double x = (i + 0.5) / n;
            const bool in_a = x >= a.x1 && x < a.x2 && y >= a.y1 && y < a.y2;
            const bool in_b = x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2;
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

// ------------------------------------------------------------------ AP

struct Det {
    std::string page;
    Box box;
    double score;
    int cls;
};

struct Truth {
    std::string page;
    Box box;
    int cls;
};

/// Greedy one-to-one matching by exhaustive search: among all partial
/// assignments, pick the one whose per-prediction choices (in the given
/// order) are lexicographically best, preferring a match over none, higher
/// IoU, then lower ground-truth index.
inline std::vector<int> exhaustive_match(const std::vector<Box>& preds, const std::vector<Box>& gts, double t) {
    std::vector<int> best;
    bool have = false;
    std::vector<int> cur;
    std::vector<char> used(gts.size(), 0);
    // key per prediction: (matched, iou, -index)
    using Key = std::tuple<int, double, int>;
    std::vector<Key> best_key;
    std::vector<Key> cur_key;
    auto rec = [&](auto&& self, std::size_t k) -> void {
        if (k == preds.size()) {
            if (!have || cur_key > best_key) {
                have = true;
                best = cur;
                best_key = cur_key;
            }
            return;
        }
        for (int g = -1; g < static_cast<int>(gts.size()); ++g) {
            Key key{0, 0.0, 0};
            if (g >= 0) {
                if (used[static_cast<std::size_t>(g)]) continue;
                const double v = iou(preds[k], gts[static_cast<std::size_t>(g)]);
                if (v < t) continue;
                key = {1, v, -g};
                used[static_cast<std::size_t>(g)] = 1;
            }
            cur.push_back(g);
            cur_key.push_back(key);
            self(self, k + 1);
            cur.pop_back();
            cur_key.pop_back();
            if (g >= 0) used[static_cast<std::size_t>(g)] = 0;
        }
    };
    rec(rec, 0);
    return best;
}

/// Detection order: score descending, then class, x1, y1, then page id.
inline bool det_before(const Det& a, const Det& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.cls != b.cls) return a.cls < b.cls;
    if (a.box.x1 != b.box.x1) return a.box.x1 < b.box.x1;
    if (a.box.y1 != b.box.y1) return a.box.y1 < b.box.y1;
    return a.page < b.page;
}

/// AP of one class at one IoU threshold, from the textbook definition:
/// interpolated precision p(r) = max precision over ranks with recall >= r,
/// averaged over the 101 recall points.
inline std::optional<double> ap_at(std::vector<Det> dets, const std::vector<Truth>& truths, int cls, double t) {
    std::erase_if(dets, [&](const Det& d) { return d.cls != cls; });
    std::stable_sort(dets.begin(), dets.end(), det_before);
    std::vector<const Truth*> g;
    for (const auto& tr : truths) {
        if (tr.cls == cls) g.push_back(&tr);
    }
    if (g.empty()) return std::nullopt;
    std::vector<char> used(g.size(), 0);
    std::vector<double> precision, recall;
    double tp = 0;
    for (std::size_t k = 0; k < dets.size(); ++k) {
        int pick = -1;
        double pick_iou = -1;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (used[i] || g[i]->page != dets[k].page) continue;
            const double v = iou(dets[k].box, g[i]->box);
            if (v >= t && v > pick_iou) {
                pick = static_cast<int>(i);
                pick_iou = v;
            }
        }
        if (pick >= 0) {
            used[static_cast<std::size_t>(pick)] = 1;
            tp += 1;
        }
        precision.push_back(tp / static_cast<double>(k + 1));
        recall.push_back(tp / static_cast<double>(g.size()));
    }
    double sum = 0;
    for (int i = 0; i <= 100; ++i) {
        const double r = i * 0.01;
        double p = 0;
        for (std::size_t k = 0; k < precision.size(); ++k) {
            if (recall[k] >= r) p = std::max(p, precision[k]);
        }
        sum += p;
    }
    return sum / 101.0;
}

inline std::optional<double> ap(const std::vector<Det>& dets, const std::vector<Truth>& truths, int cls) {
    double s = 0;
    for (int i = 0; i < 10; ++i) {
        auto v = ap_at(dets, truths, cls, (50.0 + 5.0 * i) / 100.0);
        if (!v) return std::nullopt;
        s += *v;
    }
    return s / 10.0;
}

struct Summary {
    std::array<std::optional<double>, 7> per_class;
    double map = 0;
    double one_class = 0;
};

inline Summary evaluate(const std::vector<Det>& dets, const std::vector<Truth>& truths) {
    Summary s;
    double sum = 0;
    int n = 0;
    for (int c = 0; c < 7; ++c) {
        s.per_class[static_cast<std::size_t>(c)] = ap(dets, truths, c);
        if (s.per_class[static_cast<std::size_t>(c)]) {
            sum += *s.per_class[static_cast<std::size_t>(c)];
            ++n;
        }
    }
    s.map = n ? sum / n : 0.0;
    auto d1 = dets;
    auto t1 = truths;
    for (auto& d : d1) d.cls = 0;
    for (auto& t : t1) t.cls = 0;
    s.one_class = ap(d1, t1, 0).value_or(0.0);
    return s;
}

// ----------------------------------------------------------------- kNN

/// Exhaustive ranking; ties by ascending id. Cosine skips zero rows.
inline std::vector<std::pair<std::size_t, double>> knn(const std::vector<std::vector<double>>& rows,
                                                       const std::vector<double>& q, std::size_t k, bool cosine) {
    std::vector<std::pair<std::size_t, double>> all;
    double qn = 0;
    for (double v : q) qn += v * v;
    qn = std::sqrt(qn);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double dot = 0, rn = 0, d2 = 0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            dot += rows[i][j] * q[j];
            rn += rows[i][j] * rows[i][j];
            d2 += (rows[i][j] - q[j]) * (rows[i][j] - q[j]);
        }
        if (cosine) {
            if (rn == 0) continue;
            all.emplace_back(i, dot / (std::sqrt(rn) * qn));
        } else {
            all.emplace_back(i, -std::sqrt(d2));
        }
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

}  // namespace oracle
