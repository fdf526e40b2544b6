#include "pagevis/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include <fmt/format.h>
#include "json.hpp"

#include "pagevis/log.hpp"
#include "pagevis/rng.hpp"

namespace pagevis {

std::string_view class_name(ClassId c) noexcept {
    switch (c) {
        case ClassId::Photograph: return "Photograph";
        case ClassId::Illustration: return "Illustration";
        case ClassId::Map: return "Map";
        case ClassId::ComicsCartoon: return "Comics/Cartoon";
        case ClassId::EditorialCartoon: return "Editorial Cartoon";
        case ClassId::Headline: return "Headline";
        case ClassId::Advertisement: return "Advertisement";
    }
    return "?";
}

std::string_view class_slug(ClassId c) noexcept {
    switch (c) {
        case ClassId::Photograph: return "photograph";
        case ClassId::Illustration: return "illustration";
        case ClassId::Map: return "map";
        case ClassId::ComicsCartoon: return "comics_cartoon";
        case ClassId::EditorialCartoon: return "editorial_cartoon";
        case ClassId::Headline: return "headline";
        case ClassId::Advertisement: return "advertisement";
    }
    return "unknown";
}

std::optional<ClassId> class_from_code(long long code) noexcept {
    if (code < 0 || code >= kClassCount) return std::nullopt;
    return static_cast<ClassId>(code);
}

std::optional<ClassId> class_from_name(std::string_view name) noexcept {
    for (auto c : kAllClasses) {
        if (class_name(c) == name || class_slug(c) == name) return c;
    }
    return std::nullopt;
}

bool prediction_order(const Prediction& a, const Prediction& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    return std::tuple(code(a.class_id), a.box.x1(), a.box.y1()) < std::tuple(code(b.class_id), b.box.x1(), b.box.y1());
}

void sort_predictions(std::vector<Prediction>& preds) {
    std::stable_sort(preds.begin(), preds.end(), prediction_order);
}

std::uint64_t stable_hash(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

std::vector<Prediction> StubDetector::detect(std::string_view page_id, const cv::Mat&) const {
    SplitMix64 rng(stable_hash(page_id));
    const int count = 1 + static_cast<int>(rng.next() % 8);
    std::vector<Prediction> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const auto cls = static_cast<ClassId>(rng.next() % kClassCount);
        const double x1 = round4(rng.uniform() * 0.7);
        const double y1 = round4(rng.uniform() * 0.7);
        const double x2 = std::min(1.0, round4(x1 + 0.05 + rng.uniform() * (0.95 - x1)));
        const double y2 = std::min(1.0, round4(y1 + 0.05 + rng.uniform() * (0.95 - y1)));
        const double score = std::max(kSaveFloor, round4(kSaveFloor + rng.uniform() * (1.0 - kSaveFloor)));
        out.push_back(Prediction{NormBox(x1, y1, x2, y2), score, cls});
    }
    sort_predictions(out);
    return out;
}

PredictionSet read_predictions(std::istream& in) {
    if (!in) throw std::runtime_error("prediction stream is not readable");
    PredictionSet set;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto reject = [&](std::string msg) {
            log()->warn("predictions line {}: {}", lineno, msg);
            set.rejections.push_back(Diagnostic{lineno, std::move(msg)});
        };
        try {
            const auto j = nlohmann::json::parse(line);
            const auto page_id = j.at("page_id").get<std::string>();
            const auto& boxes = j.at("boxes");
            const auto& scores = j.at("scores");
            const auto& classes = j.at("pred_classes");
            if (!boxes.is_array() || !scores.is_array() || !classes.is_array()) {
                reject("boxes, scores and pred_classes must be arrays");
                continue;
            }
            if (boxes.size() != scores.size() || boxes.size() != classes.size()) {
                reject(fmt::format("list lengths differ: boxes={}, scores={}, pred_classes={}", boxes.size(),
                                   scores.size(), classes.size()));
                continue;
            }
            std::vector<Prediction> preds;
            std::size_t below = 0, clamped_here = 0;
            std::optional<std::string> problem;
            for (std::size_t i = 0; i < boxes.size() && !problem; ++i) {
                if (!classes[i].is_number_integer()) {
                    problem = fmt::format("entry {}: class code is not an integer", i);
                    break;
                }
                const auto cls = class_from_code(classes[i].get<long long>());
                if (!cls) {
                    problem = fmt::format("entry {}: class code {} outside 0-6", i, classes[i].get<long long>());
                    break;
                }
                const double score = scores[i].get<double>();
                if (!(score >= 0.0 && score <= 1.0)) {
                    problem = fmt::format("entry {}: score {} outside [0,1]", i, score);
                    break;
                }
                const auto& b = boxes[i];
                if (!b.is_array() || b.size() != 4) {
                    problem = fmt::format("entry {}: box must have 4 coordinates", i);
                    break;
                }
                bool clamped = false;
                try {
                    auto box = NormBox::from_raw(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                                 b[3].get<double>(), &clamped);
                    if (clamped) ++clamped_here;
                    if (score < kSaveFloor) {
                        ++below;
                        continue;
                    }
                    preds.push_back(Prediction{box, score, *cls});
                } catch (const GeometryError& e) {
                    problem = fmt::format("entry {}: {}", i, e.what());
                }
            }
            if (problem) {
                reject(*problem);
                continue;
            }
            if (clamped_here > 0) log()->info("page {}: clamped {} boxes to [0,1]", page_id, clamped_here);
            set.below_floor += below;
            set.clamped += clamped_here;
            auto& dest = set.by_page[page_id];
            dest.insert(dest.end(), preds.begin(), preds.end());
        } catch (const nlohmann::json::exception& e) {
            reject(fmt::format("malformed record: {}", e.what()));
        }
    }
    if (in.bad()) throw std::runtime_error("I/O error while reading predictions");
    for (auto& [_, preds] : set.by_page) sort_predictions(preds);
    return set;
}

void write_prediction_record(std::ostream& out, std::string_view page_id, std::span<const Prediction> preds) {
    nlohmann::ordered_json j;
    j["page_id"] = page_id;
    auto boxes = nlohmann::ordered_json::array();
    auto scores = nlohmann::ordered_json::array();
    auto classes = nlohmann::ordered_json::array();
    for (const auto& p : preds) {
        boxes.push_back({p.box.x1(), p.box.y1(), p.box.x2(), p.box.y2()});
        scores.push_back(p.score);
        classes.push_back(code(p.class_id));
    }
    j["boxes"] = std::move(boxes);
    j["scores"] = std::move(scores);
    j["pred_classes"] = std::move(classes);
    out << j.dump() << '\n';
}

FileDetector FileDetector::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(fmt::format("cannot open predictions file {}", path));
    return FileDetector(read_predictions(in));
}

std::vector<Prediction> FileDetector::detect(std::string_view page_id, const cv::Mat&) const {
    auto it = set_.by_page.find(std::string(page_id));
    if (it == set_.by_page.end()) {
        throw DetectorError(fmt::format("no predictions available for page {}", page_id));
    }
    return it->second;
}

}  // namespace pagevis
