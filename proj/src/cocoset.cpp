#include "pagevis/cocoset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "pagevis/log.hpp"
#include "pagevis/rng.hpp"

namespace pagevis {
using nlohmann::json;
using nlohmann::ordered_json;

std::vector<CocoCategory> CocoDataset::standard_categories() {
    std::vector<CocoCategory> cats;
    for (auto c : kAllClasses) cats.push_back({coco_category_id(c), std::string(class_name(c))});
    return cats;
}

std::optional<ClassId> class_from_coco_category(int category_id) noexcept {
    return class_from_code(static_cast<long long>(category_id) - 1);
}

nlohmann::ordered_json to_json(const CocoDataset& d) {
    ordered_json j;
    auto images = ordered_json::array();
    for (const auto& im : d.images) {
        images.push_back({{"id", im.id}, {"file_name", im.file_name}, {"width", im.width}, {"height", im.height}});
    }
    auto anns = ordered_json::array();
    for (const auto& a : d.annotations) {
        anns.push_back({{"id", a.id},
                        {"image_id", a.image_id},
                        {"category_id", a.category_id},
                        {"bbox", a.bbox},
                        {"area", a.area},
                        {"iscrowd", a.iscrowd}});
    }
    auto cats = ordered_json::array();
    for (const auto& c : d.categories) cats.push_back({{"id", c.id}, {"name", c.name}});
    j["images"] = std::move(images);
    j["annotations"] = std::move(anns);
    j["categories"] = std::move(cats);
    return j;
}

void validate(const CocoDataset& d) {
    if (d.categories != CocoDataset::standard_categories()) throw CocoError("dataset must carry exactly the 7 standard categories");
    std::unordered_set<std::int64_t> image_ids;
    for (const auto& im : d.images) {
        if (!image_ids.insert(im.id).second) throw CocoError(fmt::format("duplicate image id {}", im.id));
        if (im.width <= 0 || im.height <= 0) throw CocoError(fmt::format("image {} has non-positive size", im.id));
    }
    std::unordered_set<std::int64_t> ann_ids;
    for (const auto& a : d.annotations) {
        if (!ann_ids.insert(a.id).second) throw CocoError(fmt::format("duplicate annotation id {}", a.id));
        if (!image_ids.contains(a.image_id)) {
            throw CocoError(fmt::format("annotation {} references missing image {}", a.id, a.image_id));
        }
        if (!class_from_coco_category(a.category_id)) {
            throw CocoError(fmt::format("annotation {} has category {}", a.id, a.category_id));
        }
        if (!(a.bbox[2] > 0.0 && a.bbox[3] > 0.0)) throw CocoError(fmt::format("annotation {} has an empty box", a.id));
    }
}

CocoDataset coco_from_json(const json& j) {
    try {
        CocoDataset d;
        std::unordered_map<std::int64_t, int> remap;
        for (const auto& c : j.at("categories")) {
            const auto name = c.at("name").get<std::string>();
            auto cls = class_from_name(name);
            if (!cls && name == "Comic/Cartoon") cls = ClassId::ComicsCartoon;
            if (!cls) throw CocoError(fmt::format("unknown category '{}'", name));
            remap[c.at("id").get<std::int64_t>()] = coco_category_id(*cls);
        }
        for (const auto& im : j.at("images")) {
            d.images.push_back({im.at("id").get<std::int64_t>(), im.at("file_name").get<std::string>(),
                                im.at("width").get<int>(), im.at("height").get<int>()});
        }
        for (const auto& a : j.at("annotations")) {
            CocoAnnotation ann;
            ann.id = a.at("id").get<std::int64_t>();
            ann.image_id = a.at("image_id").get<std::int64_t>();
            const auto raw_cat = a.at("category_id").get<std::int64_t>();
            auto it = remap.find(raw_cat);
            if (it == remap.end()) throw CocoError(fmt::format("annotation {} uses undeclared category {}", ann.id, raw_cat));
            ann.category_id = it->second;
            ann.bbox = a.at("bbox").get<std::array<double, 4>>();
            ann.area = a.contains("area") ? a.at("area").get<double>() : ann.bbox[2] * ann.bbox[3];
            ann.iscrowd = a.value("iscrowd", 0);
            d.annotations.push_back(ann);
        }
        validate(d);
        return d;
    } catch (const json::exception& e) {
        throw CocoError(fmt::format("malformed COCO JSON: {}", e.what()));
    }
}

CocoDataset read_coco(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CocoError(fmt::format("cannot open {}", path.string()));
    try {
        return coco_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw CocoError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::array<std::size_t, kClassCount> count_by_class(const CocoDataset& d) {
    std::array<std::size_t, kClassCount> counts{};
    for (const auto& a : d.annotations) {
        if (auto c = class_from_coco_category(a.category_id)) ++counts[code(*c)];
    }
    return counts;
}

ExportMapping ExportMapping::defaults() {
    ExportMapping m;
    for (auto c : kAllClasses) m.labels.emplace(std::string(class_name(c)), c);
    m.labels.emplace("Comic/Cartoon", ClassId::ComicsCartoon);
    return m;
}

ExportMapping ExportMapping::from_json(const json& j) {
    ExportMapping m;
    try {
        m.version = j.at("version").get<int>();
        if (m.version != 1) throw CocoError(fmt::format("unsupported export mapping version {}", m.version));
        m.records = j.value("records", m.records);
        m.image = j.value("image", m.image);
        if (j.contains("region")) {
            const auto& r = j.at("region");
            m.x = r.value("x", m.x);
            m.y = r.value("y", m.y);
            m.width = r.value("width", m.width);
            m.height = r.value("height", m.height);
        }
        m.normalized = j.value("units", std::string("pixels")) == "normalized";
        m.category = j.value("category", m.category);
        for (const auto& [label, target] : j.at("labels").items()) {
            auto cls = class_from_name(target.get<std::string>());
            if (!cls) throw CocoError(fmt::format("label '{}' maps to unknown class '{}'", label, target.get<std::string>()));
            m.labels.emplace(label, *cls);
        }
    } catch (const json::exception& e) {
        throw CocoError(fmt::format("malformed export mapping: {}", e.what()));
    }
    return m;
}

namespace {

const json* lookup(const json& j, const std::string& dotted) {
    const json* cur = &j;
    std::size_t pos = 0;
    while (pos <= dotted.size() && !dotted.empty()) {
        const auto dot = dotted.find('.', pos);
        const auto key = dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (!cur->is_object()) return nullptr;
        auto it = cur->find(key);
        if (it == cur->end()) return nullptr;
        cur = &*it;
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return cur;
}

std::optional<double> number_at(const json& rec, const std::string& path) {
    const auto* v = lookup(rec, path);
    if (!v) return std::nullopt;
    if (v->is_number()) return v->get<double>();
    if (v->is_string()) {
        try {
            return std::stod(v->get<std::string>());
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace

ConvertResult convert(const json& raw, const ExportMapping& mapping, const ImageDims& dims) {
    const json* records = mapping.records.empty() ? &raw : lookup(raw, mapping.records);
    if (!records || !records->is_array()) {
        throw CocoError(fmt::format("export has no record array at '{}'", mapping.records));
    }

    struct Region {
        std::string image;
        ClassId cls;
        double x, y, w, h;
    };
    ConvertResult out;
    std::vector<Region> regions;
    std::set<std::string> image_keys;
    std::size_t index = 0;
    for (const auto& rec : *records) {
        ++out.input_regions;
        const auto where = fmt::format("region {}", index++);
        const auto* image = lookup(rec, mapping.image);
        const auto* label = lookup(rec, mapping.category);
        if (!image || !image->is_string() || !label || !label->is_string()) {
            out.rejections.push_back(fmt::format("{}: missing image or category field", where));
            continue;
        }
        auto lit = mapping.labels.find(label->get<std::string>());
        if (lit == mapping.labels.end()) {
            out.rejections.push_back(fmt::format("{}: unknown category '{}'", where, label->get<std::string>()));
            continue;
        }
        const auto key = image->get<std::string>();
        auto dit = dims.find(key);
        if (dit == dims.end()) {
            out.rejections.push_back(fmt::format("{}: no dimensions known for image {}", where, key));
            continue;
        }
        auto x = number_at(rec, mapping.x), y = number_at(rec, mapping.y);
        auto w = number_at(rec, mapping.width), h = number_at(rec, mapping.height);
        if (!x || !y || !w || !h) {
            out.rejections.push_back(fmt::format("{}: missing region coordinates", where));
            continue;
        }
        const auto [iw, ih] = dit->second;
        double x1 = *x, y1 = *y, x2 = *x + *w, y2 = *y + *h;
        if (mapping.normalized) {
            x1 *= iw;
            x2 *= iw;
            y1 *= ih;
            y2 *= ih;
        }
        if (x1 > x2) std::swap(x1, x2);
        if (y1 > y2) std::swap(y1, y2);
        const double cx1 = std::clamp(x1, 0.0, double(iw)), cx2 = std::clamp(x2, 0.0, double(iw));
        const double cy1 = std::clamp(y1, 0.0, double(ih)), cy2 = std::clamp(y2, 0.0, double(ih));
        if (!(cx2 > cx1 && cy2 > cy1)) {
            out.rejections.push_back(fmt::format("{}: box is empty after clamping", where));
            continue;
        }
        if (cx1 != x1 || cx2 != x2 || cy1 != y1 || cy2 != y2) {
            out.warnings.push_back(fmt::format("{}: box clamped to the {}x{} image", where, iw, ih));
        }
        image_keys.insert(key);
        regions.push_back({key, lit->second, cx1, cy1, cx2 - cx1, cy2 - cy1});
    }

    std::map<std::string, std::int64_t> image_id;
    for (const auto& key : image_keys) {
        const auto id = static_cast<std::int64_t>(out.dataset.images.size()) + 1;
        image_id[key] = id;
        const auto [w, h] = dims.at(key);
        out.dataset.images.push_back({id, key, w, h});
    }
    for (const auto& r : regions) {
        CocoAnnotation a;
        a.id = static_cast<std::int64_t>(out.dataset.annotations.size()) + 1;
        a.image_id = image_id.at(r.image);
        a.category_id = coco_category_id(r.cls);
        a.bbox = {r.x, r.y, r.w, r.h};
        a.area = r.w * r.h;
        out.dataset.annotations.push_back(a);
        ++out.counts[code(r.cls)];
    }
    for (const auto& w : out.warnings) log()->warn("{}", w);
    for (const auto& r : out.rejections) log()->warn("rejected {}", r);
    return out;
}

CocoSplit split(const CocoDataset& d, double val_fraction, std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw CocoError("val_fraction must lie strictly between 0 and 1");
    if (d.images.size() < 2) throw CocoError("cannot split a dataset with fewer than 2 images");

    std::vector<std::int64_t> ids;
    ids.reserve(d.images.size());
    for (const auto& im : d.images) ids.push_back(im.id);
    std::sort(ids.begin(), ids.end());
    SplitMix64 rng(seed);
    for (std::size_t i = ids.size() - 1; i > 0; --i) std::swap(ids[i], ids[rng.below(i + 1)]);

    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(ids.size())));
    const std::unordered_set<std::int64_t> val_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));

    CocoSplit s;
    s.train.categories = d.categories;
    s.val.categories = d.categories;
    for (const auto& im : d.images) (val_ids.contains(im.id) ? s.val : s.train).images.push_back(im);
    for (const auto& a : d.annotations) (val_ids.contains(a.image_id) ? s.val : s.train).annotations.push_back(a);
    return s;
}

}  // namespace pagevis
