#include "pagevis/analytics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "pagevis/log.hpp"
#include "pagevis/pipeline.hpp"

namespace pagevis {
namespace fs = std::filesystem;

std::optional<int> year_of(const std::string& pub_date) {
    try {
        if (parse_pub_date(pub_date) != pub_date) return std::nullopt;
    } catch (const MetadataError&) {
        return std::nullopt;
    }
    return std::stoi(pub_date.substr(0, 4));
}

StatsReport::StatsReport(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {
    if (!std::is_sorted(thresholds_.begin(), thresholds_.end())) throw std::invalid_argument("thresholds must be ascending");
    for (double t : thresholds_) {
        if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("thresholds must lie in [0,1]");
    }
    counts_.assign(thresholds_.size(), {});
}

void StatsReport::add(const PageRecord& record) {
    const auto year = year_of(record.pub_date);
    if (!year) {
        ++skipped_;
        log()->warn("{}: unparseable pub_date '{}', record skipped", record.filepath, record.pub_date);
        return;
    }
    ++pages_per_year_[*year];
    std::vector<NormBox> boxes;
    for (std::size_t t = 0; t < thresholds_.size(); ++t) {
        for (auto c : kAllClasses) {
            boxes.clear();
            for (std::size_t i = 0; i < record.size(); ++i) {
                if (record.pred_classes[i] == c && record.scores[i] >= thresholds_[t]) boxes.push_back(record.boxes[i]);
            }
            if (boxes.empty()) continue;
            counts_[t][code(c)] += boxes.size();
            auto& cell = cells_[{*year, code(c), t}];
            cell.count += boxes.size();
            cell.coverage_sum += union_area(boxes);
        }
    }
}

void StatsReport::merge(const StatsReport& other) {
    if (other.thresholds_ != thresholds_) throw std::invalid_argument("cannot merge reports with different thresholds");
    for (std::size_t t = 0; t < thresholds_.size(); ++t) {
        for (int c = 0; c < kClassCount; ++c) counts_[t][c] += other.counts_[t][c];
    }
    for (const auto& [k, v] : other.cells_) {
        auto& cell = cells_[k];
        cell.count += v.count;
        cell.coverage_sum += v.coverage_sum;
    }
    for (const auto& [y, n] : other.pages_per_year_) pages_per_year_[y] += n;
    skipped_ += other.skipped_;
}

std::size_t StatsReport::count(ClassId c, std::size_t t) const { return counts_.at(t)[code(c)]; }

std::size_t StatsReport::total(std::size_t t) const {
    const auto& row = counts_.at(t);
    return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

double StatsReport::yearly_avg_per_page(int year, ClassId c, std::size_t t) const {
    auto py = pages_per_year_.find(year);
    if (py == pages_per_year_.end() || py->second == 0) return 0.0;
    auto it = cells_.find({year, code(c), t});
    return it == cells_.end() ? 0.0 : static_cast<double>(it->second.count) / static_cast<double>(py->second);
}

double StatsReport::yearly_coverage(int year, ClassId c, std::size_t t) const {
    auto py = pages_per_year_.find(year);
    if (py == pages_per_year_.end() || py->second == 0) return 0.0;
    auto it = cells_.find({year, code(c), t});
    return it == cells_.end() ? 0.0 : std::clamp(it->second.coverage_sum / static_cast<double>(py->second), 0.0, 1.0);
}

std::string StatsReport::to_csv() const {
    std::string out = "year,class_id,class_name,threshold,pages,count,avg_per_page,coverage\n";
    for (const auto& [year, pages] : pages_per_year_) {
        for (auto c : kAllClasses) {
            for (std::size_t t = 0; t < thresholds_.size(); ++t) {
                auto it = cells_.find({year, code(c), t});
                const std::size_t n = it == cells_.end() ? 0 : it->second.count;
                out += fmt::format("{},{},{},{},{},{},{:.6f},{:.6f}\n", year, code(c), class_name(c), thresholds_[t],
                                   pages, n, yearly_avg_per_page(year, c, t), yearly_coverage(year, c, t));
            }
        }
    }
    return out;
}

nlohmann::ordered_json StatsReport::to_json() const {
    nlohmann::ordered_json j;
    j["thresholds"] = thresholds_;
    auto totals = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < thresholds_.size(); ++t) {
        nlohmann::ordered_json row;
        row["threshold"] = thresholds_[t];
        nlohmann::ordered_json per;
        for (auto c : kAllClasses) per[std::string(class_name(c))] = count(c, t);
        row["counts"] = std::move(per);
        row["total"] = total(t);
        totals.push_back(std::move(row));
    }
    j["counts"] = std::move(totals);
    nlohmann::ordered_json years = nlohmann::ordered_json::object();
    for (const auto& [year, pages] : pages_per_year_) {
        nlohmann::ordered_json y;
        y["pages"] = pages;
        for (auto c : kAllClasses) {
            nlohmann::ordered_json cls;
            auto avg = nlohmann::ordered_json::array();
            auto cov = nlohmann::ordered_json::array();
            for (std::size_t t = 0; t < thresholds_.size(); ++t) {
                avg.push_back(yearly_avg_per_page(year, c, t));
                cov.push_back(yearly_coverage(year, c, t));
            }
            cls["avg_per_page"] = std::move(avg);
            cls["coverage"] = std::move(cov);
            y[std::string(class_name(c))] = std::move(cls);
        }
        years[std::to_string(year)] = std::move(y);
    }
    j["years"] = std::move(years);
    j["skipped_records"] = skipped_;
    return j;
}

SubsetFilter SubsetFilter::make(std::string start, std::string end, std::set<ClassId> classes, double min_score) {
    if (!year_of(start) || !year_of(end)) throw std::invalid_argument("date range bounds must be valid YYYY-MM-DD dates");
    if (start > end) throw std::invalid_argument("date range start must not be after its end");
    if (!(min_score >= kSaveFloor && min_score <= 1.0)) {
        throw std::invalid_argument(fmt::format("min_score must lie in [{}, 1]", kSaveFloor));
    }
    SubsetFilter f;
    f.start_date = std::move(start);
    f.end_date = std::move(end);
    f.classes = std::move(classes);
    f.min_score = min_score;
    return f;
}

bool SubsetFilter::accepts(const std::string& pub_date, ClassId c, double score) const {
    // ISO dates order lexicographically
    return pub_date >= start_date && pub_date <= end_date && (classes.empty() || classes.contains(c)) &&
           score >= min_score;
}

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

}  // namespace

SubsetReport export_subset(const std::vector<PageRecord>& records, const fs::path& crops_root,
                           const SubsetFilter& filter, const fs::path& dest) {
    fs::create_directories(dest);
    SubsetReport report;
    std::string index = "filepath,pub_date,class_id,class_name,score,x1,y1,x2,y2,crop,ocr\n";
    std::string manifest;
    std::string gaps;

    for (const auto& r : records) {
        std::size_t crop_idx = 0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const auto cls = r.pred_classes[i];
            std::optional<std::string> crop_path;
            if (cls != ClassId::Headline) {
                if (crop_idx < r.visual_content_filepaths.size()) crop_path = r.visual_content_filepaths[crop_idx];
                ++crop_idx;
            }
            if (!filter.accepts(r.pub_date, cls, r.scores[i])) continue;
            ++report.exported;

            std::string exported_crop;
            if (crop_path) {
                const auto src = crops_root / *crop_path;
                const auto rel = fs::path("crops") / *crop_path;
                std::error_code ec;
                if (fs::is_regular_file(src)) {
                    fs::create_directories((dest / rel).parent_path());
                    fs::copy_file(src, dest / rel, fs::copy_options::overwrite_existing, ec);
                }
                if (!fs::is_regular_file(src) || ec) {
                    report.gaps.push_back(*crop_path);
                    gaps += *crop_path + '\n';
                } else {
                    ++report.copied_crops;
                    exported_crop = rel.generic_string();
                    manifest += exported_crop + '\n';
                }
            }
            const auto& b = r.boxes[i];
            index += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.filepath), r.pub_date, code(cls),
                                 csv_field(class_name(cls)), r.scores[i], b.x1(), b.y1(), b.x2(), b.y2(),
                                 csv_field(exported_crop), csv_field(join_words(r.ocr[i])));
        }
    }
    write_file_atomic(dest / "index.csv", index);
    write_file_atomic(dest / "manifest.txt", manifest);
    write_file_atomic(dest / "gaps.txt", gaps);
    for (const auto& g : report.gaps) log()->warn("subset export: crop {} is missing", g);
    return report;
}

}  // namespace pagevis
