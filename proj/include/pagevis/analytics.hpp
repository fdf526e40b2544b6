#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "pagevis/records.hpp"

namespace pagevis {

/// Corpus statistics at a fixed list of score thresholds.
///
/// Built incrementally with add(); partial reports over disjoint record
/// shards combine with merge() and the result does not depend on order.
class StatsReport {
public:
    /// `thresholds` must be ascending and within [0,1].
    explicit StatsReport(std::vector<double> thresholds = {0.5, 0.7, 0.9});

    void add(const PageRecord& record);
    void merge(const StatsReport& other);

    const std::vector<double>& thresholds() const noexcept { return thresholds_; }

    /// Predictions with score >= thresholds()[t] of class `c`.
    std::size_t count(ClassId c, std::size_t t) const;
    std::size_t total(std::size_t t) const;

    const std::map<int, std::size_t>& pages_per_year() const noexcept { return pages_per_year_; }
    std::size_t skipped_records() const noexcept { return skipped_; }

    double yearly_avg_per_page(int year, ClassId c, std::size_t t) const;
    /// Mean over the year's pages of the union area of class `c` boxes.
    double yearly_coverage(int year, ClassId c, std::size_t t) const;

    /// year,class_id,class_name,threshold,pages,count,avg_per_page,coverage
    std::string to_csv() const;
    nlohmann::ordered_json to_json() const;

private:
    struct Cell {
        std::size_t count = 0;
        double coverage_sum = 0.0;
    };
    using Key = std::tuple<int, int, std::size_t>;  // year, class code, threshold index

    std::vector<double> thresholds_;
    std::vector<std::array<std::size_t, kClassCount>> counts_;  // [threshold][class]
    std::map<Key, Cell> cells_;
    std::map<int, std::size_t> pages_per_year_;
    std::size_t skipped_ = 0;
};

/// Year of a "YYYY-MM-DD" date; std::nullopt unless the date is valid.
std::optional<int> year_of(const std::string& pub_date);

struct SubsetFilter {
    std::string start_date;  // inclusive, YYYY-MM-DD
    std::string end_date;    // inclusive
    std::set<ClassId> classes;
    double min_score = 0.5;

    /// Throws std::invalid_argument unless start <= end (both valid dates)
    /// and kSaveFloor <= min_score <= 1.
    static SubsetFilter make(std::string start, std::string end, std::set<ClassId> classes, double min_score);

    bool accepts(const std::string& pub_date, ClassId c, double score) const;

private:
    SubsetFilter() = default;
};

struct SubsetReport {
    std::size_t exported = 0;
    std::size_t copied_crops = 0;
    std::vector<std::string> gaps;  // crops listed in records but missing on disk
};

/// Writes `dest/index.csv` (one row per accepted prediction), copies crops
/// under `dest/crops/`, and lists copied crop paths in `dest/manifest.txt`.
/// Missing crop files go to `dest/gaps.txt` and do not stop the export.
SubsetReport export_subset(const std::vector<PageRecord>& records, const std::filesystem::path& crops_root,
                           const SubsetFilter& filter, const std::filesystem::path& dest);

}  // namespace pagevis
