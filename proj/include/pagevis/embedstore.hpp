#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "pagevis/records.hpp"

namespace pagevis {

enum class EmbeddingFamily { ResNet18, ResNet50 };
enum class Metric { Cosine, Euclidean };

constexpr std::size_t dimension(EmbeddingFamily f) noexcept {
    return f == EmbeddingFamily::ResNet18 ? kResnet18Dim : kResnet50Dim;
}

struct Neighbor {
    std::size_t id = 0;
    std::string filepath;
    double similarity = 0.0;  // larger is more similar; -distance for Euclidean
};

using QueryResult = std::vector<Neighbor>;

class EmbeddingStoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact nearest-neighbour index over crop embeddings.
///
/// Vectors are stored row-wise in one contiguous matrix; ids are row numbers
/// assigned in load order. Norms are computed once at load. Zero vectors are
/// kept (and searchable by Euclidean distance) but never returned by cosine
/// queries. Immutable after load, so concurrent queries are safe.
template <typename Scalar>
class BasicEmbeddingStore {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BasicEmbeddingStore(EmbeddingFamily family, std::span<const EmbeddingRecord> records)
        : family_(family), dim_(dimension(family)) {
        std::size_t rows = 0;
        for (const auto& r : records) rows += vectors_of(r).size();
        Matrix data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim_));
        Eigen::Index row = 0;
        for (const auto& r : records) {
            const auto& vecs = vectors_of(r);
            for (std::size_t i = 0; i < vecs.size(); ++i) {
                const auto path = i < r.visual_content_filepaths.size() ? r.visual_content_filepaths[i] : std::string();
                if (vecs[i].size() != dim_) {
                    rejections_.push_back(fmt::format("{} [{}]: {}-dimensional vector, expected {}", r.filepath, i,
                                                      vecs[i].size(), dim_));
                    continue;
                }
                for (std::size_t d = 0; d < dim_; ++d) data(row, static_cast<Eigen::Index>(d)) = static_cast<Scalar>(vecs[i][d]);
                filepaths_.push_back(path);
                ++row;
            }
        }
        data_ = data.topRows(row);
        norms_ = data_.rowwise().norm();
        for (Eigen::Index i = 0; i < norms_.size(); ++i) {
            if (norms_(i) == Scalar(0)) zero_ids_.push_back(static_cast<std::size_t>(i));
        }
    }

    EmbeddingFamily family() const noexcept { return family_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return filepaths_.size(); }
    const std::string& filepath(std::size_t id) const { return filepaths_.at(id); }
    const std::vector<std::string>& rejections() const noexcept { return rejections_; }
    const std::vector<std::size_t>& zero_vectors() const noexcept { return zero_ids_; }
    auto vector(std::size_t id) const { return data_.row(static_cast<Eigen::Index>(id)); }

    /// First id whose filepath equals `path`, or ends with "/" + `path`.
    std::optional<std::size_t> find(const std::string& path) const {
        for (std::size_t i = 0; i < filepaths_.size(); ++i) {
            const auto& f = filepaths_[i];
            if (f == path || (f.size() > path.size() && f.ends_with(path) && f[f.size() - path.size() - 1] == '/')) return i;
        }
        return std::nullopt;
    }

    /// Exact top-k; ties broken by ascending id. k larger than the store
    /// returns the full ranking.
    QueryResult query(const Eigen::Ref<const Vector>& q, std::size_t k, Metric metric) const {
        if (k < 1) throw EmbeddingStoreError("k must be at least 1");
        if (static_cast<std::size_t>(q.size()) != dim_) {
            throw EmbeddingStoreError(fmt::format("query has {} dimensions, store has {}", q.size(), dim_));
        }
        if (size() == 0) return {};

        Vector sims;
        if (metric == Metric::Cosine) {
            const Scalar qn = q.norm();
            if (qn == Scalar(0)) throw EmbeddingStoreError("cosine similarity is undefined for a zero query vector");
            sims = (data_ * q).cwiseQuotient(norms_ * qn);
        } else {
            sims = -(data_.rowwise() - q.transpose()).rowwise().norm();
        }

        std::vector<std::size_t> ids;
        ids.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) {
            if (metric == Metric::Cosine && norms_(static_cast<Eigen::Index>(i)) == Scalar(0)) continue;
            ids.push_back(i);
        }
        const auto better = [&](std::size_t a, std::size_t b) {
            const auto sa = sims(static_cast<Eigen::Index>(a)), sb = sims(static_cast<Eigen::Index>(b));
            return sa != sb ? sa > sb : a < b;
        };
        const auto n = std::min(k, ids.size());
        std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), better);

        QueryResult out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back({ids[i], filepaths_[ids[i]], static_cast<double>(sims(static_cast<Eigen::Index>(ids[i])))});
        }
        return out;
    }

    QueryResult query(std::span<const double> q, std::size_t k, Metric metric) const {
        Vector v(static_cast<Eigen::Index>(q.size()));
        for (std::size_t i = 0; i < q.size(); ++i) v(static_cast<Eigen::Index>(i)) = static_cast<Scalar>(q[i]);
        return query(v, k, metric);
    }

private:
    const std::vector<std::vector<double>>& vectors_of(const EmbeddingRecord& r) const {
        return family_ == EmbeddingFamily::ResNet18 ? r.resnet_18_embeddings : r.resnet_50_embeddings;
    }

    EmbeddingFamily family_;
    std::size_t dim_;
    Matrix data_;
    Vector norms_;
    std::vector<std::string> filepaths_;
    std::vector<std::string> rejections_;
    std::vector<std::size_t> zero_ids_;
};

using EmbeddingStore = BasicEmbeddingStore<double>;

/// Reads every `*_embeddings.json` below `root` in sorted path order.
std::vector<EmbeddingRecord> load_embedding_records(const std::filesystem::path& root);

}  // namespace pagevis
