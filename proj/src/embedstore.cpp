#include "pagevis/embedstore.hpp"

namespace pagevis {

std::vector<EmbeddingRecord> load_embedding_records(const std::filesystem::path& root) {
    std::vector<EmbeddingRecord> out;
    for (const auto& p : find_embedding_records(root)) out.push_back(read_embedding_record(p));
    return out;
}

template class BasicEmbeddingStore<double>;
template class BasicEmbeddingStore<float>;

}  // namespace pagevis
