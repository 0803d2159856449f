#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "sift/archive.hpp"
#include "sift/embed.hpp"

namespace sift {

struct IndexRecord {
    std::string doc_id;
    Channel channel = Channel::Bytecode;
    std::string library_id;
    std::vector<float> values;
    double norm = 0;
};

struct CatalogRow {
    std::string library_id;
    LibraryMetadata metadata;
    std::vector<std::string> doc_ids;
};

struct QueryHit {
    std::string doc_id;
    std::string library_id;
    double score = 0;
};

struct VectorEntry {
    std::string doc_id;
    Channel channel = Channel::Bytecode;
    DocVector vector;
};

/// Persistent store of per-file vectors plus library metadata, answering
/// exact top-k cosine queries by exhaustive scan. Single writer, any number
/// of concurrent readers.
class ReferenceIndex {
public:
    explicit ReferenceIndex(std::uint32_t dimension) : dimension_(dimension) {}

    std::uint32_t dimension() const { return dimension_; }
    std::size_t vector_count() const { return records_.size(); }
    std::size_t library_count() const { return catalog_.size(); }
    const std::map<std::string, CatalogRow>& catalog() const { return catalog_; }
    const std::vector<IndexRecord>& records() const { return records_; }

    /// All-or-nothing: validates ids and dimensions before touching state.
    void add_library(const std::string& library_id, const LibraryMetadata& metadata,
                     const std::vector<VectorEntry>& entries);

    /// Exactly min(k, channel population) hits, descending score, ties broken
    /// by doc_id. Throws EmptyChannel when no vector of that channel exists.
    std::vector<QueryHit> query_top_k(const DocVector& probe, Channel channel, std::size_t k) const;

    /// Every hit with score strictly above the threshold, same ordering.
    std::vector<QueryHit> query_above(const DocVector& probe, Channel channel, double threshold) const;

    void save(const std::string& dir) const;
    static ReferenceIndex load(const std::string& dir);

private:
    void scan(const DocVector& probe, Channel channel, std::vector<QueryHit>& hits) const;

    std::uint32_t dimension_;
    std::vector<IndexRecord> records_; // insertion order (stable saves)
    std::map<std::string, CatalogRow> catalog_;
    std::unordered_map<std::string, std::size_t> doc_lookup_;
    std::size_t channel_population_[2] = {0, 0};
};

} // namespace sift
