#include "sift/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <zlib.h>

namespace sift {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kIndexFormatVersion = 1;

double cosine_to_record(const DocVector& probe, const IndexRecord& rec) {
    double dot = 0;
    for (std::size_t i = 0; i < rec.values.size(); ++i)
        dot += double(probe.values[i]) * rec.values[i];
    return std::clamp(dot / (probe.norm * rec.norm), -1.0, 1.0);
}

std::string crc_hex(std::span<const std::uint8_t> data) {
    uLong crc = crc32(0L, data.data(), static_cast<uInt>(data.size()));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

} // namespace

void ReferenceIndex::add_library(const std::string& library_id, const LibraryMetadata& metadata,
                                 const std::vector<VectorEntry>& entries) {
    if (catalog_.contains(library_id))
        throw Error(ErrorCode::DuplicateLibrary, library_id);
    for (const auto& e : entries) {
        if (e.vector.dimension() != dimension_)
            throw Error(ErrorCode::DimensionMismatch,
                        e.doc_id + ": dimension " + std::to_string(e.vector.dimension()) +
                            ", index expects " + std::to_string(dimension_));
        if (doc_lookup_.contains(e.doc_id))
            throw Error(ErrorCode::DuplicateLibrary, "doc_id already indexed: " + e.doc_id);
    }

    CatalogRow row;
    row.library_id = library_id;
    row.metadata = metadata;
    for (const auto& e : entries) {
        IndexRecord rec;
        rec.doc_id = e.doc_id;
        rec.channel = e.channel;
        rec.library_id = library_id;
        rec.values = e.vector.values;
        rec.norm = e.vector.norm;
        doc_lookup_.emplace(rec.doc_id, records_.size());
        ++channel_population_[static_cast<int>(e.channel)];
        row.doc_ids.push_back(rec.doc_id);
        records_.push_back(std::move(rec));
    }
    catalog_.emplace(library_id, std::move(row));
}

void ReferenceIndex::scan(const DocVector& probe, Channel channel, std::vector<QueryHit>& hits) const {
    if (probe.dimension() != dimension_)
        throw Error(ErrorCode::DimensionMismatch, "probe dimension " + std::to_string(probe.dimension()));
    if (probe.norm <= 0) throw Error(ErrorCode::ZeroVector, "zero probe vector");
    if (channel_population_[static_cast<int>(channel)] == 0)
        throw Error(ErrorCode::EmptyChannel, std::string("no vectors for channel ") + channel_name(channel));
    for (const auto& rec : records_) {
        if (rec.channel != channel) continue;
        hits.push_back({rec.doc_id, rec.library_id, cosine_to_record(probe, rec)});
    }
    std::sort(hits.begin(), hits.end(), [](const QueryHit& a, const QueryHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
}

std::vector<QueryHit> ReferenceIndex::query_top_k(const DocVector& probe, Channel channel,
                                                  std::size_t k) const {
    if (k == 0) throw Error(ErrorCode::EmptyChannel, "k must be >= 1");
    std::vector<QueryHit> hits;
    scan(probe, channel, hits);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<QueryHit> ReferenceIndex::query_above(const DocVector& probe, Channel channel,
                                                  double threshold) const {
    std::vector<QueryHit> hits;
    scan(probe, channel, hits);
    auto cut = std::find_if(hits.begin(), hits.end(),
                            [&](const QueryHit& h) { return h.score <= threshold; });
    hits.erase(cut, hits.end());
    return hits;
}

void ReferenceIndex::save(const std::string& dir) const {
    fs::create_directories(dir);

    std::ofstream catalog(fs::path(dir) / "catalog.tsv", std::ios::trunc);
    if (!catalog) throw Error(ErrorCode::IoError, "cannot write catalog.tsv in " + dir);
    for (const auto& [id, row] : catalog_) {
        catalog << id << '\t' << row.metadata.name << '\t' << row.metadata.version << '\t'
                << row.metadata.category << '\t' << row.doc_ids.size() << '\n';
    }
    catalog.close();

    ByteWriter out;
    out.str("XLDB");
    out.u32le(kIndexFormatVersion);
    out.u32le(dimension_);
    out.u64le(records_.size());
    for (const auto& rec : records_) {
        out.u16le(static_cast<std::uint16_t>(rec.doc_id.size()));
        out.str(rec.doc_id);
        out.u8(static_cast<std::uint8_t>(rec.channel));
        out.u16le(static_cast<std::uint16_t>(rec.library_id.size()));
        out.str(rec.library_id);
        for (float v : rec.values) out.f32le(v);
    }
    write_file((fs::path(dir) / "vectors.bin").string(), out.bytes());

    std::ofstream checksum(fs::path(dir) / "checksum", std::ios::trunc);
    checksum << crc_hex(out.bytes()) << '\n';
}

ReferenceIndex ReferenceIndex::load(const std::string& dir) {
    Bytes raw = read_file((fs::path(dir) / "vectors.bin").string());

    std::ifstream checksum_file(fs::path(dir) / "checksum");
    if (!checksum_file) throw Error(ErrorCode::CorruptIndex, "missing checksum file in " + dir);
    std::string expected;
    checksum_file >> expected;
    if (expected != crc_hex(raw))
        throw Error(ErrorCode::CorruptIndex, "vectors.bin checksum mismatch in " + dir);

    ByteReader in(raw);
    if (in.str(4) != "XLDB") throw Error(ErrorCode::CorruptIndex, "bad vectors.bin magic");
    std::uint32_t version = in.u32le();
    if (version != kIndexFormatVersion)
        throw Error(ErrorCode::VersionMismatch, "index format version " + std::to_string(version));
    std::uint32_t dimension = in.u32le();
    std::uint64_t count = in.u64le();

    ReferenceIndex index(dimension);

    // catalog.tsv: library_id, name, version, category, doc_count
    std::ifstream catalog(fs::path(dir) / "catalog.tsv");
    if (!catalog) throw Error(ErrorCode::CorruptIndex, "missing catalog.tsv in " + dir);
    std::unordered_map<std::string, std::size_t> declared_counts;
    std::string line;
    while (std::getline(catalog, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 5) throw Error(ErrorCode::CorruptIndex, "malformed catalog row");
        CatalogRow row;
        row.library_id = fields[0];
        row.metadata.name = fields[1];
        row.metadata.version = fields[2];
        row.metadata.category = fields[3];
        declared_counts[fields[0]] = std::stoull(fields[4]);
        index.catalog_.emplace(row.library_id, std::move(row));
    }

    for (std::uint64_t i = 0; i < count; ++i) {
        IndexRecord rec;
        rec.doc_id = in.str(in.u16le());
        rec.channel = static_cast<Channel>(in.u8());
        rec.library_id = in.str(in.u16le());
        rec.values.resize(dimension);
        double sq = 0;
        for (std::uint32_t d = 0; d < dimension; ++d) {
            rec.values[d] = in.f32le();
            sq += double(rec.values[d]) * rec.values[d];
        }
        rec.norm = std::sqrt(sq);
        auto row = index.catalog_.find(rec.library_id);
        if (row == index.catalog_.end())
            throw Error(ErrorCode::CorruptIndex, "record for unknown library " + rec.library_id);
        if (index.doc_lookup_.contains(rec.doc_id))
            throw Error(ErrorCode::CorruptIndex, "duplicate doc_id " + rec.doc_id);
        row->second.doc_ids.push_back(rec.doc_id);
        index.doc_lookup_.emplace(rec.doc_id, index.records_.size());
        ++index.channel_population_[static_cast<int>(rec.channel)];
        index.records_.push_back(std::move(rec));
    }
    if (!in.at_end()) throw Error(ErrorCode::CorruptIndex, "trailing bytes in vectors.bin");

    for (const auto& [id, row] : index.catalog_) {
        auto it = declared_counts.find(id);
        if (it == declared_counts.end() || it->second != row.doc_ids.size())
            throw Error(ErrorCode::CorruptIndex, "catalog count mismatch for " + id);
    }
    return index;
}

} // namespace sift
