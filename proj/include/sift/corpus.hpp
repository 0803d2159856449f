#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sift/archive.hpp"
#include "sift/normalize.hpp"

namespace sift {

/// Command templates for the channels produced by external tools.
/// Native channels (Java bytecode, Python source) need no adapter.
struct AdapterConfig {
    std::string java_source_cmd;     // decompiler: .class bytes -> Java source text
    std::string python_bytecode_cmd; // compiler+disassembler: .py bytes -> bytecode text
};

/// True when documents for (language, channel) can be produced natively or
/// via a configured adapter.
bool channel_available(Language language, Channel channel, const AdapterConfig& adapters);

/// Normalized document for one entry, or nullopt when the channel needs an
/// adapter that is not configured. Parse and tool failures propagate.
std::optional<NormalizedDocument> entry_document(const std::string& archive_id, const SourceEntry& entry,
                                                 Language language, Channel channel,
                                                 const NormalizationPolicy& policy,
                                                 const AdapterConfig& adapters);

struct ExtractionResult {
    std::vector<NormalizedDocument> documents;
    std::size_t failed_entries = 0; // unparseable entries skipped, not fatal
};

/// Documents for every size-filtered entry of an archive on one channel.
ExtractionResult archive_documents(const LibraryArchive& archive, Channel channel,
                                   const NormalizationPolicy& policy, const AdapterConfig& adapters,
                                   std::uint64_t min_entry_bytes = kDefaultMinEntryBytes);

} // namespace sift
