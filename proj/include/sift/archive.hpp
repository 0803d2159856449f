#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sift/bytes.hpp"
#include "sift/normalize.hpp"

namespace sift {

struct LibraryMetadata {
    std::string name;
    std::string version;
    std::string category;
    std::string tags;
    std::uint64_t usage_count = 0;
    std::optional<std::uint32_t> star_count; // absent when the source has no star notion
    std::string source_url;
};

enum class EntryKind : std::uint8_t { ClassFile, PySource };

struct SourceEntry {
    std::string relative_path;
    EntryKind kind = EntryKind::ClassFile;
    std::uint64_t size_bytes = 0;
    Bytes raw_bytes;
};

struct LibraryArchive {
    std::string id; // unique within a corpus; defaults to the file stem
    std::string path;
    Language language = Language::Java;
    std::vector<SourceEntry> entries; // lexicographic by relative_path
    LibraryMetadata metadata;
};

/// Opens a ZIP/JAR or gzipped tar and enumerates .class/.py entries
/// (directories flattened to relative paths, ordered lexicographically).
/// Language comes from the hint or from the majority entry kind; entries of
/// the other kind are dropped so every entry matches the archive language.
LibraryArchive open_archive(const std::string& path, std::optional<Language> language_hint = {});

constexpr std::uint64_t kDefaultMinEntryBytes = 1024;
constexpr std::uint64_t kDefaultMinTotalSourceBytes = 9216;

/// Keeps entries of at least min_size bytes, order preserved. Idempotent.
std::vector<SourceEntry> filter_entries(const std::vector<SourceEntry>& entries,
                                        std::uint64_t min_size = kDefaultMinEntryBytes);

enum class RejectReason {
    None,
    NoSourceFiles,   // no source entries at all
    SizeConstraint,  // total source bytes below the corpus minimum
    StarConstraint,  // star metadata present but below the minimum
    NoUsableFiles,   // nothing survives the per-file size filter
};

const char* reject_reason_name(RejectReason reason);

struct ConstraintCheck {
    bool accepted = false;
    RejectReason reason = RejectReason::None;
    std::string detail;
};

/// Corpus admission: total source size, at least one source file, minimum
/// stars when star metadata exists, and at least one entry surviving the
/// per-file filter (so accepted libraries never produce empty corpora).
ConstraintCheck check_corpus_constraints(const LibraryArchive& archive,
                                         std::uint64_t min_total_source_bytes = kDefaultMinTotalSourceBytes,
                                         std::uint32_t min_stars = 1,
                                         std::uint64_t min_entry_bytes = kDefaultMinEntryBytes);

struct CatalogEntry {
    std::string location; // URL or local path
    LibraryMetadata metadata;
    std::size_t line = 0;
};

/// Line format: url_or_path [TAB name TAB version TAB category TAB stars].
/// Blank lines skipped; malformed lines raise CatalogParseError.
std::vector<CatalogEntry> parse_catalog(const std::string& catalog_path);

struct FetchFailure {
    std::string location;
    std::string message;
};

struct FetchResult {
    std::vector<LibraryArchive> archives;
    std::vector<FetchFailure> failures; // per-entry problems, never fatal
};

/// Resolves each catalog entry: URLs are downloaded into dest_dir, local
/// paths opened in place. Download or open failures are collected per entry.
FetchResult fetch_catalog(const std::string& catalog_path, const std::string& dest_dir,
                          std::optional<Language> language_hint = {});

} // namespace sift
