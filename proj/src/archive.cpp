#include "sift/archive.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "sift/container.hpp"

namespace sift {

namespace fs = std::filesystem;

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string path_stem(const std::string& path) {
    fs::path p(path);
    std::string stem = p.stem().string();
    // foo.tar.gz -> foo
    if (has_suffix(stem, ".tar")) stem = stem.substr(0, stem.size() - 4);
    return stem.empty() ? p.filename().string() : stem;
}

} // namespace

const char* reject_reason_name(RejectReason reason) {
    switch (reason) {
        case RejectReason::None: return "None";
        case RejectReason::NoSourceFiles: return "NoSourceFiles";
        case RejectReason::SizeConstraint: return "SizeConstraint";
        case RejectReason::StarConstraint: return "StarConstraint";
        case RejectReason::NoUsableFiles: return "NoUsableFiles";
    }
    return "Unknown";
}

LibraryArchive open_archive(const std::string& path, std::optional<Language> language_hint) {
    Bytes raw;
    try {
        raw = read_file(path);
    } catch (const Error& e) {
        throw Error(ErrorCode::UnreadableArchive, e.what());
    }

    std::vector<ContainerEntry> container;
    if (looks_like_zip(raw)) {
        container = read_zip(raw);
    } else if (looks_like_gzip(raw)) {
        container = read_tar_gz(raw);
    } else {
        throw Error(ErrorCode::UnreadableArchive, "not a zip or gzipped tar: " + path);
    }

    std::vector<SourceEntry> class_entries;
    std::vector<SourceEntry> py_entries;
    for (auto& e : container) {
        SourceEntry se;
        se.relative_path = e.name;
        se.size_bytes = e.data.size();
        se.raw_bytes = std::move(e.data);
        if (has_suffix(e.name, ".class")) {
            se.kind = EntryKind::ClassFile;
            class_entries.push_back(std::move(se));
        } else if (has_suffix(e.name, ".py")) {
            se.kind = EntryKind::PySource;
            py_entries.push_back(std::move(se));
        }
    }

    if (class_entries.empty() && py_entries.empty())
        throw Error(ErrorCode::NoSourceFiles, "no .class or .py entries in " + path);

    Language language;
    if (language_hint) {
        language = *language_hint;
    } else if (class_entries.size() > py_entries.size()) {
        language = Language::Java;
    } else if (py_entries.size() > class_entries.size()) {
        language = Language::Python;
    } else {
        throw Error(ErrorCode::AmbiguousLanguage,
                    "equal .class and .py counts in " + path + "; pass a language hint");
    }

    LibraryArchive archive;
    archive.id = path_stem(path);
    archive.path = path;
    archive.language = language;
    archive.entries = language == Language::Java ? std::move(class_entries) : std::move(py_entries);
    if (archive.entries.empty())
        throw Error(ErrorCode::NoSourceFiles,
                    "no entries for hinted language in " + path);
    std::sort(archive.entries.begin(), archive.entries.end(),
              [](const SourceEntry& a, const SourceEntry& b) { return a.relative_path < b.relative_path; });
    archive.metadata.name = archive.id;
    return archive;
}

std::vector<SourceEntry> filter_entries(const std::vector<SourceEntry>& entries, std::uint64_t min_size) {
    std::vector<SourceEntry> out;
    out.reserve(entries.size());
    for (const auto& e : entries)
        if (e.size_bytes >= min_size) out.push_back(e);
    return out;
}

ConstraintCheck check_corpus_constraints(const LibraryArchive& archive,
                                         std::uint64_t min_total_source_bytes, std::uint32_t min_stars,
                                         std::uint64_t min_entry_bytes) {
    ConstraintCheck check;
    if (archive.entries.empty()) {
        check.reason = RejectReason::NoSourceFiles;
        check.detail = "no source entries";
        return check;
    }
    std::uint64_t total = 0;
    std::uint64_t usable = 0;
    for (const auto& e : archive.entries) {
        total += e.size_bytes;
        if (e.size_bytes >= min_entry_bytes) ++usable;
    }
    if (total < min_total_source_bytes) {
        check.reason = RejectReason::SizeConstraint;
        check.detail = std::to_string(total) + " bytes of source, need " +
                       std::to_string(min_total_source_bytes);
        return check;
    }
    // Star constraint only applies when star metadata is present.
    if (archive.metadata.star_count && *archive.metadata.star_count < min_stars) {
        check.reason = RejectReason::StarConstraint;
        check.detail = std::to_string(*archive.metadata.star_count) + " stars, need " +
                       std::to_string(min_stars);
        return check;
    }
    if (usable == 0) {
        check.reason = RejectReason::NoUsableFiles;
        check.detail = "no entry reaches " + std::to_string(min_entry_bytes) + " bytes";
        return check;
    }
    check.accepted = true;
    return check;
}

std::vector<CatalogEntry> parse_catalog(const std::string& catalog_path) {
    std::ifstream in(catalog_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open catalog " + catalog_path);
    std::vector<CatalogEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() > 5)
            throw Error(ErrorCode::CatalogParseError,
                        "line " + std::to_string(line_no) + ": expected at most 5 fields");
        if (fields[0].empty())
            throw Error(ErrorCode::CatalogParseError,
                        "line " + std::to_string(line_no) + ": empty location");
        CatalogEntry entry;
        entry.line = line_no;
        entry.location = fields[0];
        if (fields.size() > 1) entry.metadata.name = fields[1];
        if (fields.size() > 2) entry.metadata.version = fields[2];
        if (fields.size() > 3) entry.metadata.category = fields[3];
        if (fields.size() > 4 && !fields[4].empty()) {
            std::uint32_t stars = 0;
            auto [ptr, ec] = std::from_chars(fields[4].data(), fields[4].data() + fields[4].size(), stars);
            if (ec != std::errc() || ptr != fields[4].data() + fields[4].size())
                throw Error(ErrorCode::CatalogParseError,
                            "line " + std::to_string(line_no) + ": bad star count '" + fields[4] + "'");
            entry.metadata.star_count = stars;
        }
        out.push_back(std::move(entry));
    }
    return out;
}

namespace {

bool is_url(const std::string& s) {
    return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0;
}

std::string download(const std::string& url, const std::string& dest_dir) {
    std::size_t scheme_end = url.find("://") + 3;
    std::size_t path_start = url.find('/', scheme_end);
    std::string host = url.substr(0, path_start == std::string::npos ? url.size() : path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(host);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    client.set_follow_location(true);
    auto res = client.Get(path);
    if (!res)
        throw Error(ErrorCode::IoError, "connection failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error(ErrorCode::IoError, "HTTP " + std::to_string(res->status));

    std::string filename = path.substr(path.find_last_of('/') + 1);
    if (filename.empty()) filename = "download.bin";
    fs::path dest = fs::path(dest_dir) / filename;
    fs::create_directories(dest_dir);
    write_file(dest.string(),
               std::span(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size()));
    return dest.string();
}

} // namespace

FetchResult fetch_catalog(const std::string& catalog_path, const std::string& dest_dir,
                          std::optional<Language> language_hint) {
    FetchResult result;
    for (const auto& entry : parse_catalog(catalog_path)) {
        try {
            std::string local = entry.location;
            if (is_url(entry.location)) local = download(entry.location, dest_dir);
            LibraryArchive archive = open_archive(local, language_hint);
            if (!entry.metadata.name.empty()) {
                archive.metadata.name = entry.metadata.name;
                archive.id = entry.metadata.name;
            }
            archive.metadata.version = entry.metadata.version;
            archive.metadata.category = entry.metadata.category;
            archive.metadata.star_count = entry.metadata.star_count;
            if (is_url(entry.location)) archive.metadata.source_url = entry.location;
            result.archives.push_back(std::move(archive));
        } catch (const Error& e) {
            result.failures.push_back({entry.location, e.what()});
        }
    }
    return result;
}

} // namespace sift
