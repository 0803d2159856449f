#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sift {

enum class ErrorCode {
    // Containers / ingest
    UnreadableArchive,
    NoSourceFiles,
    AmbiguousLanguage,
    CatalogParseError,
    // Classfile parsing
    BadMagic,
    TruncatedInput,
    BadConstantPoolTag,
    IndexOutOfRange,
    // External tool adapter
    ToolMissing,
    ToolFailed,
    // Embedding
    EmptyCorpus,
    DegenerateVocabulary,
    NoKnownTokens,
    ZeroVector,
    DimensionMismatch,
    // Persistence
    DuplicateLibrary,
    EmptyChannel,
    CorruptIndex,
    CorruptModel,
    VersionMismatch,
    // Detection / tuning
    NoUsableEntries,
    InsufficientDocs,
    EmptySameSet,
    // Generic I/O
    IoError,
};

const char* error_code_name(ErrorCode code);

/// Single exception type for all structured failures. `code()` identifies the
/// condition; `offset()` is the input byte offset for parse errors (0 otherwise).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::size_t offset = 0)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code),
          offset_(offset) {}

    ErrorCode code() const noexcept { return code_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    ErrorCode code_;
    std::size_t offset_;
};

} // namespace sift
