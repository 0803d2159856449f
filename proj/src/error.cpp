#include "sift/error.hpp"

namespace sift {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnreadableArchive: return "UnreadableArchive";
        case ErrorCode::NoSourceFiles: return "NoSourceFiles";
        case ErrorCode::AmbiguousLanguage: return "AmbiguousLanguage";
        case ErrorCode::CatalogParseError: return "CatalogParseError";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::TruncatedInput: return "TruncatedInput";
        case ErrorCode::BadConstantPoolTag: return "BadConstantPoolTag";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::ToolMissing: return "ToolMissing";
        case ErrorCode::ToolFailed: return "ToolFailed";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::DegenerateVocabulary: return "DegenerateVocabulary";
        case ErrorCode::NoKnownTokens: return "NoKnownTokens";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DuplicateLibrary: return "DuplicateLibrary";
        case ErrorCode::EmptyChannel: return "EmptyChannel";
        case ErrorCode::CorruptIndex: return "CorruptIndex";
        case ErrorCode::CorruptModel: return "CorruptModel";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::NoUsableEntries: return "NoUsableEntries";
        case ErrorCode::InsufficientDocs: return "InsufficientDocs";
        case ErrorCode::EmptySameSet: return "EmptySameSet";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace sift
