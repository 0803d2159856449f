#pragma once

#include <cstdint>
#include <string>

#include "sift/classfile.hpp"
#include "sift/normalize.hpp"

namespace sift {

enum class TransformKind : std::uint8_t {
    PackageRename,
    FunctionRelocate,
    StatementInsert,
    IdentifierRename,
};

const char* transform_kind_name(TransformKind kind);

struct TransformSpec {
    TransformKind kind = TransformKind::IdentifierRename;
    std::uint64_t seed = 1;
    double rate = 0.2; // StatementInsert only
};

/// Bijective renaming of identifier-shaped tokens (keywords excluded) to the
/// canonical id0, id1, ... alphabet in first-use order. The canonical
/// numbering makes the result seed-independent; the seed parameter is kept
/// for interface symmetry with the other transforms.
NormalizedDocument rename_identifiers(const NormalizedDocument& doc, std::uint64_t seed);

/// Replaces every package prefix appearing in class names and descriptors
/// with a seeded random prefix, consistently across the whole constant pool.
/// Rewritten names go into fresh Utf8 entries so shared strings stay intact.
ClassFileModel rename_packages(const ClassFileModel& model, std::uint64_t seed);

struct RelocateResult {
    std::string text;
    bool segmented = true; // false: segmentation failed, text is the input
    std::size_t moved_blocks = 0;
};

/// Permutes the order of sibling function blocks (indentation-based for
/// Python, brace matching for Java text). Falls back to identity when the
/// source cannot be segmented.
RelocateResult relocate_methods(const std::string& source_text, Language language, std::uint64_t seed);

/// Inserts semantics-neutral print statements after a seeded `rate` fraction
/// of statement boundaries.
std::string insert_statements(const std::string& source_text, Language language, double rate,
                              std::uint64_t seed);

} // namespace sift
