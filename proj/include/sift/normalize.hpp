#pragma once

#include <string>
#include <vector>

#include "sift/classfile.hpp"

namespace sift {

enum class Channel : std::uint8_t { Bytecode = 0, Source = 1 };
enum class Language : std::uint8_t { Java = 0, Python = 1 };

const char* channel_name(Channel c);
const char* language_name(Language l);

/// A channel-tagged token document derived from one archive entry.
/// doc_id is "<archive_id>/<relative_path>#<channel>".
struct NormalizedDocument {
    std::string doc_id;
    Channel channel = Channel::Bytecode;
    Language language = Language::Java;
    std::vector<std::string> tokens;
};

struct NormalizationPolicy {
    bool placeholder_identifiers = true; // bytecode channel: positional CLS_/MTD_/FLD_ names
    bool keep_literals = true;
    bool strip_comments = true;
};

std::string make_doc_id(const std::string& archive_id, const std::string& relative_path, Channel channel);

/// Escapes whitespace and backslashes so a token never contains whitespace;
/// join-with-spaces then re-split reproduces the token list exactly.
std::string escape_token(const std::string& raw);
std::string unescape_token(const std::string& token);

/// Bytecode-channel document: per-method opcode mnemonics with symbolic pool
/// references replaced by first-use-ordered placeholders, branch offsets as
/// relative BR_ tokens, and literals kept verbatim when the policy says so.
NormalizedDocument disassemble(const ClassFileModel& model, const NormalizationPolicy& policy,
                               const std::string& doc_id = "");

/// Source-channel document: comments stripped, identifiers/keywords/literals
/// split on word boundaries, every punctuation character its own token, string
/// literals kept whole (quotes included).
NormalizedDocument normalize_source(const std::string& text, Language language,
                                    const NormalizationPolicy& policy = {},
                                    const std::string& doc_id = "");

/// Runs `command_template` ({input} replaced by a temp file holding `raw`),
/// captures stdout and pipes it through normalize_source. Covers channels the
/// pipeline delegates to external tools (Java decompiler, Python disassembler).
NormalizedDocument adapt_external(std::span<const std::uint8_t> raw, const std::string& command_template,
                                  Language language, Channel channel, const NormalizationPolicy& policy = {},
                                  const std::string& doc_id = "");

/// Parameter arity + return kind with reference names elided:
/// "(ILjava/lang/String;)V" -> "(IL)V". Obfuscation-invariant by construction.
std::string descriptor_shape(const std::string& descriptor);

bool is_language_keyword(Language language, const std::string& token);

} // namespace sift
