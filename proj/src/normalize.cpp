#include "sift/normalize.hpp"

#include <array>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <unordered_map>
#include <unordered_set>

#include <sys/wait.h>
#include <unistd.h>

namespace sift {

const char* channel_name(Channel c) { return c == Channel::Bytecode ? "bc" : "sc"; }
const char* language_name(Language l) { return l == Language::Java ? "java" : "python"; }

std::string make_doc_id(const std::string& archive_id, const std::string& relative_path, Channel channel) {
    return archive_id + "/" + relative_path + "#" + channel_name(channel);
}

std::string escape_token(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case ' ': out += "\\s"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\f': out += "\\f"; break;
            case '\v': out += "\\v"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_token(const std::string& token) {
    std::string out;
    out.reserve(token.size());
    for (std::size_t i = 0; i < token.size(); ++i) {
        if (token[i] != '\\' || i + 1 == token.size()) {
            out += token[i];
            continue;
        }
        switch (token[++i]) {
            case '\\': out += '\\'; break;
            case 's': out += ' '; break;
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            case 'f': out += '\f'; break;
            case 'v': out += '\v'; break;
            default: out += token[i];
        }
    }
    return out;
}

std::string descriptor_shape(const std::string& descriptor) {
    std::string out;
    std::size_t i = 0;
    auto shape_one = [&](std::size_t& pos) {
        while (pos < descriptor.size() && descriptor[pos] == '[') {
            out += '[';
            ++pos;
        }
        if (pos >= descriptor.size()) return;
        char c = descriptor[pos];
        if (c == 'L') {
            out += 'L';
            while (pos < descriptor.size() && descriptor[pos] != ';') ++pos;
            if (pos < descriptor.size()) ++pos; // consume ';'
        } else {
            out += c;
            ++pos;
        }
    };
    if (!descriptor.empty() && descriptor[0] == '(') {
        out += '(';
        i = 1;
        while (i < descriptor.size() && descriptor[i] != ')') shape_one(i);
        out += ')';
        if (i < descriptor.size()) ++i; // consume ')'
        shape_one(i);
    } else {
        shape_one(i);
    }
    return out;
}

namespace {

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Placeholder assignment, first use wins, keyed by resolved symbolic identity
// so duplicate pool entries for the same name share one placeholder.
class PlaceholderMap {
public:
    explicit PlaceholderMap(const char* prefix) : prefix_(prefix) {}

    const std::string& get(const std::string& identity) {
        auto it = map_.find(identity);
        if (it != map_.end()) return it->second;
        auto [pos, _] = map_.emplace(identity, prefix_ + std::to_string(map_.size()));
        return pos->second;
    }

private:
    std::string prefix_;
    std::unordered_map<std::string, std::string> map_;
};

enum class RefKind { None, Field, Method, ClassRef, LoadConst, Indy };

RefKind opcode_ref_kind(std::uint8_t op) {
    switch (op) {
        case 0x12: case 0x13: case 0x14: return RefKind::LoadConst;
        case 0xb2: case 0xb3: case 0xb4: case 0xb5: return RefKind::Field;
        case 0xb6: case 0xb7: case 0xb8: case 0xb9: return RefKind::Method;
        case 0xbb: case 0xbd: case 0xc0: case 0xc1: case 0xc5: return RefKind::ClassRef;
        case 0xba: return RefKind::Indy;
        default: return RefKind::None;
    }
}

struct Disassembler {
    const ClassFileModel& m;
    const NormalizationPolicy& policy;
    std::vector<std::string> tokens;
    PlaceholderMap classes{"CLS_"};
    PlaceholderMap methods{"MTD_"};
    PlaceholderMap fields{"FLD_"};

    void emit(std::string t) { tokens.push_back(std::move(t)); }

    std::string class_token(std::uint16_t class_index) {
        const std::string& name = m.class_name_at(class_index);
        if (!policy.placeholder_identifiers) return escape_token(name);
        return classes.get(name);
    }

    std::string member_token(std::uint16_t ref_index, CpTag tag, PlaceholderMap& ph, const char* raw_sep) {
        const CpEntry& ref = m.pool_at(ref_index, tag);
        const std::string& owner = m.class_name_at(ref.index1);
        const CpEntry& nat = m.pool_at(ref.index2, CpTag::NameAndType);
        const std::string& name = m.utf8_at(nat.index1);
        const std::string& desc = m.utf8_at(nat.index2);
        if (!policy.placeholder_identifiers) return escape_token(owner + raw_sep + name + ":" + desc);
        return ph.get(owner + "." + name + ":" + desc);
    }

    void emit_constant(std::uint16_t index) {
        if (index == 0 || index >= m.constant_pool.size() || !m.constant_pool[index])
            throw Error(ErrorCode::IndexOutOfRange, "ldc pool index " + std::to_string(index));
        const CpEntry& e = *m.constant_pool[index];
        switch (e.tag) {
            case CpTag::Integer:
                if (policy.keep_literals) emit(std::to_string(e.int_value));
                break;
            case CpTag::Float:
                if (policy.keep_literals) emit(format_float(e.float_value));
                break;
            case CpTag::Long:
                if (policy.keep_literals) emit(std::to_string(e.long_value));
                break;
            case CpTag::Double:
                if (policy.keep_literals) emit(format_float(e.double_value));
                break;
            case CpTag::String:
                if (policy.keep_literals) emit(escape_token("\"" + m.utf8_at(e.index1) + "\""));
                break;
            case CpTag::Class:
                emit(class_token(index));
                break;
            case CpTag::MethodType:
                emit(descriptor_shape(m.utf8_at(e.index1)));
                break;
            case CpTag::MethodHandle:
                emit("MHANDLE");
                break;
            case CpTag::Dynamic:
                emit("CONST_DYN");
                break;
            default:
                throw Error(ErrorCode::IndexOutOfRange, "unloadable constant at " + std::to_string(index));
        }
    }

    void emit_branch(std::int32_t rel) {
        emit(rel < 0 ? "BR_-" + std::to_string(-static_cast<std::int64_t>(rel))
                     : "BR_+" + std::to_string(rel));
    }

    void emit_instruction(const Instruction& ins) {
        if (ins.wide) {
            emit("wide");
            std::uint8_t inner = static_cast<std::uint8_t>(ins.operands[0]);
            emit(opcode_mnemonic(inner));
            for (std::size_t i = 1; i < ins.operands.size(); ++i) emit(std::to_string(ins.operands[i]));
            return;
        }
        emit(opcode_mnemonic(ins.opcode));
        switch (opcode_ref_kind(ins.opcode)) {
            case RefKind::LoadConst:
                emit_constant(static_cast<std::uint16_t>(ins.operands[0]));
                return;
            case RefKind::Field:
                emit(member_token(static_cast<std::uint16_t>(ins.operands[0]), CpTag::Fieldref, fields, "."));
                return;
            case RefKind::Method: {
                CpTag tag = ins.opcode == 0xb9 ? CpTag::InterfaceMethodref : CpTag::Methodref;
                emit(member_token(static_cast<std::uint16_t>(ins.operands[0]), tag, methods, "."));
                return;
            }
            case RefKind::ClassRef:
                emit(class_token(static_cast<std::uint16_t>(ins.operands[0])));
                for (std::size_t i = 1; i < ins.operands.size(); ++i) emit(std::to_string(ins.operands[i]));
                return;
            case RefKind::Indy: {
                const CpEntry& indy = m.pool_at(static_cast<std::uint16_t>(ins.operands[0]), CpTag::InvokeDynamic);
                const CpEntry& nat = m.pool_at(indy.index2, CpTag::NameAndType);
                emit(descriptor_shape(m.utf8_at(nat.index2)));
                return;
            }
            case RefKind::None:
                break;
        }
        if (ins.opcode == 0xaa) { // tableswitch: low, high, then default + jump table
            emit(std::to_string(ins.operands[0]));
            emit(std::to_string(ins.operands[1]));
        } else if (ins.opcode == 0xab) { // lookupswitch: match values interleave below
            for (auto match : ins.operands) emit(std::to_string(match));
        } else {
            for (auto op : ins.operands) emit(std::to_string(op));
        }
        for (auto rel : ins.branch_targets) emit_branch(rel);
    }

    void run() {
        emit("CLASS");
        emit(class_token(m.this_class));
        if (m.super_class != 0) {
            emit("EXTENDS");
            emit(class_token(m.super_class));
        }
        for (auto iface : m.interfaces) {
            emit("IMPLEMENTS");
            emit(class_token(iface));
        }
        for (const auto& method : m.methods) {
            emit("METHOD");
            emit(descriptor_shape(m.utf8_at(method.descriptor_index)));
            auto code = m.code_of(method);
            if (!code) continue;
            for (const auto& ins : code->instructions) emit_instruction(ins);
        }
    }
};

} // namespace

NormalizedDocument disassemble(const ClassFileModel& model, const NormalizationPolicy& policy,
                               const std::string& doc_id) {
    Disassembler d{model, policy};
    d.run();
    NormalizedDocument doc;
    doc.doc_id = doc_id;
    doc.channel = Channel::Bytecode;
    doc.language = Language::Java;
    doc.tokens = std::move(d.tokens);
    return doc;
}

namespace {

bool ident_start(unsigned char c, Language lang) {
    if (std::isalpha(c) || c == '_' || c >= 0x80) return true;
    return lang == Language::Java && c == '$';
}

bool ident_cont(unsigned char c, Language lang) {
    return ident_start(c, lang) || std::isdigit(c);
}

bool is_string_prefix(const std::string& word) {
    if (word.empty() || word.size() > 3) return false;
    for (char c : word) {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
    }
    return true;
}

} // namespace

NormalizedDocument normalize_source(const std::string& text, Language language,
                                    const NormalizationPolicy& policy, const std::string& doc_id) {
    NormalizedDocument doc;
    doc.doc_id = doc_id;
    doc.channel = Channel::Source;
    doc.language = language;

    std::vector<std::string>& out = doc.tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto scan_string = [&](char quote, bool triple) {
        std::string lit;
        lit += quote;
        if (triple) lit += {quote, quote};
        i += triple ? 3 : 1;
        while (i < n) {
            if (text[i] == '\\' && i + 1 < n) {
                lit += text[i];
                lit += text[i + 1];
                i += 2;
                continue;
            }
            if (triple) {
                if (text[i] == quote && i + 2 < n && text[i + 1] == quote && text[i + 2] == quote) {
                    lit += {quote, quote, quote};
                    i += 3;
                    break;
                }
                lit += text[i++];
            } else {
                if (text[i] == quote) {
                    lit += quote;
                    ++i;
                    break;
                }
                if (text[i] == '\n') break; // unterminated: stop at line end
                lit += text[i++];
            }
        }
        return lit;
    };

    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        // comments
        if (policy.strip_comments) {
            if (language == Language::Python && c == '#') {
                while (i < n && text[i] != '\n') ++i;
                continue;
            }
            if (language == Language::Java && c == '/' && i + 1 < n) {
                if (text[i + 1] == '/') {
                    while (i < n && text[i] != '\n') ++i;
                    continue;
                }
                if (text[i + 1] == '*') {
                    i += 2;
                    while (i + 1 < n && !(text[i] == '*' && text[i + 1] == '/')) ++i;
                    i = (i + 1 < n) ? i + 2 : n;
                    continue;
                }
            }
        }
        // string literals (single token, quotes kept)
        if (c == '"' || (c == '\'' && true)) {
            bool triple = language == Language::Python && i + 2 < n && text[i + 1] == text[i] && text[i + 2] == text[i];
            out.push_back(escape_token(scan_string(static_cast<char>(c), triple)));
            continue;
        }
        // identifiers / keywords, possibly a string prefix like r"..."
        if (ident_start(c, language)) {
            std::size_t start = i;
            while (i < n && ident_cont(static_cast<unsigned char>(text[i]), language)) ++i;
            std::string word = text.substr(start, i - start);
            if (language == Language::Python && i < n && (text[i] == '"' || text[i] == '\'') &&
                is_string_prefix(word)) {
                bool triple = i + 2 < n && text[i + 1] == text[i] && text[i + 2] == text[i];
                out.push_back(escape_token(word + scan_string(text[i], triple)));
                continue;
            }
            out.push_back(std::move(word));
            continue;
        }
        // numeric literals
        if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t start = i;
            while (i < n) {
                unsigned char d = static_cast<unsigned char>(text[i]);
                if (std::isalnum(d) || d == '_' || d == '.') {
                    char lower = static_cast<char>(std::tolower(d));
                    ++i;
                    if ((lower == 'e' || lower == 'p') && i < n && (text[i] == '+' || text[i] == '-')) ++i;
                    continue;
                }
                break;
            }
            out.push_back(text.substr(start, i - start));
            continue;
        }
        // every other printable character stands alone
        out.push_back(std::string(1, text[i]));
        ++i;
    }
    return doc;
}

bool is_language_keyword(Language language, const std::string& token) {
    static const std::unordered_set<std::string> kPython = {
        "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
        "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
        "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise",
        "return", "try", "while", "with", "yield", "match", "case",
        // builtins that read like keywords in normalized text
        "print", "self", "len", "range", "str", "int", "float", "list", "dict", "set", "tuple"};
    static const std::unordered_set<std::string> kJava = {
        "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class",
        "const", "continue", "default", "do", "double", "else", "enum", "extends", "final",
        "finally", "float", "for", "goto", "if", "implements", "import", "instanceof", "int",
        "interface", "long", "native", "new", "package", "private", "protected", "public",
        "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this",
        "throw", "throws", "transient", "try", "void", "volatile", "while", "true", "false",
        "null", "var", "record", "System", "out", "println", "String"};
    const auto& set = language == Language::Python ? kPython : kJava;
    return set.contains(token);
}

NormalizedDocument adapt_external(std::span<const std::uint8_t> raw, const std::string& command_template,
                                  Language language, Channel channel, const NormalizationPolicy& policy,
                                  const std::string& doc_id) {
    if (command_template.empty())
        throw Error(ErrorCode::ToolMissing, "no command template configured");

    namespace fs = std::filesystem;
    static std::atomic<unsigned> counter{0};
    std::string stem = "sift-adapter-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
    fs::path input = fs::temp_directory_path() / (stem + ".in");
    fs::path stdout_path = fs::temp_directory_path() / (stem + ".out");
    fs::path stderr_path = fs::temp_directory_path() / (stem + ".err");

    struct Cleanup {
        std::array<fs::path, 3> paths;
        ~Cleanup() {
            std::error_code ec;
            for (const auto& p : paths) fs::remove(p, ec);
        }
    } cleanup{{input, stdout_path, stderr_path}};

    write_file(input.string(), raw);

    std::string cmd = command_template;
    const std::string needle = "{input}";
    std::string quoted = "'" + input.string() + "'";
    std::size_t pos = 0;
    bool substituted = false;
    while ((pos = cmd.find(needle, pos)) != std::string::npos) {
        cmd.replace(pos, needle.size(), quoted);
        pos += quoted.size();
        substituted = true;
    }
    if (!substituted) cmd += " " + quoted;
    cmd += " > '" + stdout_path.string() + "' 2> '" + stderr_path.string() + "'";

    int rc = std::system(cmd.c_str());
    int exit_code = (rc >= 0 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
    if (exit_code != 0) {
        std::string stderr_text;
        try {
            Bytes err = read_file(stderr_path.string());
            stderr_text.assign(err.begin(), err.end());
        } catch (const Error&) {
        }
        if (exit_code == 127)
            throw Error(ErrorCode::ToolMissing, "command not found: " + command_template);
        throw Error(ErrorCode::ToolFailed,
                    "exit " + std::to_string(exit_code) + ": " + stderr_text);
    }

    Bytes produced = read_file(stdout_path.string());
    std::string text(produced.begin(), produced.end());
    NormalizedDocument doc = normalize_source(text, language, policy, doc_id);
    doc.channel = channel;
    return doc;
}

} // namespace sift
