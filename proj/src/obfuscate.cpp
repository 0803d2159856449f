#include "sift/obfuscate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <unordered_map>

#include "sift/rng.hpp"

namespace sift {

const char* transform_kind_name(TransformKind kind) {
    switch (kind) {
        case TransformKind::PackageRename: return "package-rename";
        case TransformKind::FunctionRelocate: return "relocate";
        case TransformKind::StatementInsert: return "insert";
        case TransformKind::IdentifierRename: return "ident-rename";
    }
    return "unknown";
}

namespace {

bool identifier_shaped(const std::string& token) {
    if (token.empty()) return false;
    unsigned char c0 = static_cast<unsigned char>(token[0]);
    if (!std::isalpha(c0) && c0 != '_') return false;
    for (unsigned char c : token)
        if (!std::isalnum(c) && c != '_') return false;
    return true;
}

} // namespace

NormalizedDocument rename_identifiers(const NormalizedDocument& doc, std::uint64_t seed) {
    (void)seed; // canonical first-use numbering; see header
    if (doc.channel != Channel::Source)
        throw std::invalid_argument("rename_identifiers requires a source-channel document");
    NormalizedDocument out = doc;
    std::unordered_map<std::string, std::string> mapping;
    for (auto& token : out.tokens) {
        if (!identifier_shaped(token) || is_language_keyword(doc.language, token)) continue;
        auto it = mapping.find(token);
        if (it == mapping.end())
            it = mapping.emplace(token, "id" + std::to_string(mapping.size())).first;
        token = it->second;
    }
    return out;
}

namespace {

// Splits "com/a/Foo" into package ("com/a") and simple name.
std::pair<std::string, std::string> split_binary_name(const std::string& name) {
    std::size_t slash = name.find_last_of('/');
    if (slash == std::string::npos) return {"", name};
    return {name.substr(0, slash), name.substr(slash + 1)};
}

class PackageMapper {
public:
    explicit PackageMapper(std::uint64_t seed) : seed_(seed) {}

    const std::string& mapped(const std::string& package) {
        auto it = map_.find(package);
        if (it != map_.end()) return it->second;
        char buf[24];
        std::snprintf(buf, sizeof buf, "p%06llx",
                      static_cast<unsigned long long>(mix_seed(seed_, fnv1a(package)) & 0xffffff));
        std::string fresh = buf;
        while (used_.count(fresh)) fresh += "x"; // avoid accidental collisions between packages
        used_.insert(fresh);
        return map_.emplace(package, std::move(fresh)).first->second;
    }

    std::string rename_class(const std::string& binary_name) {
        auto [pkg, simple] = split_binary_name(binary_name);
        return mapped(pkg) + "/" + simple;
    }

    // Rewrites every "L<name>;" reference inside a descriptor.
    std::string rename_descriptor(const std::string& desc) {
        std::string out;
        out.reserve(desc.size());
        std::size_t i = 0;
        while (i < desc.size()) {
            if (desc[i] == 'L') {
                std::size_t end = desc.find(';', i);
                if (end == std::string::npos) {
                    out += desc.substr(i);
                    break;
                }
                out += 'L';
                out += rename_class(desc.substr(i + 1, end - i - 1));
                out += ';';
                i = end + 1;
            } else {
                out += desc[i++];
            }
        }
        return out;
    }

    // Class entries may hold array descriptors ("[Lcom/a/Foo;") instead of
    // plain binary names.
    std::string rename_class_entry(const std::string& name) {
        if (!name.empty() && name[0] == '[') {
            std::size_t depth = name.find_first_not_of('[');
            if (depth != std::string::npos && depth < name.size() && name[depth] == 'L')
                return name.substr(0, depth) + rename_descriptor(name.substr(depth));
            return name; // primitive array, nothing to rename
        }
        return rename_class(name);
    }

private:
    std::uint64_t seed_;
    std::unordered_map<std::string, std::string> map_;
    std::set<std::string> used_;
};

} // namespace

ClassFileModel rename_packages(const ClassFileModel& model, std::uint64_t seed) {
    ClassFileModel out = model;
    PackageMapper mapper(seed);

    // Fresh Utf8 entries keep strings that are shared with non-name uses intact.
    std::unordered_map<std::string, std::uint16_t> fresh;
    auto intern = [&](const std::string& text) -> std::uint16_t {
        auto it = fresh.find(text);
        if (it != fresh.end()) return it->second;
        CpEntry utf8;
        utf8.tag = CpTag::Utf8;
        utf8.utf8 = text;
        out.constant_pool.push_back(utf8);
        auto index = static_cast<std::uint16_t>(out.constant_pool.size() - 1);
        fresh.emplace(text, index);
        return index;
    };

    // intern() grows the pool, so entries are re-addressed by index after it.
    const std::size_t original_size = model.constant_pool.size();
    for (std::size_t i = 1; i < original_size; ++i) {
        if (!out.constant_pool[i]) continue;
        CpTag tag = out.constant_pool[i]->tag;
        if (tag == CpTag::Class) {
            std::string renamed = mapper.rename_class_entry(model.utf8_at(out.constant_pool[i]->index1));
            std::uint16_t idx = intern(renamed);
            out.constant_pool[i]->index1 = idx;
        } else if (tag == CpTag::NameAndType || tag == CpTag::MethodType) {
            std::uint16_t desc_index =
                tag == CpTag::NameAndType ? out.constant_pool[i]->index2 : out.constant_pool[i]->index1;
            const std::string& desc = model.utf8_at(desc_index);
            std::string renamed = mapper.rename_descriptor(desc);
            if (renamed == desc) continue;
            std::uint16_t idx = intern(renamed);
            if (tag == CpTag::NameAndType)
                out.constant_pool[i]->index2 = idx;
            else
                out.constant_pool[i]->index1 = idx;
        }
    }
    for (auto* members : {&out.fields, &out.methods}) {
        for (auto& member : *members) {
            const std::string& desc = model.utf8_at(member.descriptor_index);
            std::string renamed = mapper.rename_descriptor(desc);
            if (renamed != desc) member.descriptor_index = intern(renamed);
        }
    }
    return out;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start + 1));
        start = nl + 1;
    }
    return lines;
}

std::size_t indent_of(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return i;
}

bool blank_line(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

struct Block {
    std::size_t first = 0, last = 0; // line span, inclusive
};

// Sibling def-blocks at the same indent, grouped into consecutive runs.
std::vector<std::vector<Block>> python_sibling_runs(const std::vector<std::string>& lines) {
    std::vector<std::vector<Block>> runs;
    std::vector<Block> current;
    std::optional<std::size_t> run_indent;
    std::size_t i = 0;
    while (i < lines.size()) {
        const std::string& line = lines[i];
        std::size_t indent = indent_of(line);
        std::string body = line.substr(indent);
        bool is_def = body.rfind("def ", 0) == 0 || body.rfind("async def ", 0) == 0;
        if (is_def) {
            Block b;
            b.first = i;
            // leading decorators at the same indent belong to the block
            while (b.first > 0 && indent_of(lines[b.first - 1]) == indent &&
                   lines[b.first - 1].substr(indent).rfind('@', 0) == 0)
                --b.first;
            std::size_t j = i + 1;
            std::size_t last_content = i;
            while (j < lines.size()) {
                if (blank_line(lines[j])) {
                    ++j;
                    continue;
                }
                if (indent_of(lines[j]) <= indent) break;
                last_content = j;
                ++j;
            }
            b.last = last_content;
            if (!current.empty() && run_indent == indent && b.first == current.back().last + 1) {
                current.push_back(b);
            } else if (!current.empty() && run_indent == indent) {
                // allow blank-only gaps between siblings
                bool only_blanks = true;
                for (std::size_t g = current.back().last + 1; g < b.first; ++g)
                    if (!blank_line(lines[g])) only_blanks = false;
                if (only_blanks) {
                    current.back().last = b.first - 1; // blanks travel with the previous block
                    current.push_back(b);
                } else {
                    if (current.size() > 1) runs.push_back(current);
                    current = {b};
                }
            } else {
                if (current.size() > 1) runs.push_back(current);
                current = {b};
                run_indent = indent;
            }
            i = b.last + 1;
        } else {
            if (!blank_line(line) && run_indent && indent <= *run_indent &&
                !current.empty()) {
                if (current.size() > 1) runs.push_back(current);
                current.clear();
                run_indent.reset();
            }
            ++i;
        }
    }
    if (current.size() > 1) runs.push_back(current);
    return runs;
}

RelocateResult relocate_python(const std::string& text, std::uint64_t seed) {
    auto lines = split_lines(text);
    auto runs = python_sibling_runs(lines);
    RelocateResult result;
    result.segmented = true;
    if (runs.empty()) {
        result.text = text;
        return result;
    }
    Rng rng(mix_seed(seed, fnv1a("relocate")));
    std::vector<std::string> out_lines = lines;
    for (const auto& run : runs) {
        std::vector<std::size_t> order(run.size());
        for (std::size_t i = 0; i < run.size(); ++i) order[i] = i;
        seeded_shuffle(order, rng);
        std::size_t write = run.front().first;
        for (std::size_t k : order) {
            for (std::size_t l = run[k].first; l <= run[k].last; ++l)
                out_lines[write++] = lines[l];
            ++result.moved_blocks;
        }
    }
    std::string out;
    for (auto& l : out_lines) out += l;
    result.text = std::move(out);
    return result;
}

// Brace-matched member segmentation for Java-like text produced by external
// decompilers. Strings, chars, and comments are skipped while matching.
struct JavaScanner {
    const std::string& text;
    std::size_t i = 0;

    explicit JavaScanner(const std::string& t) : text(t) {}

    bool eof() const { return i >= text.size(); }

    // advances one char, skipping entire strings/comments atomically
    void advance() {
        char c = text[i];
        if (c == '"' || c == '\'') {
            char quote = c;
            ++i;
            while (i < text.size() && text[i] != quote) {
                if (text[i] == '\\') ++i;
                ++i;
            }
            if (i < text.size()) ++i;
            return;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
            while (i < text.size() && text[i] != '\n') ++i;
            return;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
            i += 2;
            while (i + 1 < text.size() && !(text[i] == '*' && text[i + 1] == '/')) ++i;
            i = std::min(i + 2, text.size());
            return;
        }
        ++i;
    }
};

RelocateResult relocate_java(const std::string& text, std::uint64_t seed) {
    RelocateResult failed;
    failed.text = text;
    failed.segmented = false;

    // find the outermost class body
    JavaScanner scan(text);
    std::size_t body_open = std::string::npos;
    while (!scan.eof()) {
        if (text[scan.i] == '{') {
            body_open = scan.i;
            break;
        }
        scan.advance();
    }
    if (body_open == std::string::npos) return failed;

    std::size_t depth = 1;
    scan.i = body_open + 1;
    std::size_t member_start = scan.i;
    struct Member {
        std::size_t start, end; // [start, end)
        bool method;
    };
    std::vector<Member> members;
    std::size_t body_close = std::string::npos;
    bool saw_paren = false;
    while (!scan.eof()) {
        char c = text[scan.i];
        if (c == '(' && depth == 1) saw_paren = true;
        if (c == '{') {
            ++depth;
            if (depth == 2) {
                // block belongs to the current member; find its close
                scan.advance();
                while (!scan.eof() && depth > 1) {
                    if (text[scan.i] == '{') ++depth;
                    if (text[scan.i] == '}') --depth;
                    scan.advance();
                }
                if (depth > 1) return failed;
                members.push_back({member_start, scan.i, saw_paren});
                member_start = scan.i;
                saw_paren = false;
                continue;
            }
        } else if (c == '}') {
            --depth;
            if (depth == 0) {
                body_close = scan.i;
                break;
            }
        } else if (c == ';' && depth == 1) {
            members.push_back({member_start, scan.i + 1, false});
            member_start = scan.i + 1;
            saw_paren = false;
        }
        scan.advance();
    }
    if (body_close == std::string::npos) return failed;
    if (members.empty()) {
        RelocateResult identity;
        identity.text = text;
        return identity;
    }

    std::vector<std::size_t> method_slots;
    for (std::size_t k = 0; k < members.size(); ++k)
        if (members[k].method) method_slots.push_back(k);
    RelocateResult result;
    result.segmented = true;
    if (method_slots.size() < 2) {
        result.text = text;
        return result;
    }
    std::vector<std::size_t> order = method_slots;
    Rng rng(mix_seed(seed, fnv1a("relocate")));
    seeded_shuffle(order, rng);

    std::string out = text.substr(0, members.front().start);
    std::size_t next_method = 0;
    for (std::size_t k = 0; k < members.size(); ++k) {
        const Member& m = members[k].method ? members[order[next_method]] : members[k];
        if (members[k].method) ++next_method;
        out += text.substr(m.start, m.end - m.start);
    }
    out += text.substr(members.back().end);
    result.moved_blocks = method_slots.size();
    result.text = std::move(out);
    return result;
}

} // namespace

RelocateResult relocate_methods(const std::string& source_text, Language language, std::uint64_t seed) {
    return language == Language::Python ? relocate_python(source_text, seed)
                                        : relocate_java(source_text, seed);
}

std::string insert_statements(const std::string& source_text, Language language, double rate,
                              std::uint64_t seed) {
    if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("rate must be in [0, 1]");
    if (rate == 0.0) return source_text;

    auto lines = split_lines(source_text);
    std::vector<std::size_t> boundaries; // line indices after which insertion is safe
    long bracket_balance = 0;
    long brace_depth = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        std::string stripped = line;
        // strip end-of-line comment (rough: adequate for generated sources)
        if (language == Language::Python) {
            std::size_t hash = stripped.find('#');
            if (hash != std::string::npos) stripped = stripped.substr(0, hash);
        } else {
            std::size_t slashes = stripped.find("//");
            if (slashes != std::string::npos) stripped = stripped.substr(0, slashes);
        }
        for (char c : stripped) {
            if (c == '(' || c == '[') ++bracket_balance;
            if (c == ')' || c == ']') --bracket_balance;
            if (c == '{') {
                ++brace_depth;
                if (language == Language::Python) ++bracket_balance;
            }
            if (c == '}') {
                --brace_depth;
                if (language == Language::Python) --bracket_balance;
            }
        }
        while (!stripped.empty() && std::isspace(static_cast<unsigned char>(stripped.back())))
            stripped.pop_back();
        if (stripped.empty()) continue;
        if (language == Language::Python) {
            if (bracket_balance != 0) continue;
            if (stripped.back() == ':' || stripped.back() == '\\') continue;
            boundaries.push_back(i);
        } else {
            if (stripped.back() == ';' && brace_depth >= 2 && bracket_balance == 0)
                boundaries.push_back(i);
        }
    }

    std::size_t want = static_cast<std::size_t>(std::llround(rate * double(boundaries.size())));
    if (want == 0) return source_text;
    Rng rng(mix_seed(seed, fnv1a("insert")));
    seeded_shuffle(boundaries, rng);
    boundaries.resize(std::min(want, boundaries.size()));
    std::sort(boundaries.begin(), boundaries.end());

    const char* stmt = language == Language::Python ? "print(\"t\")" : "System.out.println(\"t\");";
    std::string out;
    std::size_t next = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += lines[i];
        if (next < boundaries.size() && boundaries[next] == i) {
            ++next;
            std::string indent = lines[i].substr(0, indent_of(lines[i]));
            bool had_newline = !lines[i].empty() && lines[i].back() == '\n';
            if (!had_newline) out += '\n';
            out += indent + stmt + "\n";
        }
    }
    return out;
}

} // namespace sift
