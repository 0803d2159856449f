#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sift/bytes.hpp"

namespace sift {

// Constant pool tags per the JVM class file format.
enum class CpTag : std::uint8_t {
    Utf8 = 1,
    Integer = 3,
    Float = 4,
    Long = 5,
    Double = 6,
    Class = 7,
    String = 8,
    Fieldref = 9,
    Methodref = 10,
    InterfaceMethodref = 11,
    NameAndType = 12,
    MethodHandle = 15,
    MethodType = 16,
    Dynamic = 17,
    InvokeDynamic = 18,
    Module = 19,
    Package = 20,
};

struct CpEntry {
    CpTag tag = CpTag::Utf8;
    std::string utf8;                  // Utf8
    std::int32_t int_value = 0;        // Integer
    float float_value = 0;             // Float
    std::int64_t long_value = 0;       // Long
    double double_value = 0;           // Double
    std::uint16_t index1 = 0;          // Class.name / String.value / ref.class / NaT.name / MethodType.desc / Module / Package
    std::uint16_t index2 = 0;          // ref.name_and_type / NaT.descriptor / Dynamic.name_and_type
    std::uint8_t ref_kind = 0;         // MethodHandle
};

struct AttributeInfo {
    std::uint16_t name_index = 0;
    Bytes data;                        // opaque payload; Code attributes are decoded on demand
};

struct MemberInfo {
    std::uint16_t access_flags = 0;
    std::uint16_t name_index = 0;
    std::uint16_t descriptor_index = 0;
    std::vector<AttributeInfo> attributes;
};

/// One decoded JVM instruction. Operand meaning depends on the opcode; branch
/// targets are kept as signed offsets relative to the instruction start.
struct Instruction {
    std::uint32_t offset = 0;          // bytecode offset of the opcode
    std::uint8_t opcode = 0;
    bool wide = false;                 // prefixed by 0xC4
    std::vector<std::int64_t> operands;
    std::vector<std::int32_t> branch_targets; // relative offsets (tableswitch/lookupswitch/ifs/goto)
};

struct CodeBody {
    std::uint16_t max_stack = 0;
    std::uint16_t max_locals = 0;
    std::vector<Instruction> instructions;
};

struct ClassFileModel {
    std::uint32_t magic = 0xCAFEBABE;
    std::uint16_t minor_version = 0;
    std::uint16_t major_version = 52;
    // Slot 0 unused; Long/Double occupy two slots (second slot tag-less placeholder).
    std::vector<std::optional<CpEntry>> constant_pool;
    std::uint16_t access_flags = 0;
    std::uint16_t this_class = 0;
    std::uint16_t super_class = 0;
    std::vector<std::uint16_t> interfaces;
    std::vector<MemberInfo> fields;
    std::vector<MemberInfo> methods;
    std::vector<AttributeInfo> attributes;

    const CpEntry& pool_at(std::uint16_t index, CpTag expected) const;
    const std::string& utf8_at(std::uint16_t index) const;
    /// Binary class name (e.g. "com/a/Foo") behind a Class entry.
    const std::string& class_name_at(std::uint16_t index) const;
    /// Name of the Code attribute's Utf8, resolved per method; empty if none.
    std::optional<CodeBody> code_of(const MemberInfo& method) const;
};

/// Parses a class file. Rejects wrong magic, truncated input, unknown constant
/// pool tags, and out-of-range pool indices with the byte offset of the fault.
/// Accepts major versions 45..61; unknown attributes are kept as opaque blobs.
ClassFileModel parse_classfile(std::span<const std::uint8_t> raw);

/// Serializes a model back to class file bytes (inverse of parse_classfile for
/// structurally valid models).
Bytes serialize_classfile(const ClassFileModel& model);

/// Decodes a Code attribute's instruction stream (bounds-checked).
std::vector<Instruction> decode_instructions(std::span<const std::uint8_t> code);

/// Mnemonic for an opcode byte, or "op_<n>" for gaps in the table.
const char* opcode_mnemonic(std::uint8_t opcode);

} // namespace sift
