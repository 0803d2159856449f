#include "sift/classfile.hpp"

#include <array>

namespace sift {

namespace {

const std::array<const char*, 202> kMnemonics = {
    "nop", "aconst_null", "iconst_m1", "iconst_0", "iconst_1", "iconst_2", "iconst_3", "iconst_4",
    "iconst_5", "lconst_0", "lconst_1", "fconst_0", "fconst_1", "fconst_2", "dconst_0", "dconst_1",
    "bipush", "sipush", "ldc", "ldc_w", "ldc2_w", "iload", "lload", "fload",
    "dload", "aload", "iload_0", "iload_1", "iload_2", "iload_3", "lload_0", "lload_1",
    "lload_2", "lload_3", "fload_0", "fload_1", "fload_2", "fload_3", "dload_0", "dload_1",
    "dload_2", "dload_3", "aload_0", "aload_1", "aload_2", "aload_3", "iaload", "laload",
    "faload", "daload", "aaload", "baload", "caload", "saload", "istore", "lstore",
    "fstore", "dstore", "astore", "istore_0", "istore_1", "istore_2", "istore_3", "lstore_0",
    "lstore_1", "lstore_2", "lstore_3", "fstore_0", "fstore_1", "fstore_2", "fstore_3", "dstore_0",
    "dstore_1", "dstore_2", "dstore_3", "astore_0", "astore_1", "astore_2", "astore_3", "iastore",
    "lastore", "fastore", "dastore", "aastore", "bastore", "castore", "sastore", "pop",
    "pop2", "dup", "dup_x1", "dup_x2", "dup2", "dup2_x1", "dup2_x2", "swap",
    "iadd", "ladd", "fadd", "dadd", "isub", "lsub", "fsub", "dsub",
    "imul", "lmul", "fmul", "dmul", "idiv", "ldiv", "fdiv", "ddiv",
    "irem", "lrem", "frem", "drem", "ineg", "lneg", "fneg", "dneg",
    "ishl", "lshl", "ishr", "lshr", "iushr", "lushr", "iand", "land",
    "ior", "lor", "ixor", "lxor", "iinc", "i2l", "i2f", "i2d",
    "l2i", "l2f", "l2d", "f2i", "f2l", "f2d", "d2i", "d2l",
    "d2f", "i2b", "i2c", "i2s", "lcmp", "fcmpl", "fcmpg", "dcmpl",
    "dcmpg", "ifeq", "ifne", "iflt", "ifge", "ifgt", "ifle", "if_icmpeq",
    "if_icmpne", "if_icmplt", "if_icmpge", "if_icmpgt", "if_icmple", "if_acmpeq", "if_acmpne", "goto",
    "jsr", "ret", "tableswitch", "lookupswitch", "ireturn", "lreturn", "freturn", "dreturn",
    "areturn", "return", "getstatic", "putstatic", "getfield", "putfield", "invokevirtual", "invokespecial",
    "invokestatic", "invokeinterface", "invokedynamic", "new", "newarray", "anewarray", "arraylength", "athrow",
    "checkcast", "instanceof", "monitorenter", "monitorexit", "wide", "multianewarray", "ifnull", "ifnonnull",
    "goto_w", "jsr_w"};

CpEntry parse_cp_entry(ByteReader& in, bool& two_slots) {
    std::size_t tag_offset = in.offset();
    std::uint8_t tag = in.u8();
    CpEntry e;
    two_slots = false;
    switch (tag) {
        case 1: {
            e.tag = CpTag::Utf8;
            std::uint16_t len = in.u16be();
            e.utf8 = in.str(len);
            break;
        }
        case 3:
            e.tag = CpTag::Integer;
            e.int_value = static_cast<std::int32_t>(in.u32be());
            break;
        case 4: {
            e.tag = CpTag::Float;
            std::uint32_t bits = in.u32be();
            std::memcpy(&e.float_value, &bits, sizeof bits);
            break;
        }
        case 5: {
            e.tag = CpTag::Long;
            std::uint64_t hi = in.u32be(), lo = in.u32be();
            e.long_value = static_cast<std::int64_t>((hi << 32) | lo);
            two_slots = true;
            break;
        }
        case 6: {
            e.tag = CpTag::Double;
            std::uint64_t hi = in.u32be(), lo = in.u32be();
            std::uint64_t bits = (hi << 32) | lo;
            std::memcpy(&e.double_value, &bits, sizeof bits);
            two_slots = true;
            break;
        }
        case 7:
            e.tag = CpTag::Class;
            e.index1 = in.u16be();
            break;
        case 8:
            e.tag = CpTag::String;
            e.index1 = in.u16be();
            break;
        case 9:
        case 10:
        case 11:
            e.tag = static_cast<CpTag>(tag);
            e.index1 = in.u16be();
            e.index2 = in.u16be();
            break;
        case 12:
            e.tag = CpTag::NameAndType;
            e.index1 = in.u16be();
            e.index2 = in.u16be();
            break;
        case 15:
            e.tag = CpTag::MethodHandle;
            e.ref_kind = in.u8();
            e.index1 = in.u16be();
            break;
        case 16:
            e.tag = CpTag::MethodType;
            e.index1 = in.u16be();
            break;
        case 17:
        case 18:
            e.tag = static_cast<CpTag>(tag);
            e.index1 = in.u16be(); // bootstrap method attr index
            e.index2 = in.u16be(); // name and type
            break;
        case 19:
        case 20:
            e.tag = static_cast<CpTag>(tag);
            e.index1 = in.u16be();
            break;
        default:
            throw Error(ErrorCode::BadConstantPoolTag, "tag " + std::to_string(tag), tag_offset);
    }
    return e;
}

void check_pool_ref(const ClassFileModel& m, std::uint16_t index, CpTag expected, std::size_t offset) {
    if (index == 0 || index >= m.constant_pool.size() || !m.constant_pool[index])
        throw Error(ErrorCode::IndexOutOfRange, "pool index " + std::to_string(index), offset);
    if (m.constant_pool[index]->tag != expected)
        throw Error(ErrorCode::IndexOutOfRange,
                    "pool index " + std::to_string(index) + " has unexpected tag", offset);
}

void validate_pool(const ClassFileModel& m, const std::vector<std::size_t>& offsets) {
    for (std::size_t i = 1; i < m.constant_pool.size(); ++i) {
        if (!m.constant_pool[i]) continue;
        const CpEntry& e = *m.constant_pool[i];
        std::size_t off = offsets[i];
        switch (e.tag) {
            case CpTag::Class:
            case CpTag::String:
            case CpTag::MethodType:
            case CpTag::Module:
            case CpTag::Package:
                check_pool_ref(m, e.index1, CpTag::Utf8, off);
                break;
            case CpTag::Fieldref:
            case CpTag::Methodref:
            case CpTag::InterfaceMethodref:
                check_pool_ref(m, e.index1, CpTag::Class, off);
                check_pool_ref(m, e.index2, CpTag::NameAndType, off);
                break;
            case CpTag::NameAndType:
                check_pool_ref(m, e.index1, CpTag::Utf8, off);
                check_pool_ref(m, e.index2, CpTag::Utf8, off);
                break;
            case CpTag::MethodHandle: {
                if (e.index1 == 0 || e.index1 >= m.constant_pool.size() || !m.constant_pool[e.index1])
                    throw Error(ErrorCode::IndexOutOfRange, "method handle ref", off);
                CpTag t = m.constant_pool[e.index1]->tag;
                if (t != CpTag::Fieldref && t != CpTag::Methodref && t != CpTag::InterfaceMethodref)
                    throw Error(ErrorCode::IndexOutOfRange, "method handle ref tag", off);
                break;
            }
            case CpTag::Dynamic:
            case CpTag::InvokeDynamic:
                check_pool_ref(m, e.index2, CpTag::NameAndType, off);
                break;
            default:
                break;
        }
    }
}

std::vector<AttributeInfo> parse_attributes(ByteReader& in, const ClassFileModel& m) {
    std::uint16_t count = in.u16be();
    std::vector<AttributeInfo> out;
    out.reserve(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        AttributeInfo a;
        std::size_t off = in.offset();
        a.name_index = in.u16be();
        check_pool_ref(m, a.name_index, CpTag::Utf8, off);
        std::uint32_t len = in.u32be();
        auto payload = in.raw(len);
        a.data.assign(payload.begin(), payload.end());
        out.push_back(std::move(a));
    }
    return out;
}

MemberInfo parse_member(ByteReader& in, const ClassFileModel& m) {
    MemberInfo f;
    f.access_flags = in.u16be();
    std::size_t off = in.offset();
    f.name_index = in.u16be();
    check_pool_ref(m, f.name_index, CpTag::Utf8, off);
    off = in.offset();
    f.descriptor_index = in.u16be();
    check_pool_ref(m, f.descriptor_index, CpTag::Utf8, off);
    f.attributes = parse_attributes(in, m);
    return f;
}

} // namespace

const char* opcode_mnemonic(std::uint8_t opcode) {
    if (opcode < kMnemonics.size()) return kMnemonics[opcode];
    if (opcode == 0xca) return "breakpoint";
    if (opcode == 0xfe) return "impdep1";
    if (opcode == 0xff) return "impdep2";
    return "op_unknown";
}

const CpEntry& ClassFileModel::pool_at(std::uint16_t index, CpTag expected) const {
    if (index == 0 || index >= constant_pool.size() || !constant_pool[index])
        throw Error(ErrorCode::IndexOutOfRange, "pool index " + std::to_string(index));
    const CpEntry& e = *constant_pool[index];
    if (e.tag != expected)
        throw Error(ErrorCode::IndexOutOfRange, "pool index " + std::to_string(index) + " tag mismatch");
    return e;
}

const std::string& ClassFileModel::utf8_at(std::uint16_t index) const {
    return pool_at(index, CpTag::Utf8).utf8;
}

const std::string& ClassFileModel::class_name_at(std::uint16_t index) const {
    return utf8_at(pool_at(index, CpTag::Class).index1);
}

std::optional<CodeBody> ClassFileModel::code_of(const MemberInfo& method) const {
    for (const auto& attr : method.attributes) {
        if (utf8_at(attr.name_index) != "Code") continue;
        ByteReader in(attr.data);
        CodeBody body;
        body.max_stack = in.u16be();
        body.max_locals = in.u16be();
        std::uint32_t code_len = in.u32be();
        auto code = in.raw(code_len);
        body.instructions = decode_instructions(code);
        return body;
    }
    return std::nullopt;
}

std::vector<Instruction> decode_instructions(std::span<const std::uint8_t> code) {
    ByteReader in(code);
    std::vector<Instruction> out;
    while (!in.at_end()) {
        Instruction ins;
        ins.offset = static_cast<std::uint32_t>(in.offset());
        ins.opcode = in.u8();
        switch (ins.opcode) {
            case 0x10: // bipush
                ins.operands.push_back(static_cast<std::int8_t>(in.u8()));
                break;
            case 0x11: // sipush
                ins.operands.push_back(static_cast<std::int16_t>(in.u16be()));
                break;
            case 0x12: // ldc
                ins.operands.push_back(in.u8());
                break;
            case 0x13: // ldc_w
            case 0x14: // ldc2_w
            case 0xb2: // getstatic
            case 0xb3: // putstatic
            case 0xb4: // getfield
            case 0xb5: // putfield
            case 0xb6: // invokevirtual
            case 0xb7: // invokespecial
            case 0xb8: // invokestatic
            case 0xbb: // new
            case 0xbd: // anewarray
            case 0xc0: // checkcast
            case 0xc1: // instanceof
                ins.operands.push_back(in.u16be());
                break;
            case 0xb9: // invokeinterface: index, count, 0
                ins.operands.push_back(in.u16be());
                ins.operands.push_back(in.u8());
                in.u8();
                break;
            case 0xba: // invokedynamic: index, 0, 0
                ins.operands.push_back(in.u16be());
                in.u16be();
                break;
            case 0x15: case 0x16: case 0x17: case 0x18: case 0x19: // loads
            case 0x36: case 0x37: case 0x38: case 0x39: case 0x3a: // stores
            case 0xa9:                                             // ret
                ins.operands.push_back(in.u8());
                break;
            case 0x84: // iinc
                ins.operands.push_back(in.u8());
                ins.operands.push_back(static_cast<std::int8_t>(in.u8()));
                break;
            case 0xbc: // newarray
                ins.operands.push_back(in.u8());
                break;
            case 0xc5: // multianewarray
                ins.operands.push_back(in.u16be());
                ins.operands.push_back(in.u8());
                break;
            case 0x99: case 0x9a: case 0x9b: case 0x9c: case 0x9d: case 0x9e: // ifXX
            case 0x9f: case 0xa0: case 0xa1: case 0xa2: case 0xa3: case 0xa4: // if_icmpXX
            case 0xa5: case 0xa6:                                             // if_acmpXX
            case 0xa7: case 0xa8:                                             // goto, jsr
            case 0xc6: case 0xc7:                                             // ifnull, ifnonnull
                ins.branch_targets.push_back(static_cast<std::int16_t>(in.u16be()));
                break;
            case 0xc8: case 0xc9: // goto_w, jsr_w
                ins.branch_targets.push_back(static_cast<std::int32_t>(in.u32be()));
                break;
            case 0xaa: { // tableswitch
                std::size_t pad = (4 - ((ins.offset + 1) % 4)) % 4;
                in.skip(pad);
                ins.branch_targets.push_back(static_cast<std::int32_t>(in.u32be())); // default
                std::int32_t low = static_cast<std::int32_t>(in.u32be());
                std::int32_t high = static_cast<std::int32_t>(in.u32be());
                if (high < low)
                    throw Error(ErrorCode::IndexOutOfRange, "tableswitch bounds", ins.offset);
                std::uint64_t count = std::uint64_t(high) - std::uint64_t(low) + 1;
                if (count > in.remaining() / 4)
                    throw Error(ErrorCode::TruncatedInput, "tableswitch entries", in.offset());
                ins.operands.push_back(low);
                ins.operands.push_back(high);
                for (std::uint64_t i = 0; i < count; ++i)
                    ins.branch_targets.push_back(static_cast<std::int32_t>(in.u32be()));
                break;
            }
            case 0xab: { // lookupswitch
                std::size_t pad = (4 - ((ins.offset + 1) % 4)) % 4;
                in.skip(pad);
                ins.branch_targets.push_back(static_cast<std::int32_t>(in.u32be())); // default
                std::int32_t npairs = static_cast<std::int32_t>(in.u32be());
                if (npairs < 0 || std::uint64_t(npairs) > in.remaining() / 8)
                    throw Error(ErrorCode::TruncatedInput, "lookupswitch pairs", in.offset());
                for (std::int32_t i = 0; i < npairs; ++i) {
                    ins.operands.push_back(static_cast<std::int32_t>(in.u32be()));
                    ins.branch_targets.push_back(static_cast<std::int32_t>(in.u32be()));
                }
                break;
            }
            case 0xc4: { // wide
                ins.wide = true;
                std::uint8_t widened = in.u8();
                ins.operands.push_back(widened);
                if (widened == 0x84) { // iinc
                    ins.operands.push_back(in.u16be());
                    ins.operands.push_back(static_cast<std::int16_t>(in.u16be()));
                } else {
                    ins.operands.push_back(in.u16be());
                }
                break;
            }
            default:
                break; // no operands
        }
        out.push_back(std::move(ins));
    }
    return out;
}

ClassFileModel parse_classfile(std::span<const std::uint8_t> raw) {
    ByteReader in(raw);
    ClassFileModel m;
    m.magic = in.u32be();
    if (m.magic != 0xCAFEBABE)
        throw Error(ErrorCode::BadMagic, "not a class file", 0);
    m.minor_version = in.u16be();
    m.major_version = in.u16be();
    if (m.major_version < 45 || m.major_version > 61)
        throw Error(ErrorCode::BadMagic, "unsupported major version " + std::to_string(m.major_version), 6);

    std::uint16_t cp_count = in.u16be();
    if (cp_count == 0)
        throw Error(ErrorCode::TruncatedInput, "constant pool count 0", in.offset());
    m.constant_pool.resize(cp_count);
    std::vector<std::size_t> entry_offsets(cp_count, 0);
    for (std::uint16_t i = 1; i < cp_count; ++i) {
        entry_offsets[i] = in.offset();
        bool two_slots = false;
        m.constant_pool[i] = parse_cp_entry(in, two_slots);
        if (two_slots) {
            if (i + 1 >= cp_count)
                throw Error(ErrorCode::TruncatedInput, "long/double at last pool slot", entry_offsets[i]);
            ++i; // second slot stays empty
        }
    }
    validate_pool(m, entry_offsets);

    m.access_flags = in.u16be();
    std::size_t off = in.offset();
    m.this_class = in.u16be();
    check_pool_ref(m, m.this_class, CpTag::Class, off);
    off = in.offset();
    m.super_class = in.u16be();
    if (m.super_class != 0) check_pool_ref(m, m.super_class, CpTag::Class, off);

    std::uint16_t iface_count = in.u16be();
    m.interfaces.reserve(iface_count);
    for (std::uint16_t i = 0; i < iface_count; ++i) {
        off = in.offset();
        std::uint16_t idx = in.u16be();
        check_pool_ref(m, idx, CpTag::Class, off);
        m.interfaces.push_back(idx);
    }

    std::uint16_t field_count = in.u16be();
    m.fields.reserve(field_count);
    for (std::uint16_t i = 0; i < field_count; ++i) m.fields.push_back(parse_member(in, m));

    std::uint16_t method_count = in.u16be();
    m.methods.reserve(method_count);
    for (std::uint16_t i = 0; i < method_count; ++i) m.methods.push_back(parse_member(in, m));

    m.attributes = parse_attributes(in, m);
    return m;
}

namespace {

void write_attributes(ByteWriter& out, const std::vector<AttributeInfo>& attrs) {
    out.u16be(static_cast<std::uint16_t>(attrs.size()));
    for (const auto& a : attrs) {
        out.u16be(a.name_index);
        out.u32be(static_cast<std::uint32_t>(a.data.size()));
        out.raw(a.data);
    }
}

} // namespace

Bytes serialize_classfile(const ClassFileModel& m) {
    ByteWriter out;
    out.u32be(m.magic);
    out.u16be(m.minor_version);
    out.u16be(m.major_version);
    out.u16be(static_cast<std::uint16_t>(m.constant_pool.size()));
    for (std::size_t i = 1; i < m.constant_pool.size(); ++i) {
        if (!m.constant_pool[i]) continue; // second slot of long/double
        const CpEntry& e = *m.constant_pool[i];
        out.u8(static_cast<std::uint8_t>(e.tag));
        switch (e.tag) {
            case CpTag::Utf8:
                out.u16be(static_cast<std::uint16_t>(e.utf8.size()));
                out.str(e.utf8);
                break;
            case CpTag::Integer:
                out.u32be(static_cast<std::uint32_t>(e.int_value));
                break;
            case CpTag::Float: {
                std::uint32_t bits;
                std::memcpy(&bits, &e.float_value, sizeof bits);
                out.u32be(bits);
                break;
            }
            case CpTag::Long: {
                std::uint64_t bits = static_cast<std::uint64_t>(e.long_value);
                out.u32be(static_cast<std::uint32_t>(bits >> 32));
                out.u32be(static_cast<std::uint32_t>(bits));
                break;
            }
            case CpTag::Double: {
                std::uint64_t bits;
                std::memcpy(&bits, &e.double_value, sizeof bits);
                out.u32be(static_cast<std::uint32_t>(bits >> 32));
                out.u32be(static_cast<std::uint32_t>(bits));
                break;
            }
            case CpTag::Class:
            case CpTag::String:
            case CpTag::MethodType:
            case CpTag::Module:
            case CpTag::Package:
                out.u16be(e.index1);
                break;
            case CpTag::Fieldref:
            case CpTag::Methodref:
            case CpTag::InterfaceMethodref:
            case CpTag::NameAndType:
            case CpTag::Dynamic:
            case CpTag::InvokeDynamic:
                out.u16be(e.index1);
                out.u16be(e.index2);
                break;
            case CpTag::MethodHandle:
                out.u8(e.ref_kind);
                out.u16be(e.index1);
                break;
        }
    }
    out.u16be(m.access_flags);
    out.u16be(m.this_class);
    out.u16be(m.super_class);
    out.u16be(static_cast<std::uint16_t>(m.interfaces.size()));
    for (auto idx : m.interfaces) out.u16be(idx);
    out.u16be(static_cast<std::uint16_t>(m.fields.size()));
    for (const auto& f : m.fields) {
        out.u16be(f.access_flags);
        out.u16be(f.name_index);
        out.u16be(f.descriptor_index);
        write_attributes(out, f.attributes);
    }
    out.u16be(static_cast<std::uint16_t>(m.methods.size()));
    for (const auto& f : m.methods) {
        out.u16be(f.access_flags);
        out.u16be(f.name_index);
        out.u16be(f.descriptor_index);
        write_attributes(out, f.attributes);
    }
    write_attributes(out, m.attributes);
    return std::move(out.bytes());
}

} // namespace sift
