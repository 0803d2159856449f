#include "sift/container.hpp"

#include <algorithm>
#include <cstring>

#include <zlib.h>

namespace sift {

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint64_t kMaxEntrySize = 1ULL << 31; // refuse absurd sizes up front

struct CentralRecord {
    std::uint16_t flags = 0;
    std::uint16_t method = 0;
    std::uint32_t compressed_size = 0;
    std::uint32_t uncompressed_size = 0;
    std::uint32_t local_offset = 0;
    std::string name;
};

std::vector<CentralRecord> read_central_directory(std::span<const std::uint8_t> raw) {
    // EOCD sits in the last 22..22+65535 bytes; scan backwards for the signature.
    std::vector<CentralRecord> records;
    if (raw.size() < 22) return records;
    std::size_t scan_limit = raw.size() >= 22 + 65535 ? raw.size() - 22 - 65535 : 0;
    std::size_t eocd = std::string::npos;
    for (std::size_t pos = raw.size() - 22 + 1; pos-- > scan_limit;) {
        if (raw[pos] == 0x50 && raw[pos + 1] == 0x4b && raw[pos + 2] == 0x05 && raw[pos + 3] == 0x06) {
            eocd = pos;
            break;
        }
    }
    if (eocd == std::string::npos) return records;

    ByteReader in(raw);
    in.seek(eocd);
    if (in.u32le() != kEocdSig) return records;
    in.skip(6); // disk numbers, entries on this disk
    std::uint16_t total_entries = in.u16le();
    in.u32le(); // central directory size
    std::uint32_t cd_offset = in.u32le();
    if (cd_offset >= raw.size()) return records;

    in.seek(cd_offset);
    records.reserve(total_entries);
    for (std::uint16_t i = 0; i < total_entries; ++i) {
        if (in.remaining() < 4 || in.u32le() != kCentralHeaderSig) break;
        CentralRecord rec;
        in.skip(4); // version made by, version needed
        rec.flags = in.u16le();
        rec.method = in.u16le();
        in.skip(8); // mtime, crc32
        rec.compressed_size = in.u32le();
        rec.uncompressed_size = in.u32le();
        std::uint16_t name_len = in.u16le();
        std::uint16_t extra_len = in.u16le();
        std::uint16_t comment_len = in.u16le();
        in.skip(8); // disk, internal attrs, external attrs
        rec.local_offset = in.u32le();
        rec.name = in.str(name_len);
        in.skip(std::size_t(extra_len) + comment_len);
        records.push_back(std::move(rec));
    }
    return records;
}

ContainerEntry read_entry_at_local_header(std::span<const std::uint8_t> raw, ByteReader& in,
                                          const CentralRecord* central) {
    // caller has consumed the signature
    in.skip(2); // version needed
    std::uint16_t flags = in.u16le();
    std::uint16_t method = in.u16le();
    in.skip(8); // mtime, crc32
    std::uint32_t comp_size = in.u32le();
    std::uint32_t uncomp_size = in.u32le();
    std::uint16_t name_len = in.u16le();
    std::uint16_t extra_len = in.u16le();
    ContainerEntry entry;
    entry.name = in.str(name_len);
    in.skip(extra_len);

    if (flags & 0x8) { // sizes live in the data descriptor; recover from central directory
        if (!central)
            throw Error(ErrorCode::UnreadableArchive,
                        "streamed entry without central directory: " + entry.name);
        comp_size = central->compressed_size;
        uncomp_size = central->uncompressed_size;
    }
    if (comp_size > kMaxEntrySize || uncomp_size > kMaxEntrySize)
        throw Error(ErrorCode::UnreadableArchive, "entry too large: " + entry.name);

    auto payload = in.raw(comp_size);
    if (method == 0) {
        if (comp_size != uncomp_size)
            throw Error(ErrorCode::UnreadableArchive, "stored entry size mismatch: " + entry.name);
        entry.data.assign(payload.begin(), payload.end());
    } else if (method == 8) {
        entry.data = inflate_raw(payload, uncomp_size);
    } else {
        throw Error(ErrorCode::UnreadableArchive,
                    "unsupported compression method " + std::to_string(method) + ": " + entry.name);
    }
    (void)raw;
    return entry;
}

} // namespace

bool looks_like_zip(std::span<const std::uint8_t> raw) {
    return raw.size() >= 4 && raw[0] == 0x50 && raw[1] == 0x4b &&
           (raw[2] == 0x03 || raw[2] == 0x05 || raw[2] == 0x07);
}

bool looks_like_gzip(std::span<const std::uint8_t> raw) {
    return raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b;
}

Bytes inflate_raw(std::span<const std::uint8_t> compressed, std::uint64_t expected_size) {
    Bytes out(expected_size);
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK)
        throw Error(ErrorCode::UnreadableArchive, "inflate init failed");
    zs.next_in = const_cast<Bytef*>(compressed.data());
    zs.avail_in = static_cast<uInt>(compressed.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    bool ok = (rc == Z_STREAM_END) && zs.total_out == expected_size;
    inflateEnd(&zs);
    if (!ok) throw Error(ErrorCode::UnreadableArchive, "deflate stream corrupt or size mismatch");
    return out;
}

Bytes gunzip(std::span<const std::uint8_t> compressed) {
    Bytes out;
    out.resize(std::max<std::size_t>(compressed.size() * 4, 4096));
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK)
        throw Error(ErrorCode::UnreadableArchive, "gzip init failed");
    zs.next_in = const_cast<Bytef*>(compressed.data());
    zs.avail_in = static_cast<uInt>(compressed.size());
    std::size_t written = 0;
    int rc = Z_OK;
    while (true) {
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        rc = inflate(&zs, Z_NO_FLUSH);
        written = zs.total_out;
        if (rc == Z_STREAM_END) break;
        if (rc != Z_OK && rc != Z_BUF_ERROR) {
            inflateEnd(&zs);
            throw Error(ErrorCode::UnreadableArchive, "gzip stream corrupt");
        }
        if (written == out.size()) {
            if (out.size() > kMaxEntrySize) {
                inflateEnd(&zs);
                throw Error(ErrorCode::UnreadableArchive, "gzip output too large");
            }
            out.resize(out.size() * 2);
        } else if (rc == Z_BUF_ERROR) {
            inflateEnd(&zs);
            throw Error(ErrorCode::UnreadableArchive, "gzip stream truncated");
        }
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

std::vector<ContainerEntry> read_zip(std::span<const std::uint8_t> raw) {
    std::vector<ContainerEntry> entries;
    auto central = read_central_directory(raw);

    if (!central.empty()) {
        for (const auto& rec : central) {
            if (!rec.name.empty() && rec.name.back() == '/') continue; // directory
            ByteReader in(raw);
            in.seek(rec.local_offset);
            if (in.u32le() != kLocalHeaderSig)
                throw Error(ErrorCode::UnreadableArchive, "bad local header for " + rec.name);
            entries.push_back(read_entry_at_local_header(raw, in, &rec));
        }
        return entries;
    }

    // No central directory: sequential local-file-header scan.
    ByteReader in(raw);
    bool saw_any = false;
    while (in.remaining() >= 4) {
        std::size_t sig_pos = in.offset();
        std::uint32_t sig = in.u32le();
        if (sig != kLocalHeaderSig) {
            in.seek(sig_pos);
            break;
        }
        saw_any = true;
        ContainerEntry e = read_entry_at_local_header(raw, in, nullptr);
        if (!e.name.empty() && e.name.back() != '/') entries.push_back(std::move(e));
    }
    if (!saw_any) throw Error(ErrorCode::UnreadableArchive, "no zip entries found");
    return entries;
}

std::vector<ContainerEntry> read_tar_gz(std::span<const std::uint8_t> raw) {
    Bytes tar = looks_like_gzip(raw) ? gunzip(raw) : Bytes(raw.begin(), raw.end());
    std::vector<ContainerEntry> entries;
    std::size_t pos = 0;
    while (pos + 512 <= tar.size()) {
        const std::uint8_t* hdr = tar.data() + pos;
        bool all_zero = std::all_of(hdr, hdr + 512, [](std::uint8_t b) { return b == 0; });
        if (all_zero) break;

        auto field_str = [&](std::size_t off, std::size_t len) {
            std::size_t end = off;
            while (end < off + len && hdr[end] != 0) ++end;
            return std::string(reinterpret_cast<const char*>(hdr + off), end - off);
        };
        std::string name = field_str(0, 100);
        std::string prefix = field_str(345, 155);
        if (!prefix.empty()) name = prefix + "/" + name;

        std::uint64_t size = 0;
        for (std::size_t i = 124; i < 124 + 12; ++i) {
            char c = static_cast<char>(hdr[i]);
            if (c == ' ' || c == 0) continue;
            if (c < '0' || c > '7')
                throw Error(ErrorCode::UnreadableArchive, "bad tar size field in " + name);
            size = size * 8 + std::uint64_t(c - '0');
        }
        if (size > kMaxEntrySize) throw Error(ErrorCode::UnreadableArchive, "tar entry too large");
        char typeflag = static_cast<char>(hdr[156]);
        pos += 512;
        if (pos + size > tar.size())
            throw Error(ErrorCode::UnreadableArchive, "tar truncated at " + name);
        if (typeflag == '0' || typeflag == 0) {
            ContainerEntry e;
            e.name = std::move(name);
            e.data.assign(tar.begin() + pos, tar.begin() + pos + size);
            entries.push_back(std::move(e));
        }
        pos += (size + 511) / 512 * 512;
    }
    return entries;
}

} // namespace sift
