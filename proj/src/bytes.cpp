#include "sift/bytes.hpp"

#include <fstream>

namespace sift {

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    in.seekg(0, std::ios::end);
    auto len = in.tellg();
    if (len < 0) throw Error(ErrorCode::IoError, "cannot stat " + path);
    in.seekg(0, std::ios::beg);
    Bytes out(static_cast<std::size_t>(len));
    if (len > 0) in.read(reinterpret_cast<char*>(out.data()), len);
    if (!in) throw Error(ErrorCode::IoError, "short read on " + path);
    return out;
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot create " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write on " + path);
}

} // namespace sift
