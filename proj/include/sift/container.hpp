#pragma once

#include <string>
#include <vector>

#include "sift/bytes.hpp"

namespace sift {

struct ContainerEntry {
    std::string name; // relative path inside the container
    Bytes data;
};

bool looks_like_zip(std::span<const std::uint8_t> raw);
bool looks_like_gzip(std::span<const std::uint8_t> raw);

/// Reads a ZIP/JAR container. Entry data is located through the local file
/// headers; the central directory, when present, supplies sizes for entries
/// written with data descriptors. Store and deflate methods are supported.
std::vector<ContainerEntry> read_zip(std::span<const std::uint8_t> raw);

/// Reads a gzipped (or plain) ustar archive; returns regular files only.
std::vector<ContainerEntry> read_tar_gz(std::span<const std::uint8_t> raw);

/// Raw deflate (zip method 8) / gzip helpers.
Bytes inflate_raw(std::span<const std::uint8_t> compressed, std::uint64_t expected_size);
Bytes gunzip(std::span<const std::uint8_t> compressed);

} // namespace sift
