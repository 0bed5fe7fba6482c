#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace voxelcast::zip {

struct Entry {
    std::string name;
    std::vector<std::uint8_t> data;
};

/// Reads every file entry of a zip archive (stored or deflated; no zip64,
/// no encryption). Directory entries are dropped. Throws MalformedArchive.
std::vector<Entry> read_archive(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> write_archive(const std::vector<Entry>& entries, bool deflate = false);

}  // namespace voxelcast::zip
