#pragma once

#include "voxelcast/volume.hpp"

#include <json.hpp>

#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace voxelcast {

nlohmann::json to_json(const VolumeManifest& manifest);
VolumeManifest volume_manifest_from_json(const nlohmann::json& j);

/// Volumes on disk as <id>.raw (int16 little-endian) plus <id>.json. The
/// index is rebuilt from the directory on construction; decoded volumes are
/// kept in a small LRU cache.
class VolumeStore {
public:
    static constexpr std::size_t kDefaultCacheSize = 4;

    explicit VolumeStore(std::filesystem::path dir, std::size_t cache_size = kDefaultCacheSize);

    VolumeManifest add(const ScalarVolume& volume, VolumeSource source);

    /// Ordered by creation time, then id.
    std::vector<VolumeManifest> list() const;
    std::optional<VolumeManifest> manifest(const std::string& id) const;
    /// Throws NotFound for unknown ids.
    std::shared_ptr<const ScalarVolume> load(const std::string& id);

    const std::filesystem::path& directory() const noexcept { return dir_; }
    std::size_t cached_count() const;

private:
    std::filesystem::path dir_;
    std::size_t cache_size_;
    mutable std::shared_mutex index_mutex_;
    std::map<std::string, VolumeManifest> index_;
    mutable std::mutex cache_mutex_;
    std::list<std::pair<std::string, std::shared_ptr<const ScalarVolume>>> cache_;
};

/// Current UTC time as ISO-8601 with millisecond precision.
std::string utc_timestamp();

}  // namespace voxelcast
