#pragma once

#include "voxelcast/ingest.hpp"

#include <json.hpp>

#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

inline std::filesystem::path data_path(const std::string& name)
{
    return std::filesystem::path(VOXELCAST_TEST_DATA) / name;
}

inline nlohmann::json read_json(const std::filesystem::path& p)
{
    const auto bytes = voxelcast::read_file(p);
    return nlohmann::json::parse(bytes.begin(), bytes.end());
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("voxelcast-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testsupport
