#pragma once

#include "voxelcast/error.hpp"
#include "voxelcast/store.hpp"

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace voxelcast {

struct ServiceConfig {
    std::string host = "0.0.0.0";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path data_dir = "voxelcast-data";
    std::size_t cache_size = VolumeStore::kDefaultCacheSize;
    std::size_t upload_cap = std::size_t{2} << 30;
    /// Renders in flight beyond this bound are refused with 503.
    int queue_bound = 8;
    unsigned render_threads = 0;
    /// Optional directory served under /viewer.
    std::optional<std::filesystem::path> static_dir;
};

/// HTTP front end over a VolumeStore.
///
///   GET  /healthz
///   POST /volumes                                (multipart: dicom_zip | raw + manifest | phantom)
///   GET  /volumes
///   GET  /volumes/{id}
///   POST /volumes/{id}/render                    (RenderRequest JSON -> PNG)
///   GET  /volumes/{id}/slices/{axis}/{index}     (?window=&level= -> grayscale PNG)
class RenderService {
public:
    explicit RenderService(ServiceConfig config);
    ~RenderService();

    /// Binds the listening socket; returns the port.
    int bind();
    /// Serves until stop(). Requires bind().
    void serve();
    void stop();

    VolumeStore& store();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP status for a domain error code.
int http_status(ErrorCode code);

}  // namespace voxelcast
