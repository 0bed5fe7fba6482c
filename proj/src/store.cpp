#include "voxelcast/store.hpp"

#include "voxelcast/error.hpp"
#include "voxelcast/ingest.hpp"
#include "voxelcast/raw.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>

namespace voxelcast {

nlohmann::json to_json(const VolumeManifest& m)
{
    return {
        {"id", m.id},
        {"dims", {m.dims.nx, m.dims.ny, m.dims.nz}},
        {"spacing", {m.spacing.x, m.spacing.y, m.spacing.z}},
        {"value_range", {m.value_range.min, m.value_range.max}},
        {"source", to_string(m.source)},
        {"created_at", m.created_at},
    };
}

VolumeManifest volume_manifest_from_json(const nlohmann::json& j)
{
    try {
        VolumeManifest m;
        m.id = j.at("id").get<std::string>();
        const auto& d = j.at("dims");
        m.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
        const auto& s = j.at("spacing");
        m.spacing = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
        const auto& r = j.at("value_range");
        m.value_range = {r.at(0).get<std::int16_t>(), r.at(1).get<std::int16_t>()};
        m.source = volume_source_from_string(j.at("source").get<std::string>());
        m.created_at = j.at("created_at").get<std::string>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("bad manifest: ") + e.what());
    }
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t secs = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

namespace {

std::string random_id()
{
    static std::mutex mutex;
    static std::mt19937_64 engine{std::random_device{}()};
    std::lock_guard lock(mutex);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(engine()));
    return buf;
}

bool valid_id(const std::string& id)
{
    return !id.empty() && id.size() <= 64
        && std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'; });
}

}  // namespace

VolumeStore::VolumeStore(std::filesystem::path dir, std::size_t cache_size)
    : dir_(std::move(dir))
    , cache_size_(std::max<std::size_t>(cache_size, 1))
{
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        const auto& p = entry.path();
        if (p.extension() != ".json") continue;
        const std::string id = p.stem().string();
        if (!valid_id(id) || !std::filesystem::exists(dir_ / (id + ".raw"))) continue;
        const auto bytes = read_file(p);
        const auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
        if (j.is_discarded()) continue;
        VolumeManifest m = volume_manifest_from_json(j);
        if (m.id == id) index_.emplace(id, std::move(m));
    }
}

VolumeManifest VolumeStore::add(const ScalarVolume& volume, VolumeSource source)
{
    VolumeManifest m;
    m.dims = volume.dims();
    m.spacing = volume.spacing();
    m.value_range = volume.value_range();
    m.source = source;
    m.created_at = utc_timestamp();
    std::unique_lock lock(index_mutex_);
    do {
        m.id = random_id();
    } while (index_.contains(m.id));
    // Data first, manifest last: a manifest on disk always has its voxels.
    write_file_atomic(dir_ / (m.id + ".raw"), raw::save_raw(volume));
    write_file_atomic(dir_ / (m.id + ".json"), to_json(m).dump(2));
    index_.emplace(m.id, m);
    return m;
}

std::vector<VolumeManifest> VolumeStore::list() const
{
    std::shared_lock lock(index_mutex_);
    std::vector<VolumeManifest> out;
    for (const auto& [id, m] : index_) out.push_back(m);
    std::sort(out.begin(), out.end(), [](const VolumeManifest& a, const VolumeManifest& b) {
        return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
    });
    return out;
}

std::optional<VolumeManifest> VolumeStore::manifest(const std::string& id) const
{
    std::shared_lock lock(index_mutex_);
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::shared_ptr<const ScalarVolume> VolumeStore::load(const std::string& id)
{
    const auto m = manifest(id);
    if (!m) {
        throw Error(ErrorCode::NotFound, "no volume with id '" + id + "'", "id");
    }
    {
        std::lock_guard lock(cache_mutex_);
        for (auto it = cache_.begin(); it != cache_.end(); ++it) {
            if (it->first == id) {
                cache_.splice(cache_.begin(), cache_, it);
                return cache_.front().second;
            }
        }
    }
    const auto bytes = read_file(dir_ / (id + ".raw"));
    auto volume = std::make_shared<const ScalarVolume>(raw::load_raw(bytes, m->dims, m->spacing, raw::SampleFormat::i16));
    std::lock_guard lock(cache_mutex_);
    cache_.emplace_front(id, volume);
    while (cache_.size() > cache_size_) cache_.pop_back();
    return volume;
}

std::size_t VolumeStore::cached_count() const
{
    std::lock_guard lock(cache_mutex_);
    return cache_.size();
}

}  // namespace voxelcast
