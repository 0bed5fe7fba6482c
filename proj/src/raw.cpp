#include "voxelcast/raw.hpp"

#include "voxelcast/error.hpp"

namespace voxelcast::raw {

std::string to_string(SampleFormat format)
{
    switch (format) {
    case SampleFormat::u8: return "u8";
    case SampleFormat::i16: return "i16";
    case SampleFormat::u16: return "u16";
    }
    return "i16";
}

SampleFormat sample_format_from_string(const std::string& name)
{
    if (name == "u8") return SampleFormat::u8;
    if (name == "i16") return SampleFormat::i16;
    if (name == "u16") return SampleFormat::u16;
    throw Error(ErrorCode::InvalidRequest, "unknown sample format '" + name + "'", "sample_format");
}

std::size_t sample_width(SampleFormat format)
{
    return format == SampleFormat::u8 ? 1 : 2;
}

nlohmann::json to_json(const RawManifest& manifest)
{
    return {
        {"dims", {manifest.dims.nx, manifest.dims.ny, manifest.dims.nz}},
        {"spacing", {manifest.spacing.x, manifest.spacing.y, manifest.spacing.z}},
        {"sample_format", to_string(manifest.format)},
        {"endianness", "little"},
    };
}

RawManifest raw_manifest_from_json(const nlohmann::json& j)
{
    try {
        RawManifest m;
        const auto& d = j.at("dims");
        m.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
        if (j.contains("spacing")) {
            const auto& s = j.at("spacing");
            m.spacing = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
        }
        m.format = sample_format_from_string(j.value("sample_format", std::string("i16")));
        if (j.value("endianness", std::string("little")) != "little") {
            throw Error(ErrorCode::InvalidRequest, "only little-endian raw data is supported", "endianness");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("bad raw manifest: ") + e.what());
    }
}

ScalarVolume load_raw(std::span<const std::uint8_t> bytes, Dims dims, Vec3 spacing, SampleFormat format)
{
    if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) {
        throw Error(ErrorCode::InvalidVolume, "dimensions must be positive");
    }
    const std::size_t count = dims.voxel_count();
    const std::size_t expected = count * sample_width(format);
    if (bytes.size() != expected) {
        throw Error(ErrorCode::SizeMismatch,
                    "payload has " + std::to_string(bytes.size()) + " bytes, expected " + std::to_string(expected));
    }
    std::vector<std::int16_t> values(count);
    std::size_t clamped = 0;
    switch (format) {
    case SampleFormat::u8:
        for (std::size_t i = 0; i < count; ++i) values[i] = bytes[i];
        break;
    case SampleFormat::i16:
        for (std::size_t i = 0; i < count; ++i) {
            values[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8)));
        }
        break;
    case SampleFormat::u16:
        for (std::size_t i = 0; i < count; ++i) {
            const auto v = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
            if (v > 32767) {
                ++clamped;
                values[i] = 32767;
            } else {
                values[i] = static_cast<std::int16_t>(v);
            }
        }
        break;
    }
    return ScalarVolume(dims, spacing, std::move(values), clamped);
}

std::vector<std::uint8_t> save_raw(const ScalarVolume& volume)
{
    const auto values = volume.values();
    std::vector<std::uint8_t> out(values.size() * 2);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto v = static_cast<std::uint16_t>(values[i]);
        out[2 * i] = static_cast<std::uint8_t>(v & 0xFF);
        out[2 * i + 1] = static_cast<std::uint8_t>(v >> 8);
    }
    return out;
}

}  // namespace voxelcast::raw
