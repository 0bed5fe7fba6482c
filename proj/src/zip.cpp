#include "voxelcast/zip.hpp"

#include "voxelcast/error.hpp"

#include <zlib.h>

#include <cstring>

namespace voxelcast::zip {

namespace {

constexpr std::uint32_t kLocalSignature = 0x04034b50;
constexpr std::uint32_t kCentralSignature = 0x02014b50;
constexpr std::uint32_t kEndSignature = 0x06054b50;
constexpr std::uint16_t kStored = 0;
constexpr std::uint16_t kDeflated = 8;

[[noreturn]] void malformed(const std::string& what)
{
    throw Error(ErrorCode::MalformedArchive, what);
}

std::uint16_t u16(std::span<const std::uint8_t> b, std::size_t at)
{
    if (at + 2 > b.size()) malformed("truncated archive");
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t u32(std::span<const std::uint8_t> b, std::size_t at)
{
    if (at + 4 > b.size()) malformed("truncated archive");
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8)
        | (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> in, std::size_t expected)
{
    std::vector<std::uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) malformed("zlib init failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected) malformed("corrupt deflate stream");
    return out;
}

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> in)
{
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        malformed("zlib init failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    return out;
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    put16(out, static_cast<std::uint16_t>(v));
    put16(out, static_cast<std::uint16_t>(v >> 16));
}

}  // namespace

std::vector<Entry> read_archive(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 22) malformed("too short for a zip archive");
    std::size_t end = std::string::npos;
    const std::size_t lowest = bytes.size() > 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
    for (std::size_t at = bytes.size() - 22 + 1; at-- > lowest;) {
        if (u32(bytes, at) == kEndSignature) {
            end = at;
            break;
        }
    }
    if (end == std::string::npos) malformed("end of central directory not found");
    const std::uint16_t count = u16(bytes, end + 10);
    const std::uint32_t dir_size = u32(bytes, end + 12);
    const std::uint32_t dir_offset = u32(bytes, end + 16);
    if (dir_offset == 0xffffffffu || count == 0xffff) malformed("zip64 archives are not supported");
    if (std::size_t(dir_offset) + dir_size > end) malformed("central directory out of bounds");

    std::vector<Entry> entries;
    std::size_t at = dir_offset;
    for (std::uint16_t i = 0; i < count; ++i) {
        if (u32(bytes, at) != kCentralSignature) malformed("bad central directory entry");
        const std::uint16_t flags = u16(bytes, at + 8);
        const std::uint16_t method = u16(bytes, at + 10);
        const std::uint32_t crc = u32(bytes, at + 16);
        const std::uint32_t packed = u32(bytes, at + 20);
        const std::uint32_t size = u32(bytes, at + 24);
        const std::uint16_t name_len = u16(bytes, at + 28);
        const std::uint16_t extra_len = u16(bytes, at + 30);
        const std::uint16_t comment_len = u16(bytes, at + 32);
        const std::uint32_t local = u32(bytes, at + 42);
        if (at + 46 + name_len > bytes.size()) malformed("truncated file name");
        std::string name(reinterpret_cast<const char*>(bytes.data() + at + 46), name_len);
        at += 46 + std::size_t(name_len) + extra_len + comment_len;

        if (flags & 1u) malformed("encrypted entry '" + name + "'");
        if (!name.empty() && name.back() == '/') continue;
        if (u32(bytes, local) != kLocalSignature) malformed("bad local header for '" + name + "'");
        const std::size_t data_at = local + 30 + std::size_t(u16(bytes, local + 26)) + u16(bytes, local + 28);
        if (data_at + packed > bytes.size()) malformed("entry '" + name + "' out of bounds");
        const std::span<const std::uint8_t> raw = bytes.subspan(data_at, packed);

        Entry e;
        e.name = std::move(name);
        if (method == kStored) {
            if (packed != size) malformed("stored entry size mismatch");
            e.data.assign(raw.begin(), raw.end());
        } else if (method == kDeflated) {
            e.data = inflate_raw(raw, size);
        } else {
            malformed("unsupported compression method " + std::to_string(method));
        }
        if (crc32(0L, e.data.data(), static_cast<uInt>(e.data.size())) != crc) malformed("CRC mismatch in '" + e.name + "'");
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<std::uint8_t> write_archive(const std::vector<Entry>& entries, bool deflate)
{
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> central;
    for (const Entry& e : entries) {
        const auto crc = static_cast<std::uint32_t>(crc32(0L, e.data.data(), static_cast<uInt>(e.data.size())));
        const std::vector<std::uint8_t> packed = deflate ? deflate_raw(e.data) : e.data;
        const std::uint16_t method = deflate ? kDeflated : kStored;
        const auto offset = static_cast<std::uint32_t>(out.size());
        const auto name_len = static_cast<std::uint16_t>(e.name.size());

        put32(out, kLocalSignature);
        put16(out, 20);
        put16(out, 0);
        put16(out, method);
        put32(out, 0);  // time, date
        put32(out, crc);
        put32(out, static_cast<std::uint32_t>(packed.size()));
        put32(out, static_cast<std::uint32_t>(e.data.size()));
        put16(out, name_len);
        put16(out, 0);
        out.insert(out.end(), e.name.begin(), e.name.end());
        out.insert(out.end(), packed.begin(), packed.end());

        put32(central, kCentralSignature);
        put16(central, 20);
        put16(central, 20);
        put16(central, 0);
        put16(central, method);
        put32(central, 0);
        put32(central, crc);
        put32(central, static_cast<std::uint32_t>(packed.size()));
        put32(central, static_cast<std::uint32_t>(e.data.size()));
        put16(central, name_len);
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put16(central, 0);
        put32(central, 0);
        put32(central, offset);
        central.insert(central.end(), e.name.begin(), e.name.end());
    }
    const auto dir_offset = static_cast<std::uint32_t>(out.size());
    out.insert(out.end(), central.begin(), central.end());
    put32(out, kEndSignature);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<std::uint16_t>(entries.size()));
    put16(out, static_cast<std::uint16_t>(entries.size()));
    put32(out, static_cast<std::uint32_t>(central.size()));
    put32(out, dir_offset);
    put16(out, 0);
    return out;
}

}  // namespace voxelcast::zip
