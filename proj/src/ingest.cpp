#include "voxelcast/ingest.hpp"

#include "voxelcast/dicom.hpp"
#include "voxelcast/error.hpp"
#include "voxelcast/zip.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace voxelcast {

ScalarVolume volume_from_dicom_files(const std::vector<std::vector<std::uint8_t>>& files)
{
    std::vector<SliceImage> slices;
    slices.reserve(files.size());
    for (const auto& f : files) slices.push_back(dicom::parse_dicom_slice(f));
    return dicom::assemble_volume(slices);
}

ScalarVolume volume_from_dicom_zip(std::span<const std::uint8_t> archive)
{
    std::vector<zip::Entry> entries = zip::read_archive(archive);
    std::vector<std::vector<std::uint8_t>> files;
    files.reserve(entries.size());
    for (zip::Entry& e : entries) files.push_back(std::move(e.data));
    return volume_from_dicom_files(files);
}

ScalarVolume volume_from_dicom_dir(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) {
        throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<std::vector<std::uint8_t>> files;
    for (const auto& p : paths) files.push_back(read_file(p));
    return volume_from_dicom_files(files);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text)
{
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace voxelcast
