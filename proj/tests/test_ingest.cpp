#include "support.hpp"

#include "voxelcast/dicom.hpp"
#include "voxelcast/error.hpp"
#include "voxelcast/ingest.hpp"
#include "voxelcast/phantom.hpp"
#include "voxelcast/raw.hpp"
#include "voxelcast/zip.hpp"

#include <doctest.h>

#include <cstring>

using namespace voxelcast;
using testsupport::data_path;

namespace {

SliceImage make_slice(int rows, int cols, double z, std::int32_t base = 0)
{
    SliceImage s;
    s.rows = rows;
    s.cols = cols;
    s.pixel_spacing = {0.8, 0.6};
    s.slice_position = z;
    for (int i = 0; i < rows * cols; ++i) s.samples.push_back(base + i * 7 - 50);
    return s;
}

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("hand-encoded fixture zip assembles into the expected volume")
{
    const auto expected = testsupport::read_json(data_path("dicom_3slice.json"));
    const ScalarVolume v = volume_from_dicom_zip(read_file(data_path("dicom_3slice.zip")));
    CHECK(v.dims().nx == expected["dims"][0].get<int>());
    CHECK(v.dims().ny == expected["dims"][1].get<int>());
    CHECK(v.dims().nz == expected["dims"][2].get<int>());
    CHECK(v.spacing().x == doctest::Approx(expected["spacing"][0].get<double>()));
    CHECK(v.spacing().y == doctest::Approx(expected["spacing"][1].get<double>()));
    CHECK(v.spacing().z == doctest::Approx(expected["spacing"][2].get<double>()));
    const auto values = expected["values"].get<std::vector<int>>();
    REQUIRE(values.size() == v.values().size());
    for (std::size_t i = 0; i < values.size(); ++i) CHECK(v.values()[i] == values[i]);
}

TEST_CASE("mixed slice geometry is rejected")
{
    CHECK(code_of([] { volume_from_dicom_zip(read_file(data_path("dicom_mixed.zip"))); }) == ErrorCode::InconsistentGeometry);
}

TEST_CASE("slice writer and parser round-trip bit-exactly")
{
    SliceImage s = make_slice(5, 4, -12.25);
    s.rescale_slope = 1.5;
    s.rescale_intercept = -1024.0;
    const SliceImage back = dicom::parse_dicom_slice(dicom::write_dicom_slice(s));
    CHECK(back.rows == s.rows);
    CHECK(back.cols == s.cols);
    CHECK(back.pixel_spacing == s.pixel_spacing);
    CHECK(back.slice_position == s.slice_position);
    CHECK(back.rescale_slope == s.rescale_slope);
    CHECK(back.rescale_intercept == s.rescale_intercept);
    CHECK(back.samples == s.samples);
}

TEST_CASE("parser error codes")
{
    const SliceImage s = make_slice(2, 2, 0.0);
    SUBCASE("missing DICM magic")
    {
        auto bytes = dicom::write_dicom_slice(s);
        bytes[129] = 'X';
        CHECK(code_of([&] { dicom::parse_dicom_slice(bytes); }) == ErrorCode::MissingMagic);
    }
    SUBCASE("compressed transfer syntax")
    {
        dicom::WriteOptions o;
        o.transfer_syntax = dicom::kJpegBaseline;
        CHECK(code_of([&] { dicom::parse_dicom_slice(dicom::write_dicom_slice(s, o)); }) == ErrorCode::UnsupportedTransferSyntax);
    }
    SUBCASE("implicit VR")
    {
        dicom::WriteOptions o;
        o.transfer_syntax = dicom::kImplicitVrLittleEndian;
        CHECK(code_of([&] { dicom::parse_dicom_slice(dicom::write_dicom_slice(s, o)); }) == ErrorCode::UnsupportedTransferSyntax);
    }
    SUBCASE("8-bit pixels")
    {
        dicom::WriteOptions o;
        o.bits_allocated = 8;
        CHECK(code_of([&] { dicom::parse_dicom_slice(dicom::write_dicom_slice(s, o)); }) == ErrorCode::UnsupportedPixelFormat);
    }
    SUBCASE("no rows tag")
    {
        dicom::WriteOptions o;
        o.omit = {dicom::kRows};
        CHECK(code_of([&] { dicom::parse_dicom_slice(dicom::write_dicom_slice(s, o)); }) == ErrorCode::MissingRequiredTag);
    }
    SUBCASE("no position at all")
    {
        dicom::WriteOptions o;
        o.omit = {dicom::kImagePositionPatient, dicom::kSliceLocation};
        CHECK(code_of([&] { dicom::parse_dicom_slice(dicom::write_dicom_slice(s, o)); }) == ErrorCode::MissingRequiredTag);
    }
    SUBCASE("slice location stands in for image position")
    {
        dicom::WriteOptions o;
        o.omit = {dicom::kImagePositionPatient};
        CHECK(dicom::parse_dicom_slice(dicom::write_dicom_slice(s, o)).slice_position == s.slice_position);
    }
    SUBCASE("truncated pixel data")
    {
        auto bytes = dicom::write_dicom_slice(s);
        // Shrink the declared pixel data length and drop the tail.
        const std::size_t len_at = bytes.size() - 8 - 4;
        std::uint32_t len = 0;
        std::memcpy(&len, bytes.data() + len_at, 4);
        REQUIRE(len == 8);
        len = 6;
        std::memcpy(bytes.data() + len_at, &len, 4);
        bytes.resize(bytes.size() - 2);
        CHECK(code_of([&] { dicom::parse_dicom_slice(bytes); }) == ErrorCode::PixelDataLengthMismatch);
    }
}

TEST_CASE("assembly sorts slices and checks spacing")
{
    SUBCASE("shuffled positions are sorted")
    {
        const std::vector<SliceImage> slices{make_slice(2, 3, 4.0, 200), make_slice(2, 3, 0.0, 0), make_slice(2, 3, 2.0, 100)};
        const ScalarVolume v = dicom::assemble_volume(slices);
        CHECK(v.dims().nx == 3);
        CHECK(v.dims().ny == 2);
        CHECK(v.dims().nz == 3);
        CHECK(v.spacing().x == 0.6);
        CHECK(v.spacing().y == 0.8);
        CHECK(v.spacing().z == 2.0);
        CHECK(v.at(0, 0, 0) == -50);
        CHECK(v.at(0, 0, 1) == 50);
        CHECK(v.at(2, 1, 2) == 200 + 5 * 7 - 50);
    }
    SUBCASE("duplicate positions")
    {
        const std::vector<SliceImage> slices{make_slice(2, 2, 0.0), make_slice(2, 2, 0.0), make_slice(2, 2, 1.0)};
        CHECK(code_of([&] { dicom::assemble_volume(slices); }) == ErrorCode::DuplicatePosition);
    }
    SUBCASE("gap more than 10% off the median")
    {
        const std::vector<SliceImage> slices{make_slice(2, 2, 0.0), make_slice(2, 2, 1.0), make_slice(2, 2, 2.0),
                                             make_slice(2, 2, 3.5)};
        CHECK(code_of([&] { dicom::assemble_volume(slices); }) == ErrorCode::NonUniformSpacing);
    }
    SUBCASE("gap within tolerance")
    {
        const std::vector<SliceImage> slices{make_slice(2, 2, 0.0), make_slice(2, 2, 1.0), make_slice(2, 2, 2.05)};
        CHECK(dicom::assemble_volume(slices).spacing().z == doctest::Approx(1.025));
    }
    SUBCASE("different pixel spacing")
    {
        std::vector<SliceImage> slices{make_slice(2, 2, 0.0), make_slice(2, 2, 1.0)};
        slices[1].pixel_spacing = {0.8, 0.7};
        CHECK(code_of([&] { dicom::assemble_volume(slices); }) == ErrorCode::InconsistentGeometry);
    }
    SUBCASE("single slice")
    {
        const std::vector<SliceImage> slices{make_slice(2, 2, 0.0)};
        CHECK(code_of([&] { dicom::assemble_volume(slices); }) == ErrorCode::InconsistentGeometry);
    }
    SUBCASE("calibration clamps into int16 and counts")
    {
        std::vector<SliceImage> slices{make_slice(2, 2, 0.0), make_slice(2, 2, 1.0)};
        slices[0].samples = {30000, 0, 0, -30000};
        slices[1].samples = {0, 0, 0, 0};
        for (auto& s : slices) s.rescale_slope = 2.0;
        const ScalarVolume v = dicom::assemble_volume(slices);
        CHECK(v.at(0, 0, 0) == 32767);
        CHECK(v.at(1, 1, 0) == -32768);
        CHECK(v.clamped_count() == 2);
    }
}

TEST_CASE("raw volumes round-trip and validate their size")
{
    const ScalarVolume phantom = generate_phantom(PhantomKind::shell, {17, 9, 5});
    const auto bytes = raw::save_raw(phantom);
    CHECK(bytes.size() == 17u * 9u * 5u * 2u);
    const ScalarVolume back = raw::load_raw(bytes, {17, 9, 5}, {1, 1, 1}, raw::SampleFormat::i16);
    CHECK(std::equal(back.values().begin(), back.values().end(), phantom.values().begin(), phantom.values().end()));

    auto short_bytes = bytes;
    short_bytes.pop_back();
    CHECK(code_of([&] { raw::load_raw(short_bytes, {17, 9, 5}, {1, 1, 1}, raw::SampleFormat::i16); }) == ErrorCode::SizeMismatch);

    const std::vector<std::uint8_t> u16{0xff, 0xff, 0x00, 0x80, 0x01, 0x00, 0x00, 0x00, 0, 0, 0, 0, 0, 0, 0, 0};
    const ScalarVolume clamped = raw::load_raw(u16, {2, 2, 2}, {1, 1, 1}, raw::SampleFormat::u16);
    CHECK(clamped.at(0, 0, 0) == 32767);
    CHECK(clamped.at(1, 0, 0) == 32767);
    CHECK(clamped.at(0, 1, 0) == 1);
    CHECK(clamped.clamped_count() == 2);

    const std::vector<std::uint8_t> u8{0, 1, 2, 3, 4, 5, 6, 255};
    CHECK(raw::load_raw(u8, {2, 2, 2}, {1, 1, 1}, raw::SampleFormat::u8).at(1, 1, 1) == 255);
}

TEST_CASE("raw manifest JSON")
{
    const raw::RawManifest m{{4, 5, 6}, {0.5, 0.5, 2.0}, raw::SampleFormat::u16};
    const raw::RawManifest back = raw::raw_manifest_from_json(raw::to_json(m));
    CHECK(back.dims.nx == 4);
    CHECK(back.dims.nz == 6);
    CHECK(back.spacing.z == 2.0);
    CHECK(back.format == raw::SampleFormat::u16);
}

TEST_CASE("zip archives round-trip stored and deflated")
{
    const std::vector<zip::Entry> entries{{"a.bin", {1, 2, 3, 4}}, {"dir/b.bin", std::vector<std::uint8_t>(5000, 42)}};
    for (const bool deflate : {false, true}) {
        const auto archive = zip::write_archive(entries, deflate);
        const auto back = zip::read_archive(archive);
        REQUIRE(back.size() == 2);
        CHECK(back[0].name == "a.bin");
        CHECK(back[0].data == entries[0].data);
        CHECK(back[1].data == entries[1].data);
    }
    auto archive = zip::write_archive(entries);
    archive[30 + 5] ^= 0xff;  // first payload byte
    CHECK(code_of([&] { zip::read_archive(archive); }) == ErrorCode::MalformedArchive);
    CHECK(code_of([] { zip::read_archive(std::vector<std::uint8_t>(10, 0)); }) == ErrorCode::MalformedArchive);
}

TEST_CASE("slices written by the library assemble through a zip")
{
    std::vector<zip::Entry> entries;
    for (int k = 0; k < 4; ++k) {
        entries.push_back({"s" + std::to_string(k), dicom::write_dicom_slice(make_slice(3, 2, 1.5 * (3 - k), 10 * k))});
    }
    const ScalarVolume v = volume_from_dicom_zip(zip::write_archive(entries, true));
    CHECK(v.dims().nz == 4);
    CHECK(v.spacing().z == 1.5);
    CHECK(v.at(0, 0, 0) == 30 - 50);
}

TEST_CASE("phantoms")
{
    const ScalarVolume sphere = generate_phantom(PhantomKind::sphere, {33, 33, 33});
    CHECK(sphere.at(16, 16, 16) == kDenseValue);
    CHECK(sphere.at(0, 0, 0) == kAirValue);
    CHECK(sphere.spacing().x == 1.0);
    const ScalarVolume torso = generate_phantom(PhantomKind::torso, {32, 32, 32});
    CHECK(torso.value_range().min == kAirValue);
    CHECK(torso.value_range().max > 500);
    CHECK(code_of([] { generate_phantom(PhantomKind::sphere, {1, 4, 4}); }) == ErrorCode::InvalidVolume);
}
