#include "voxelcast/dicom.hpp"

#include "voxelcast/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <string_view>

namespace voxelcast::dicom {

namespace {

constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFFu;
constexpr std::uint32_t kItem = tag(0xFFFE, 0xE000);
constexpr std::uint32_t kItemDelimitation = tag(0xFFFE, 0xE00D);
constexpr std::uint32_t kSequenceDelimitation = tag(0xFFFE, 0xE0DD);

bool has_long_length(std::string_view vr)
{
    static constexpr std::string_view kLong[] = {"OB", "OD", "OF", "OL", "OV", "OW", "SQ", "SV", "UC", "UN", "UR", "UT", "UV"};
    return std::find(std::begin(kLong), std::end(kLong), vr) != std::end(kLong);
}

struct Element {
    std::uint32_t tag = 0;
    std::string vr;
    std::size_t offset = 0;  // value start
    std::uint32_t length = 0;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes, std::size_t pos)
        : bytes_(bytes)
        , pos_(pos)
    {
    }

    bool at_end() const { return pos_ >= bytes_.size(); }
    std::size_t position() const { return pos_; }

    std::uint16_t u16()
    {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    std::uint32_t u32()
    {
        need(4);
        const std::uint32_t v = static_cast<std::uint32_t>(bytes_[pos_]) | (static_cast<std::uint32_t>(bytes_[pos_ + 1]) << 8)
            | (static_cast<std::uint32_t>(bytes_[pos_ + 2]) << 16) | (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    std::uint32_t read_tag()
    {
        const std::uint16_t group = u16();
        const std::uint16_t element = u16();
        return tag(group, element);
    }

    void skip(std::size_t n)
    {
        need(n);
        pos_ += n;
    }

    Element element()
    {
        Element e;
        e.tag = read_tag();
        if ((e.tag >> 16) == 0xFFFE) {
            e.length = u32();
            e.offset = pos_;
            return e;
        }
        need(2);
        e.vr.assign(reinterpret_cast<const char*>(&bytes_[pos_]), 2);
        pos_ += 2;
        if (!std::isupper(static_cast<unsigned char>(e.vr[0])) || !std::isupper(static_cast<unsigned char>(e.vr[1]))) {
            throw Error(ErrorCode::MalformedDicom, "invalid VR at " + format_tag(e.tag));
        }
        if (has_long_length(e.vr)) {
            skip(2);
            e.length = u32();
        } else {
            e.length = u16();
        }
        e.offset = pos_;
        return e;
    }

    /// Skips the value of a sequence element whose header has just been read.
    void skip_sequence(std::uint32_t length)
    {
        if (length != kUndefinedLength) {
            skip(length);
            return;
        }
        while (true) {
            const Element item = element();
            if (item.tag == kSequenceDelimitation) {
                return;
            }
            if (item.tag != kItem) {
                throw Error(ErrorCode::MalformedDicom, "expected sequence item");
            }
            if (item.length != kUndefinedLength) {
                skip(item.length);
                continue;
            }
            skip_item_dataset();
        }
    }

private:
    void skip_item_dataset()
    {
        while (true) {
            const Element e = element();
            if (e.tag == kItemDelimitation) {
                return;
            }
            if (e.vr == "SQ" || e.length == kUndefinedLength) {
                skip_sequence(e.length);
            } else {
                skip(e.length);
            }
        }
    }

    void need(std::size_t n) const
    {
        if (pos_ + n > bytes_.size()) {
            throw Error(ErrorCode::MalformedDicom, "truncated element");
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_;
};

std::string trimmed(std::span<const std::uint8_t> bytes, const Element& e)
{
    std::string s(reinterpret_cast<const char*>(bytes.data() + e.offset), e.length);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) {
        s.pop_back();
    }
    std::size_t first = 0;
    while (first < s.size() && s[first] == ' ') {
        ++first;
    }
    return s.substr(first);
}

std::vector<double> decimal_strings(const std::string& text, std::uint32_t t)
{
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\\', start);
        if (end == std::string::npos) end = text.size();
        std::string token = text.substr(start, end - start);
        token.erase(0, token.find_first_not_of(' '));
        token.erase(token.find_last_not_of(' ') + 1);
        if (!token.empty()) {
            char* stop = nullptr;
            const double v = std::strtod(token.c_str(), &stop);
            if (stop == token.c_str()) {
                throw Error(ErrorCode::MalformedDicom, "bad decimal string in " + format_tag(t));
            }
            out.push_back(v);
        }
        start = end + 1;
    }
    return out;
}

std::uint16_t us_value(std::span<const std::uint8_t> bytes, const Element& e)
{
    if (e.length < 2) {
        throw Error(ErrorCode::MalformedDicom, "short US value in " + format_tag(e.tag));
    }
    return static_cast<std::uint16_t>(bytes[e.offset] | (bytes[e.offset + 1] << 8));
}

}  // namespace

std::string format_tag(std::uint32_t t)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "(%04X,%04X)", t >> 16, t & 0xFFFF);
    return buf;
}

SliceImage parse_dicom_slice(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 132 || std::memcmp(bytes.data() + 128, "DICM", 4) != 0) {
        throw Error(ErrorCode::MissingMagic, "no DICM marker at offset 128");
    }

    std::map<std::uint32_t, Element> wanted;
    const auto is_wanted = [](std::uint32_t t) {
        switch (t) {
        case kTransferSyntaxUid:
        case kImagePositionPatient:
        case kSliceLocation:
        case kSamplesPerPixel:
        case kNumberOfFrames:
        case kRows:
        case kColumns:
        case kPixelSpacing:
        case kBitsAllocated:
        case kPixelRepresentation:
        case kRescaleIntercept:
        case kRescaleSlope:
        case kPixelData:
            return true;
        default:
            return false;
        }
    };

    Reader reader(bytes, 132);
    bool syntax_checked = false;
    while (!reader.at_end()) {
        const Element e = reader.element();
        if (!syntax_checked && (e.tag >> 16) != 0x0002) {
            // File meta group is over; the dataset encoding must now be known.
            const auto ts = wanted.find(kTransferSyntaxUid);
            if (ts == wanted.end()) {
                throw Error(ErrorCode::MissingRequiredTag, "TransferSyntaxUID " + format_tag(kTransferSyntaxUid) + " absent",
                            format_tag(kTransferSyntaxUid));
            }
            const std::string uid = trimmed(bytes, ts->second);
            if (uid != kExplicitVrLittleEndian) {
                throw Error(ErrorCode::UnsupportedTransferSyntax, "transfer syntax " + uid + " is not explicit VR little endian");
            }
            syntax_checked = true;
        }
        if (e.length == kUndefinedLength) {
            if (e.tag == kPixelData) {
                throw Error(ErrorCode::UnsupportedTransferSyntax, "encapsulated pixel data");
            }
            if (e.vr != "SQ" && e.vr != "UN") {
                throw Error(ErrorCode::MalformedDicom, "undefined length on " + format_tag(e.tag));
            }
            reader.skip_sequence(e.length);
            continue;
        }
        if (is_wanted(e.tag)) {
            wanted[e.tag] = e;
        }
        if (e.tag == kPixelData) {
            if (e.offset + e.length > bytes.size()) {
                throw Error(ErrorCode::PixelDataLengthMismatch, "pixel data runs past end of file");
            }
        }
        if (e.vr == "SQ") {
            reader.skip_sequence(e.length);
        } else {
            reader.skip(e.length);
        }
    }
    if (!syntax_checked) {
        throw Error(ErrorCode::MissingRequiredTag, "dataset is empty", format_tag(kPixelData));
    }

    const auto require = [&](std::uint32_t t, const char* name) -> const Element& {
        const auto it = wanted.find(t);
        if (it == wanted.end()) {
            throw Error(ErrorCode::MissingRequiredTag, std::string(name) + " " + format_tag(t) + " absent", format_tag(t));
        }
        return it->second;
    };

    SliceImage slice;
    slice.rows = us_value(bytes, require(kRows, "Rows"));
    slice.cols = us_value(bytes, require(kColumns, "Columns"));
    const std::uint16_t bits = us_value(bytes, require(kBitsAllocated, "BitsAllocated"));
    if (bits != 16) {
        throw Error(ErrorCode::UnsupportedPixelFormat, "BitsAllocated is " + std::to_string(bits) + ", expected 16");
    }
    if (const auto it = wanted.find(kSamplesPerPixel); it != wanted.end() && us_value(bytes, it->second) != 1) {
        throw Error(ErrorCode::UnsupportedPixelFormat, "only single-sample (grayscale) pixels are supported");
    }
    if (const auto it = wanted.find(kNumberOfFrames); it != wanted.end()) {
        const auto frames = decimal_strings(trimmed(bytes, it->second), kNumberOfFrames);
        if (!frames.empty() && frames[0] > 1.0) {
            throw Error(ErrorCode::UnsupportedPixelFormat, "multi-frame images are not supported");
        }
    }
    slice.signed_samples = false;
    if (const auto it = wanted.find(kPixelRepresentation); it != wanted.end()) {
        slice.signed_samples = us_value(bytes, it->second) == 1;
    }

    const auto spacing = decimal_strings(trimmed(bytes, require(kPixelSpacing, "PixelSpacing")), kPixelSpacing);
    if (spacing.size() != 2) {
        throw Error(ErrorCode::MalformedDicom, "PixelSpacing needs two values");
    }
    slice.pixel_spacing = {spacing[0], spacing[1]};

    if (const auto it = wanted.find(kImagePositionPatient); it != wanted.end()) {
        const auto pos = decimal_strings(trimmed(bytes, it->second), kImagePositionPatient);
        if (pos.size() != 3) {
            throw Error(ErrorCode::MalformedDicom, "ImagePositionPatient needs three values");
        }
        slice.slice_position = pos[2];
    } else if (const auto loc = wanted.find(kSliceLocation); loc != wanted.end()) {
        const auto v = decimal_strings(trimmed(bytes, loc->second), kSliceLocation);
        if (v.empty()) {
            throw Error(ErrorCode::MalformedDicom, "empty SliceLocation");
        }
        slice.slice_position = v[0];
    } else {
        throw Error(ErrorCode::MissingRequiredTag, "ImagePositionPatient " + format_tag(kImagePositionPatient)
                        + " and SliceLocation " + format_tag(kSliceLocation) + " both absent",
                    format_tag(kImagePositionPatient));
    }

    if (const auto it = wanted.find(kRescaleSlope); it != wanted.end()) {
        const auto v = decimal_strings(trimmed(bytes, it->second), kRescaleSlope);
        if (!v.empty()) slice.rescale_slope = v[0];
    }
    if (const auto it = wanted.find(kRescaleIntercept); it != wanted.end()) {
        const auto v = decimal_strings(trimmed(bytes, it->second), kRescaleIntercept);
        if (!v.empty()) slice.rescale_intercept = v[0];
    }

    const Element& pixels = require(kPixelData, "PixelData");
    const std::size_t count = static_cast<std::size_t>(slice.rows) * static_cast<std::size_t>(slice.cols);
    if (pixels.length != count * 2) {
        throw Error(ErrorCode::PixelDataLengthMismatch,
                    "PixelData holds " + std::to_string(pixels.length) + " bytes, expected " + std::to_string(count * 2));
    }
    slice.samples.resize(count);
    const std::uint8_t* p = bytes.data() + pixels.offset;
    for (std::size_t i = 0; i < count; ++i) {
        const auto raw = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
        slice.samples[i] = slice.signed_samples ? static_cast<std::int16_t>(raw) : static_cast<std::int32_t>(raw);
    }
    return slice;
}

// ---------------------------------------------------------------------------
// Writer

namespace {

class Writer {
public:
    void raw(const void* data, std::size_t n)
    {
        const auto* p = static_cast<const std::uint8_t*>(data);
        out_.insert(out_.end(), p, p + n);
    }
    void u16(std::uint16_t v)
    {
        out_.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }

    void element(std::uint32_t t, std::string_view vr, std::span<const std::uint8_t> value)
    {
        u16(static_cast<std::uint16_t>(t >> 16));
        u16(static_cast<std::uint16_t>(t & 0xFFFF));
        raw(vr.data(), 2);
        if (has_long_length(vr)) {
            u16(0);
            u32(static_cast<std::uint32_t>(value.size()));
        } else {
            u16(static_cast<std::uint16_t>(value.size()));
        }
        raw(value.data(), value.size());
    }

    void text(std::uint32_t t, std::string_view vr, std::string value)
    {
        if (value.size() % 2 != 0) value.push_back(vr == "UI" ? '\0' : ' ');
        element(t, vr, {reinterpret_cast<const std::uint8_t*>(value.data()), value.size()});
    }

    void us(std::uint32_t t, std::uint16_t v)
    {
        const std::uint8_t b[2] = {static_cast<std::uint8_t>(v & 0xFF), static_cast<std::uint8_t>(v >> 8)};
        element(t, "US", b);
    }

    std::vector<std::uint8_t>& bytes() { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

std::string decimal(double v)
{
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.size() > 16) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        s = buf;
    }
    return s;
}

}  // namespace

std::vector<std::uint8_t> write_dicom_slice(const SliceImage& slice, const WriteOptions& options)
{
    slice.validate();
    const auto keep = [&](std::uint32_t t) { return options.omit.count(t) == 0; };

    Writer meta;
    const std::uint8_t version[2] = {0x00, 0x01};
    meta.element(tag(0x0002, 0x0001), "OB", version);
    meta.text(tag(0x0002, 0x0002), "UI", "1.2.840.10008.5.1.4.1.1.2");
    meta.text(tag(0x0002, 0x0003), "UI", "1.2.826.0.1.3680043.10.1." + decimal(std::round(slice.slice_position * 1000.0) + 1e6));
    if (keep(kTransferSyntaxUid)) {
        meta.text(kTransferSyntaxUid, "UI", options.transfer_syntax);
    }
    meta.text(tag(0x0002, 0x0012), "UI", "1.2.826.0.1.3680043.10.1");

    Writer out;
    out.bytes().assign(128, 0);
    out.raw("DICM", 4);
    const std::uint32_t meta_length = static_cast<std::uint32_t>(meta.bytes().size());
    const std::uint8_t group_length[4] = {static_cast<std::uint8_t>(meta_length & 0xFF), static_cast<std::uint8_t>((meta_length >> 8) & 0xFF),
                                          static_cast<std::uint8_t>((meta_length >> 16) & 0xFF),
                                          static_cast<std::uint8_t>(meta_length >> 24)};
    out.element(tag(0x0002, 0x0000), "UL", group_length);
    out.raw(meta.bytes().data(), meta.bytes().size());

    out.text(tag(0x0008, 0x0016), "UI", "1.2.840.10008.5.1.4.1.1.2");
    out.text(tag(0x0008, 0x0060), "CS", "CT");
    if (keep(kImagePositionPatient)) {
        out.text(kImagePositionPatient, "DS", "0\\0\\" + decimal(slice.slice_position));
    }
    if (keep(kSliceLocation)) {
        out.text(kSliceLocation, "DS", decimal(slice.slice_position));
    }
    out.us(kSamplesPerPixel, 1);
    out.text(tag(0x0028, 0x0004), "CS", "MONOCHROME2");
    if (keep(kRows)) out.us(kRows, static_cast<std::uint16_t>(slice.rows));
    if (keep(kColumns)) out.us(kColumns, static_cast<std::uint16_t>(slice.cols));
    if (keep(kPixelSpacing)) {
        out.text(kPixelSpacing, "DS", decimal(slice.pixel_spacing[0]) + "\\" + decimal(slice.pixel_spacing[1]));
    }
    if (keep(kBitsAllocated)) out.us(kBitsAllocated, static_cast<std::uint16_t>(options.bits_allocated));
    out.us(tag(0x0028, 0x0101), static_cast<std::uint16_t>(options.bits_allocated));
    out.us(tag(0x0028, 0x0102), static_cast<std::uint16_t>(options.bits_allocated - 1));
    out.us(kPixelRepresentation, slice.signed_samples ? 1 : 0);
    if (keep(kRescaleIntercept)) out.text(kRescaleIntercept, "DS", decimal(slice.rescale_intercept));
    if (keep(kRescaleSlope)) out.text(kRescaleSlope, "DS", decimal(slice.rescale_slope));
    if (keep(kPixelData)) {
        std::vector<std::uint8_t> pixels;
        pixels.reserve(slice.samples.size() * 2);
        for (const std::int32_t s : slice.samples) {
            const auto v = static_cast<std::uint16_t>(s);
            pixels.push_back(static_cast<std::uint8_t>(v & 0xFF));
            pixels.push_back(static_cast<std::uint8_t>(v >> 8));
        }
        out.element(kPixelData, "OW", pixels);
    }
    return std::move(out.bytes());
}

// ---------------------------------------------------------------------------
// Assembly

ScalarVolume assemble_volume(std::span<const SliceImage> slices)
{
    if (slices.size() < 2) {
        throw Error(ErrorCode::InconsistentGeometry, "at least two slices are required");
    }
    for (const SliceImage& s : slices) {
        s.validate();
    }
    const SliceImage& first = slices.front();
    for (const SliceImage& s : slices) {
        if (s.rows != first.rows || s.cols != first.cols || s.pixel_spacing != first.pixel_spacing) {
            throw Error(ErrorCode::InconsistentGeometry, "slices differ in rows, columns or pixel spacing");
        }
    }

    std::vector<const SliceImage*> order;
    order.reserve(slices.size());
    for (const SliceImage& s : slices) order.push_back(&s);
    std::sort(order.begin(), order.end(),
              [](const SliceImage* a, const SliceImage* b) { return a->slice_position < b->slice_position; });

    std::vector<double> gaps;
    for (std::size_t i = 1; i < order.size(); ++i) {
        const double gap = order[i]->slice_position - order[i - 1]->slice_position;
        if (gap == 0.0) {
            throw Error(ErrorCode::DuplicatePosition,
                        "two slices share position " + std::to_string(order[i]->slice_position));
        }
        gaps.push_back(gap);
    }
    std::vector<double> sorted_gaps = gaps;
    std::sort(sorted_gaps.begin(), sorted_gaps.end());
    const std::size_t mid = sorted_gaps.size() / 2;
    const double median = sorted_gaps.size() % 2 == 1 ? sorted_gaps[mid] : 0.5 * (sorted_gaps[mid - 1] + sorted_gaps[mid]);
    for (const double gap : gaps) {
        if (std::abs(gap - median) > 0.1 * median) {
            throw Error(ErrorCode::NonUniformSpacing,
                        "slice gap " + std::to_string(gap) + " deviates from median " + std::to_string(median) + " by more than 10%");
        }
    }

    const Dims dims{first.cols, first.rows, static_cast<int>(order.size())};
    std::vector<std::int16_t> values;
    values.reserve(dims.voxel_count());
    std::size_t clamped = 0;
    constexpr double lo = std::numeric_limits<std::int16_t>::min();
    constexpr double hi = std::numeric_limits<std::int16_t>::max();
    for (const SliceImage* s : order) {
        for (const std::int32_t raw : s->samples) {
            double v = std::round(s->rescale_slope * raw + s->rescale_intercept);
            if (v < lo || v > hi) {
                ++clamped;
                v = std::clamp(v, lo, hi);
            }
            values.push_back(static_cast<std::int16_t>(v));
        }
    }
    const Vec3 spacing{first.pixel_spacing[1], first.pixel_spacing[0], median};
    return ScalarVolume(dims, spacing, std::move(values), clamped);
}

}  // namespace voxelcast::dicom
