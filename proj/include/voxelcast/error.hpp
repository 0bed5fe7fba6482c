#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace voxelcast {

enum class ErrorCode {
    // ingest
    MissingMagic,
    UnsupportedTransferSyntax,
    UnsupportedPixelFormat,
    MissingRequiredTag,
    PixelDataLengthMismatch,
    MalformedDicom,
    InconsistentGeometry,
    NonUniformSpacing,
    DuplicatePosition,
    SizeMismatch,
    InvalidVolume,
    // classification / blocks
    InvalidTransferFunction,
    InvalidBlockSpec,
    EmptyBlock,
    // rendering
    InvalidCamera,
    InvalidSettings,
    IsovalueOutOfRange,
    // quality
    DimensionMismatch,
    // morphology
    InvalidMesh,
    MalformedMesh,
    // plumbing
    MalformedImage,
    MalformedArchive,
    InvalidRequest,
    NotFound,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Domain error carrying a stable code. `field()` names the offending
/// request field when the error comes from validating user input.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string field = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

/// {"error": code, "message": ..., "field": ...}; field omitted when empty.
nlohmann::json to_json(const Error& error);

}  // namespace voxelcast
