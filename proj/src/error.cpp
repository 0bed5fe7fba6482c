#include "voxelcast/error.hpp"

namespace voxelcast {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::MissingMagic: return "MissingMagic";
    case ErrorCode::UnsupportedTransferSyntax: return "UnsupportedTransferSyntax";
    case ErrorCode::UnsupportedPixelFormat: return "UnsupportedPixelFormat";
    case ErrorCode::MissingRequiredTag: return "MissingRequiredTag";
    case ErrorCode::PixelDataLengthMismatch: return "PixelDataLengthMismatch";
    case ErrorCode::MalformedDicom: return "MalformedDicom";
    case ErrorCode::InconsistentGeometry: return "InconsistentGeometry";
    case ErrorCode::NonUniformSpacing: return "NonUniformSpacing";
    case ErrorCode::DuplicatePosition: return "DuplicatePosition";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::InvalidVolume: return "InvalidVolume";
    case ErrorCode::InvalidTransferFunction: return "InvalidTransferFunction";
    case ErrorCode::InvalidBlockSpec: return "InvalidBlockSpec";
    case ErrorCode::EmptyBlock: return "EmptyBlock";
    case ErrorCode::InvalidCamera: return "InvalidCamera";
    case ErrorCode::InvalidSettings: return "InvalidSettings";
    case ErrorCode::IsovalueOutOfRange: return "IsovalueOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidMesh: return "InvalidMesh";
    case ErrorCode::MalformedMesh: return "MalformedMesh";
    case ErrorCode::MalformedImage: return "MalformedImage";
    case ErrorCode::MalformedArchive: return "MalformedArchive";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string field)
    : std::runtime_error(std::string(to_string(code)) + ": " + message)
    , code_(code)
    , field_(std::move(field))
{
}

nlohmann::json to_json(const Error& error)
{
    nlohmann::json j = {{"error", std::string(to_string(error.code()))}, {"message", error.what()}};
    if (!error.field().empty()) j["field"] = error.field();
    return j;
}

}  // namespace voxelcast
