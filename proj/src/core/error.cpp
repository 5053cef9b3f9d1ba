#include "bankaudit/core/error.hpp"

namespace bankaudit {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::TruncatedChunk: return "TruncatedChunk";
    case ErrorKind::MalformedGltf: return "MalformedGltf";
    case ErrorKind::NoMesh: return "NoMesh";
    case ErrorKind::UnsupportedComponentType: return "UnsupportedComponentType";
    case ErrorKind::CorruptImageHeader: return "CorruptImageHeader";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::MissingField: return "MissingField";
    case ErrorKind::EmptyMesh: return "EmptyMesh";
    case ErrorKind::NotWatertight: return "NotWatertight";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::NonConvexHull: return "NonConvexHull";
    case ErrorKind::EmptyRuns: return "EmptyRuns";
    case ErrorKind::NonPositiveEstimate: return "NonPositiveEstimate";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NoInteger: return "NoInteger";
    case ErrorKind::NonPositive: return "NonPositive";
    case ErrorKind::JudgeUnavailable: return "JudgeUnavailable";
    case ErrorKind::MalformedReply: return "MalformedReply";
    case ErrorKind::ConcurrentWrite: return "ConcurrentWrite";
    case ErrorKind::BadIntervalFile: return "BadIntervalFile";
    case ErrorKind::EmptyCategory: return "EmptyCategory";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ClassifierUnavailable: return "ClassifierUnavailable";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::BadTokenizer: return "BadTokenizer";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::BadHeader: return "BadHeader";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::DuplicateRow: return "DuplicateRow";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::MissingTarget: return "MissingTarget";
    case ErrorKind::MissingQuery: return "MissingQuery";
    case ErrorKind::MissingInterval: return "MissingInterval";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

std::optional<ErrorKind> parse_error_kind(std::string_view s) noexcept {
  for (int k = 0; k <= static_cast<int>(ErrorKind::IoFailure); ++k)
    if (to_string(static_cast<ErrorKind>(k)) == s) return static_cast<ErrorKind>(k);
  return std::nullopt;
}

}  // namespace bankaudit
