#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bankaudit {

enum class ErrorKind {
  // ingest
  BadMagic,
  UnsupportedVersion,
  TruncatedChunk,
  MalformedGltf,
  NoMesh,
  UnsupportedComponentType,
  CorruptImageHeader,
  DuplicateId,
  MissingField,
  // geometry
  EmptyMesh,
  NotWatertight,
  DegenerateInput,
  NonConvexHull,
  // intervals
  EmptyRuns,
  NonPositiveEstimate,
  InvalidArgument,
  NoInteger,
  NonPositive,
  JudgeUnavailable,
  MalformedReply,
  ConcurrentWrite,
  BadIntervalFile,
  // scale / anchor
  EmptyCategory,
  LengthMismatch,
  ClassifierUnavailable,
  // text
  EmptyDataset,
  BadTokenizer,
  BadConfig,
  // crossmodal
  BadHeader,
  DimMismatch,
  DuplicateRow,
  ZeroNorm,
  NoOverlap,
  MissingTarget,
  MissingQuery,
  // report
  MissingInterval,
  IoFailure,
};

std::string_view to_string(ErrorKind kind) noexcept;
std::optional<ErrorKind> parse_error_kind(std::string_view s) noexcept;

// Every library failure is an Error carrying a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace bankaudit
