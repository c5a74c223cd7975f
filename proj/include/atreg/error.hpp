// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace atreg {

enum class ErrorCode {
  kEmptyMesh,
  kEmptyCloud,
  kInvalidArgument,
  kDegenerateCorrespondences,
  kNoValidCorrespondences,
  kAllRestartsFailed,
  kMeshLoadError,
  kDuplicateModelId,
  kManifestError,
  kNoFitFound,
  kSlotNotFound,
  kSlotAccepted,
  kNoActiveFit,
  kHeaderMalformed,
  kBodyTruncated,
  kBodyMalformed,
  kBadFaceIndex,
  kSessionFormatError,
  kIoError,
  kSceneLoadError,
  kBindFailure,
  kUnknownSession,
};

/// Stable snake_case name used on the wire and in CLI diagnostics.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace atreg
