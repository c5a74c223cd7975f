// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/error.hpp"

namespace atreg {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyMesh: return "empty_mesh";
    case ErrorCode::kEmptyCloud: return "empty_cloud";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDegenerateCorrespondences: return "degenerate_correspondences";
    case ErrorCode::kNoValidCorrespondences: return "no_valid_correspondences";
    case ErrorCode::kAllRestartsFailed: return "all_restarts_failed";
    case ErrorCode::kMeshLoadError: return "mesh_load_error";
    case ErrorCode::kDuplicateModelId: return "duplicate_model_id";
    case ErrorCode::kManifestError: return "manifest_error";
    case ErrorCode::kNoFitFound: return "no_fit_found";
    case ErrorCode::kSlotNotFound: return "slot_not_found";
    case ErrorCode::kSlotAccepted: return "slot_accepted";
    case ErrorCode::kNoActiveFit: return "no_active_fit";
    case ErrorCode::kHeaderMalformed: return "header_malformed";
    case ErrorCode::kBodyTruncated: return "body_truncated";
    case ErrorCode::kBodyMalformed: return "body_malformed";
    case ErrorCode::kBadFaceIndex: return "bad_face_index";
    case ErrorCode::kSessionFormatError: return "session_format_error";
    case ErrorCode::kIoError: return "io_error";
    case ErrorCode::kSceneLoadError: return "scene_load_error";
    case ErrorCode::kBindFailure: return "bind_failure";
    case ErrorCode::kUnknownSession: return "unknown_session";
  }
  return "unknown";
}

}  // namespace atreg
