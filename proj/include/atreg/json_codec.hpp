// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

// JSON encodings shared by session documents and the wire protocol.
//
// Poses are {"rotation": [w, x, y, z], "translation": [x, y, z]}. All reals
// are printed with 17 significant digits and object keys are sorted, so
// encode(decode(text)) == text for any text this module produced.

#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "atreg/geom.hpp"
#include "atreg/icp.hpp"
#include "atreg/restart_search.hpp"
#include "atreg/session.hpp"

namespace atreg {

using Json = nlohmann::json;

/// indent < 0: single line. Otherwise pretty-printed with that many spaces
/// and a trailing newline.
std::string canonical_dump(const Json& value, int indent = -1);

Json encode(const Vec3& v);
Json encode(const UnitQuaternion& q);
Json encode(const RigidTransform& t);
Json encode(const FitResult& f);
Json encode(const RankedFit& r);
Json encode(const CorrectionRecord& c);
Json encode(const ObjectSlot& s, bool include_timing);

// Decoders throw Error(kInvalidArgument) naming `what` on shape errors.
Vec3 decode_vec3(const Json& j, std::string_view what);
/// Renormalizes; rejects inputs whose norm is off by more than `tolerance`.
UnitQuaternion decode_quaternion(const Json& j, std::string_view what, double tolerance = 1e-6);
/// Takes the stored components verbatim (norm within 1e-9).
UnitQuaternion decode_stored_quaternion(const Json& j, std::string_view what);
RigidTransform decode_transform(const Json& j, std::string_view what);
FitResult decode_fit(const Json& j, std::string_view what);
ObjectSlot decode_slot(const Json& j);

struct ExportOptions {
  /// fit_time is wall-clock and differs between runs; leave it out for
  /// reproducible documents.
  bool include_timing = false;
};

std::string export_session(const SessionSnapshot& snapshot, ExportOptions options = {});
/// Throws Error(kSessionFormatError).
SessionSnapshot import_session(std::string_view text);

}  // namespace atreg
