// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "obbkit/anchors.hpp"
#include "obbkit/assignment.hpp"
#include "obbkit/error.hpp"
#include "obbkit/eval.hpp"
#include "obbkit/format.hpp"
#include "obbkit/geometry.hpp"
#include "obbkit/ingest.hpp"
#include "obbkit/losses.hpp"
#include "obbkit/pam.hpp"
#include "obbkit/parallel.hpp"
#include "obbkit/records.hpp"
#include "obbkit/tensor.hpp"
#include "obbkit/tensor_io.hpp"

namespace obbkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace obbkit
