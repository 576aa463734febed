// Copyright 2026 the polya-urn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace polya {

inline constexpr const char* version = "0.1.0";

}  // namespace polya
