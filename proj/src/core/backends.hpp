// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "episode.hpp"
#include "rewards.hpp"

namespace augloop {

/// Backend from a spec string:
///   scripted:<file>    spans separated by `----` lines
///   oracle:<manifest>  fixture oracle
///   http:<base-url>    chat completions; model and key from AUGLOOP_BACKEND_*
/// Throws Error(kConfigInvalid) for unknown schemes.
std::unique_ptr<ModelBackend> make_backend(std::string_view spec);

/// Judge from a spec string: `rule`, `rule-contains`, or `http:<base-url>`
/// (model and key from AUGLOOP_JUDGE_*).
std::unique_ptr<Judge> make_judge(std::string_view spec);

}  // namespace augloop
