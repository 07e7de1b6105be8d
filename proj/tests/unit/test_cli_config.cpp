// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#include <map>
#include <string>

#include "cli_config.hpp"
#include "doctest.h"

using augloop::cli::Json;

namespace {

auto env_of(const std::map<std::string, std::string>& vars) {
  return [vars](const char* name) -> const char* {
    const auto it = vars.find(name);
    return it == vars.end() ? nullptr : it->second.c_str();
  };
}

}  // namespace

TEST_CASE("overlay merges objects") {
  const Json base = {{"a", 1}, {"o", {{"x", 1}, {"y", 2}}}, {"l", {1, 2}}};
  const Json over = {{"o", {{"y", 3}}}, {"l", {9}}, {"a", nullptr}, {"n", "new"}};
  const Json out = augloop::cli::overlay(base, over);
  CHECK(out["a"] == 1);
  CHECK(out["o"]["x"] == 1);
  CHECK(out["o"]["y"] == 3);
  CHECK(out["l"] == Json({9}));
  CHECK(out["n"] == "new");
}

TEST_CASE("environment layer") {
  const Json j = augloop::cli::env_layer(env_of({{"AUGLOOP_CONFIG_BACKEND", "scripted:x"},
                                                 {"AUGLOOP_WORKERS", "4"},
                                                 {"AUGLOOP_MAX_CALLS", "3"},
                                                 {"AUGLOOP_GRPO_BETA", "0.25"},
                                                 {"AUGLOOP_SERVICE_PORT", "9000"},
                                                 {"AUGLOOP_SERVICE_TOKEN", "t"}}));
  CHECK(j["backend"] == "scripted:x");
  CHECK(j["workers"] == 4);
  CHECK(j["episode"]["max_calls"] == 3);
  CHECK(j["grpo"]["beta"] == 0.25);
  CHECK(j["service"]["port"] == 9000);
  CHECK(j["service"]["token"] == "t");
  CHECK_FALSE(j.contains("judge"));

  CHECK(augloop::cli::env_layer(env_of({})).empty());
  CHECK_THROWS_AS(augloop::cli::env_layer(env_of({{"AUGLOOP_WORKERS", "four"}})), augloop::cli::ConfigError);
  CHECK_THROWS_AS(augloop::cli::env_layer(env_of({{"AUGLOOP_WORKERS", "4x"}})), augloop::cli::ConfigError);
  CHECK_THROWS_AS(augloop::cli::env_layer(env_of({{"AUGLOOP_GRPO_BETA", "0.1q"}})), augloop::cli::ConfigError);
}

TEST_CASE("precedence") {
  const Json defaults = {{"judge", "rule"}, {"workers", 1}, {"episode", {{"max_calls", 8}, {"grace_calls", 2}}}};
  const Json file = {{"workers", 2}, {"episode", {{"max_calls", 6}}}};
  const Json env = {{"workers", 3}};
  const Json flags = {{"episode", {{"max_calls", 5}}}};
  const Json out = augloop::cli::merge_config(defaults, file, env, flags);
  CHECK(out["judge"] == "rule");
  CHECK(out["workers"] == 3);
  CHECK(out["episode"]["max_calls"] == 5);
  CHECK(out["episode"]["grace_calls"] == 2);
  CHECK(augloop::cli::merge_config(defaults, file, Json::object(), Json::object())["workers"] == 2);
}

TEST_CASE("exit codes") {
  using augloop::cli::exit_code_for_status;
  CHECK(exit_code_for_status(0) == 0);
  CHECK(exit_code_for_status(1) == 3);
  CHECK(exit_code_for_status(2) == 4);
  CHECK(exit_code_for_status(3) == 5);
  for (int s : {10, 11, 12}) CHECK(exit_code_for_status(s) == 6);
  for (int s : {20, 21, 22, 23, 24}) CHECK(exit_code_for_status(s) == 7);
  CHECK(exit_code_for_status(30) == 8);
  CHECK(exit_code_for_status(40) == 9);
  CHECK(exit_code_for_status(41) == 10);
  CHECK(exit_code_for_status(42) == 11);
  for (int s : {50, 51, 52}) CHECK(exit_code_for_status(s) == 12);
  CHECK(exit_code_for_status(60) == 13);
  CHECK(exit_code_for_status(61) == 14);
  CHECK(exit_code_for_status(99) == 70);
  CHECK(exit_code_for_status(12345) == 70);
}
