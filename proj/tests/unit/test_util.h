#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "tlapse/errors.h"

namespace tlapse::test {

// Runs `fn` and checks it throws tlapse::Error with `code`.
template <typename Fn>
void expect_error(ErrorCode code, Fn&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code) << ", nothing thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("tlapse_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tlapse::test
