// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace bodylink {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant (bad annotation, orphan part,
/// geometry mismatch, ...). The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or stream failure. The CLI maps this to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary prediction dump. Carries the byte offset at which the
/// problem was detected and, when known, the image being read.
class FormatError : public IoError {
 public:
  FormatError(const std::string& what, std::uint64_t byte_offset,
              std::optional<std::uint64_t> image_id = std::nullopt);

  std::uint64_t byte_offset() const noexcept { return byte_offset_; }
  std::optional<std::uint64_t> image_id() const noexcept { return image_id_; }

 private:
  std::uint64_t byte_offset_;
  std::optional<std::uint64_t> image_id_;
};

}  // namespace bodylink
