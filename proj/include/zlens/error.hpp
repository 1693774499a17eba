#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace zlens {

enum class ErrorCode {
  // Input framing
  Parse,
  Range,
  Integrity,
  Unsupported,
  Io,
  // Zone state machine
  UnalignedWrite,
  ZoneBoundary,
  ZoneInaccessible,
  TooManyOpen,
  InvalidTransition,
  // F2FS metadata
  NotF2fs,
  NoCheckpoint,
  Unallocated,
  // Timeline / config
  Config,
};

std::string_view to_string(ErrorCode code);

/// Every library failure is reported as an Error carrying a stable code.
/// The CLI maps all of these to exit status 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure tied to a 1-based input line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace zlens
