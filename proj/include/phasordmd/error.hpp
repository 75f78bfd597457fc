#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phasordmd {

enum class ErrorCode {
  InvalidArgument,
  NumericalBlowup,
  RankDeficiency,
  Strictness,
  DegenerateMode,
  InvalidState,
  Coverage,
  LevelFailure,
  Parse,
  Integrity,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers switch on code() when the
// distinction matters (e.g. the CLI maps InvalidArgument to a usage error).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace phasordmd
