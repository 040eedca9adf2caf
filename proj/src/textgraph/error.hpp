#pragma once

#include <stdexcept>
#include <string>

namespace textgraph {

// Mirrors the status codes of the C API (textgraph/textgraph.h).
enum class ErrorCode : int {
  kArgument = 1,
  kNotFound = 2,
  kParse = 3,
  kPreprocess = 4,
  kShape = 5,
  kFormat = 6,
  kTruncated = 7,
  kIdOrder = 8,
  kCountMismatch = 9,
  kNonFinite = 10,
  kConfig = 11,
  kIo = 12,
  kMismatch = 13,
  kNormalization = 14,
  kInternal = 100,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace textgraph
