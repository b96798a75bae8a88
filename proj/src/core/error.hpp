#pragma once

#include <stdexcept>
#include <string>

namespace nsplat {

// Mirrors the ns_status codes of the public C API.
enum class ErrorCode : int {
    ok = 0,
    io = 1,
    parse = 2,
    invalid_arg = 3,
    missing_pose = 4,
    unknown_camera = 5,
    shape_mismatch = 6,
    numeric = 7,
    stale_cache = 8,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

}  // namespace nsplat
