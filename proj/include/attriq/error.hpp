#pragma once

#include <stdexcept>
#include <string>

namespace attriq {

enum class ErrorCode {
    io = 1,
    parse = 2,
    validation = 3,
    config = 4,
    model = 5,
    interpreter = 6,
    internal = 7,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace attriq
