#pragma once

#include <stdexcept>
#include <string>

namespace psl {

enum class ErrorKind {
    Argument,   // precondition violated by the caller
    Parse,      // malformed input text
    Data,       // well-formed input that cannot be used (missing labels, single class, ...)
    Numerical,  // singular Hessian, separation, non-finite values
    Io,
    Version,    // model file written by an unknown format version
    Truncated,
    Checksum,
    State,      // operation called before its prerequisites ran
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::Argument, what);
}

}  // namespace psl
