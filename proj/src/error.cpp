#include "predictslums/error.hpp"

namespace psl {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Argument: return "argument error";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Data: return "data error";
        case ErrorKind::Numerical: return "numerical failure";
        case ErrorKind::Io: return "i/o error";
        case ErrorKind::Version: return "format version error";
        case ErrorKind::Truncated: return "truncated file";
        case ErrorKind::Checksum: return "checksum mismatch";
        case ErrorKind::State: return "invalid state";
    }
    return "error";
}

}  // namespace psl
