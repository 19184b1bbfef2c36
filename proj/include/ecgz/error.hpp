#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecgz {

enum class ErrorKind {
    range,           // value outside the domain of the operation
    truncated,       // ran out of bits/bytes
    corrupt,         // stream decodes to something the encoder cannot produce
    reserved_header, // frame header 0010
    usage,           // caller violated a precondition
    parse,           // malformed text input (CSV, WFDB header)
    unsupported,     // valid but unimplemented input (e.g. WFDB format 16)
    bad_magic,
    bad_version,
    count_mismatch,
    io,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::range: return "range error";
    case ErrorKind::truncated: return "truncated stream";
    case ErrorKind::corrupt: return "corrupt stream";
    case ErrorKind::reserved_header: return "reserved frame header";
    case ErrorKind::usage: return "usage error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::unsupported: return "unsupported input";
    case ErrorKind::bad_magic: return "bad magic";
    case ErrorKind::bad_version: return "bad version";
    case ErrorKind::count_mismatch: return "count mismatch";
    case ErrorKind::io: return "I/O error";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace ecgz
