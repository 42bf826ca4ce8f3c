#pragma once

#include <stdexcept>
#include <string>

namespace capsdec {

// Every rejection in the core is reported through this type; the C API maps it
// onto a status code plus the message.
class Error : public std::runtime_error {
public:
    enum class Kind { InvalidArgument, ShapeMismatch, NonFinite, Io, Parse, NotFound };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

[[noreturn]] inline void fail(Error::Kind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace capsdec
