#pragma once

#include <stdexcept>
#include <string>

namespace kinetic {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define KINETIC_DEFINE_ERROR(Name)                   \
    class Name : public Error {                      \
    public:                                          \
        using Error::Error;                          \
    }

KINETIC_DEFINE_ERROR(ZeroVector);
KINETIC_DEFINE_ERROR(DomainError);
KINETIC_DEFINE_ERROR(SizeMismatch);
KINETIC_DEFINE_ERROR(TooLarge);
KINETIC_DEFINE_ERROR(MissingCertificate);
KINETIC_DEFINE_ERROR(PlanMismatch);
KINETIC_DEFINE_ERROR(MissingLpNorm);
KINETIC_DEFINE_ERROR(FileError);
KINETIC_DEFINE_ERROR(IoError);
KINETIC_DEFINE_ERROR(ValidationError);

#undef KINETIC_DEFINE_ERROR

/// Config syntax error; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace kinetic
