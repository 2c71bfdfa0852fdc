#pragma once

#include <stdexcept>
#include <string>

namespace stochar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed time grid, or two objects that disagree on their grid.
class GridError : public Error {
public:
    using Error::Error;
};

/// A noise path of the wrong kind was handed to an operation.
class KindError : public Error {
public:
    using Error::Error;
};

/// A closed-form solution was evaluated outside the region where it is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Missing or inconsistent arguments.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Flow inversion requested at or past the first crossing of characteristics.
class InversionError : public Error {
public:
    using Error::Error;
};

class UnknownIdError : public Error {
public:
    explicit UnknownIdError(const std::string& id) : Error("unknown id: " + id) {}
};

} // namespace stochar
