#pragma once

#include <stdexcept>
#include <string>

namespace tefs {

// Base of every error the library throws. Callers that only care about
// "something went wrong" catch this; the subclasses let tests and the CLI
// distinguish the failure classes named in the module contracts.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class MissingFileError : public Error {
public:
    using Error::Error;
};

class DuplicateIdError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace tefs
