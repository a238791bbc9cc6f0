#pragma once

#include <stdexcept>
#include <string>

namespace leukex {

/// Base of every error the library raises. The CLI maps ModelError to exit
/// code 3 and every other Error to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unsupported image bytes.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// Corpus-level failures while building a manifest.
class IngestError : public Error {
public:
    using Error::Error;
};

/// Caller passed values outside an operation's precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Failed to read or write a file.
class IoError : public Error {
public:
    using Error::Error;
};

/// Training diverged (NaN/Inf) or a linear system could not be solved.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A classifier could not be loaded or run.
class ModelError : public Error {
public:
    using Error::Error;
};

}  // namespace leukex
