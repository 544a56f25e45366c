#pragma once

#include <stdexcept>
#include <string>

namespace mtlre {

// Base for everything thrown by this library.  Callers that only want to
// distinguish "our" failures from the rest can catch this one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/rank mismatches in tensor ops.  Messages always name both shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A value is structurally fine but semantically wrong (bad config field,
// label outside a task's label set, non-one-hot gold row, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed input files: corpus lines, embedding files, config files,
// checkpoints.  Messages carry file and line/offset context where known.
class ParseError : public Error {
public:
    using Error::Error;
};

// A lookup by name failed (unknown task id, unknown parameter, ...).
class LookupError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failures (cannot open/read/write).
class IoError : public Error {
public:
    using Error::Error;
};

// Numeric breakdown during training (NaN/inf gradients and the like).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace mtlre
