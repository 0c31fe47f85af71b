#pragma once

#include <stdexcept>
#include <string>

namespace ditchkit {

/// Base class for every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside the solver (pile-up, rigid-body iteration, NaN guard).
class SolverError : public Error {
public:
    SolverError(const std::string& what, int frame = -1)
        : Error(frame >= 0 ? what + " (frame " + std::to_string(frame) + ")" : what), frame_(frame) {}

    int frame() const noexcept { return frame_; }

private:
    int frame_;
};

class EvalError : public Error {
public:
    using Error::Error;
};

enum class FormatErrc {
    io,
    bad_magic,
    version_mismatch,
    truncated,
    checksum_mismatch,
};

class FormatError : public Error {
public:
    FormatError(FormatErrc code, const std::string& what) : Error(what), code_(code) {}

    FormatErrc code() const noexcept { return code_; }

private:
    FormatErrc code_;
};

}  // namespace ditchkit
