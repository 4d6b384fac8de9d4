#pragma once

#include <stdexcept>
#include <string>

namespace srcl {

// Label value for images whose class is unknown to the learner.
inline constexpr int kUnlabeled = -1;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor dimensions do not line up for the requested operation.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration value (bad hyperparameter, impossible architecture).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A precondition on input data was violated (e.g. non-unit embedding rows).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// A metric is mathematically undefined on the given inputs.
class MetricError : public Error {
public:
    explicit MetricError(const std::string& msg) : Error(msg) {}
};

class CheckpointError : public IoError {
public:
    enum class Kind { BadMagic, BadVersion, Truncated, TrailingData };

    CheckpointError(Kind k, const std::string& msg) : IoError(msg), kind(k) {}
    Kind kind;
};

} // namespace srcl
