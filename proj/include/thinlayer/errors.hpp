#pragma once

#include <stdexcept>
#include <string>

namespace thinlayer {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define THINLAYER_ERROR(Name)                                                  \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}   \
    };

THINLAYER_ERROR(ShapeViolation)
THINLAYER_ERROR(InvalidScale)
THINLAYER_ERROR(OutOfDomain)
THINLAYER_ERROR(TimeOutOfRange)
THINLAYER_ERROR(SingularJacobian)
THINLAYER_ERROR(InvalidTransform)
THINLAYER_ERROR(NotSPD)
THINLAYER_ERROR(MeshFailure)
THINLAYER_ERROR(NonpositiveWeight)
THINLAYER_ERROR(UnknownTag)
THINLAYER_ERROR(DataMismatch)
THINLAYER_ERROR(LayoutMismatch)
THINLAYER_ERROR(OutOfLayer)
THINLAYER_ERROR(TimeMismatch)
THINLAYER_ERROR(MeshMismatch)
THINLAYER_ERROR(FoldedCell)
THINLAYER_ERROR(IoError)

#undef THINLAYER_ERROR

class NoConvergence : public Error {
public:
    NoConvergence(int iterations, double residual)
        : Error("NoConvergence: iterations=" + std::to_string(iterations) +
                " residual=" + std::to_string(residual)),
          iterations_(iterations), residual_(residual) {}
    int iterations() const { return iterations_; }
    double residual() const { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// Bad configuration or usage. Maps to exit status 2 in the CLI.
class ConfigError : public Error {
public:
    ConfigError(std::string key, std::string reason)
        : Error("ConfigError(" + key + "): " + reason),
          key_(std::move(key)), reason_(std::move(reason)) {}
    const std::string& key() const { return key_; }
    const std::string& reason() const { return reason_; }

private:
    std::string key_;
    std::string reason_;
};

}  // namespace thinlayer
