#ifndef SINN_ERRORS_HPP
#define SINN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sinn {

// Error categories used across the library. Each carries a stable
// machine-readable category() used by the CLI error line.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& msg)
        : std::runtime_error(msg), category_(std::move(category)) {}
    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

struct ParameterError : Error {
    explicit ParameterError(const std::string& msg) : Error("parameter", msg) {}
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error("shape", msg) {}
};

struct InsufficientDataError : Error {
    explicit InsufficientDataError(const std::string& msg) : Error("insufficient-data", msg) {}
};

struct DegenerateError : Error {
    explicit DegenerateError(const std::string& msg) : Error("degenerate", msg) {}
};

struct DivergenceError : Error {
    explicit DivergenceError(const std::string& msg) : Error("divergence", msg) {}
};

struct StabilityError : Error {
    explicit StabilityError(const std::string& msg) : Error("stability", msg) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error("format", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

struct TrainingFailedError : Error {
    explicit TrainingFailedError(const std::string& msg) : Error("training-failed", msg) {}
};

} // namespace sinn

#endif
