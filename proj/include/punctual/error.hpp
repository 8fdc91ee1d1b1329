#pragma once

#include <stdexcept>
#include <string>

namespace punctual {

/// Base of every error the library throws. `kind()` is a stable
/// machine-readable tag used by the CLI for its JSON error detail.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct ModelEvaluationError : Error {
    explicit ModelEvaluationError(const std::string& m) : Error("model_evaluation", m) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& m) : Error("dimension_mismatch", m) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error("domain", m) {}
};

/// Quadrature did not reach its tolerance; carries the achieved estimate.
struct QuadratureError : Error {
    QuadratureError(const std::string& m, double achieved)
        : Error("quadrature", m), achieved_error(achieved) {}
    double achieved_error;
};

struct DegenerateError : Error {
    explicit DegenerateError(const std::string& m) : Error("degenerate", m) {}
};

struct UnboundedIntervalError : Error {
    explicit UnboundedIntervalError(const std::string& m) : Error("unbounded_interval", m) {}
};

struct NumericalBlowup : Error {
    explicit NumericalBlowup(const std::string& m) : Error("numerical_blowup", m) {}
};

struct PreconditionError : Error {
    explicit PreconditionError(const std::string& m) : Error("precondition", m) {}
};

struct UnknownLabel : Error {
    explicit UnknownLabel(const std::string& m) : Error("unknown_label", m) {}
};

struct NeedsFullPath : Error {
    explicit NeedsFullPath(const std::string& m) : Error("needs_full_path", m) {}
};

/// Scenario parse failure; `line` is 0 when the problem is not tied to a line.
struct ConfigError : Error {
    ConfigError(const std::string& m, int line_no, std::string key_name)
        : Error("config", m), line(line_no), key(std::move(key_name)) {}
    int line;
    std::string key;
};

}  // namespace punctual
