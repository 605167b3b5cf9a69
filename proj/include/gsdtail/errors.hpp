#pragma once

#include <stdexcept>
#include <string>

namespace gsdtail {

// Error classes map to CLI exit codes: argument problems exit 2,
// numerical degeneracy 3, accuracy / backend disagreement 4.
enum class ErrorCode : int {
    argument = 2,
    degeneracy = 3,
    accuracy = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const noexcept { return code_; }
    int exit_code() const noexcept { return static_cast<int>(code_); }

private:
    ErrorCode code_;
};

// Invalid inputs: bad dimensions, out-of-range parameters, malformed JSON.
struct ArgumentError : Error {
    explicit ArgumentError(const std::string& msg) : Error(ErrorCode::argument, msg) {}
};

// Matrix-level failures: non-PD Sigma, singular A, condition number guard.
struct MatrixError : Error {
    explicit MatrixError(const std::string& msg) : Error(ErrorCode::argument, msg) {}
};

// Requested combination is outside the supported surface.
struct UnsupportedError : Error {
    explicit UnsupportedError(const std::string& msg) : Error(ErrorCode::argument, msg) {}
};

// A caller-supplied callable violated its contract (e.g. negative density generator).
struct ContractViolation : Error {
    explicit ContractViolation(const std::string& msg) : Error(ErrorCode::argument, msg) {}
};

// No clean certificate within tolerance; carries diagnostics in the message.
struct DegeneracyError : Error {
    explicit DegeneracyError(const std::string& msg) : Error(ErrorCode::degeneracy, msg) {}
};

// A quantity sits in the gray zone between "zero" and "nonzero".
struct AmbiguityError : Error {
    explicit AmbiguityError(const std::string& msg) : Error(ErrorCode::degeneracy, msg) {}
};

// An integral that must converge was detected to diverge.
struct DivergedError : Error {
    explicit DivergedError(const std::string& msg) : Error(ErrorCode::degeneracy, msg) {}
};

// Independent backends disagree beyond tolerance.
struct AccuracyError : Error {
    explicit AccuracyError(const std::string& msg) : Error(ErrorCode::accuracy, msg) {}
};

// Not enough effective samples to report an estimate.
struct InsufficientSamplesError : Error {
    explicit InsufficientSamplesError(const std::string& msg) : Error(ErrorCode::accuracy, msg) {}
};

}  // namespace gsdtail
