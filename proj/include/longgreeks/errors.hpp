#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace longgreeks {

enum class ErrorKind {
    // Input validation.
    FellerViolation,
    NonSPDGamma,
    SingularSigma,
    LeverageOutOfRange,
    InvalidParameter,
    DomainError,
    StabilizationUnavailable,
    SchemeModelMismatch,
    UnsupportedModel,
    MissingScoreFunction,
    NotInCatalog,
    GuardViolated,
    TailDivergence,
    NonPositivePath,
    ConfigError,
    // Numerical failures.
    ImaginaryAxisEigenvalue,
    SingularP11,
    StepTooLarge,
    NumericalBlowup,
    NonInvertibleTransform,
    SingularDiffusion,
    InconclusiveDiagnostic,
};

std::string_view error_kind_name(ErrorKind kind);

// True for kinds caused by bad input rather than by a failed computation.
bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view kind_name() const { return error_kind_name(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace longgreeks
