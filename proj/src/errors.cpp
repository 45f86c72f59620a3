#include "longgreeks/errors.hpp"

namespace longgreeks {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::FellerViolation: return "FellerViolation";
        case ErrorKind::NonSPDGamma: return "NonSPDGamma";
        case ErrorKind::SingularSigma: return "SingularSigma";
        case ErrorKind::LeverageOutOfRange: return "LeverageOutOfRange";
        case ErrorKind::InvalidParameter: return "InvalidParameter";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::StabilizationUnavailable: return "StabilizationUnavailable";
        case ErrorKind::SchemeModelMismatch: return "SchemeModelMismatch";
        case ErrorKind::UnsupportedModel: return "UnsupportedModel";
        case ErrorKind::MissingScoreFunction: return "MissingScoreFunction";
        case ErrorKind::NotInCatalog: return "NotInCatalog";
        case ErrorKind::GuardViolated: return "GuardViolated";
        case ErrorKind::TailDivergence: return "TailDivergence";
        case ErrorKind::NonPositivePath: return "NonPositivePath";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::ImaginaryAxisEigenvalue: return "ImaginaryAxisEigenvalue";
        case ErrorKind::SingularP11: return "SingularP11";
        case ErrorKind::StepTooLarge: return "StepTooLarge";
        case ErrorKind::NumericalBlowup: return "NumericalBlowup";
        case ErrorKind::NonInvertibleTransform: return "NonInvertibleTransform";
        case ErrorKind::SingularDiffusion: return "SingularDiffusion";
        case ErrorKind::InconclusiveDiagnostic: return "InconclusiveDiagnostic";
    }
    return "Unknown";
}

bool is_validation_error(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ImaginaryAxisEigenvalue:
        case ErrorKind::SingularP11:
        case ErrorKind::StepTooLarge:
        case ErrorKind::NumericalBlowup:
        case ErrorKind::NonInvertibleTransform:
        case ErrorKind::SingularDiffusion:
        case ErrorKind::InconclusiveDiagnostic:
            return false;
        default:
            return true;
    }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace longgreeks
