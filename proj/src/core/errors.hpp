#pragma once

#include <stdexcept>
#include <string>

namespace funcscan {

// Coarse failure classes; the C API maps them onto its status codes.
enum class ErrorKind {
    InvalidArgument,
    GridMismatch,
    InvalidKernel,
    Domain,
    SubjectTooSparse,
    IllConditionedBasis,
    RankDeficient,
    InsufficientSamples,
    SingularBlock,
    TooManyComponents,
    InvalidWeights,
    UnsupportedSmoothness,
    NumericallySingularCovariance,
    DegenerateFactor,
    Parse,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // True for failures caused by the numbers rather than by the caller or the input files.
    bool numerical() const noexcept {
        switch (kind_) {
        case ErrorKind::IllConditionedBasis:
        case ErrorKind::RankDeficient:
        case ErrorKind::SingularBlock:
        case ErrorKind::NumericallySingularCovariance:
        case ErrorKind::TooManyComponents:
            return true;
        default:
            return false;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace funcscan
