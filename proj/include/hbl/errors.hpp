#pragma once

#include <stdexcept>
#include <string>

namespace hbl {

/// Base class for all library errors. Carries a short machine-readable tag
/// used by the CLI to pick exit codes.
class Error : public std::runtime_error {
public:
    Error(std::string tag, const std::string& what)
        : std::runtime_error(what), tag_(std::move(tag)) {}
    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

struct RangeError : Error {
    explicit RangeError(const std::string& w) : Error("RangeError", w) {}
};

struct ParityError : Error {
    explicit ParityError(const std::string& w) : Error("ParityError", w) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error("DomainError", w) {}
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& w) : Error("DimensionError", w) {}
};

struct SingularNode : Error {
    explicit SingularNode(const std::string& w) : Error("SingularNode", w) {}
};

struct StiffnessError : Error {
    explicit StiffnessError(const std::string& w) : Error("StiffnessError", w) {}
};

struct GridMismatch : Error {
    explicit GridMismatch(const std::string& w) : Error("GridMismatch", w) {}
};

struct ConventionRequired : Error {
    explicit ConventionRequired(const std::string& w) : Error("ConventionRequired", w) {}
};

struct OutOfHistory : Error {
    explicit OutOfHistory(const std::string& w) : Error("OutOfHistory", w) {}
};

struct NoSignChange : Error {
    explicit NoSignChange(const std::string& w) : Error("NoSignChange", w) {}
};

struct NoBlowup : Error {
    explicit NoBlowup(const std::string& w) : Error("NoBlowup", w) {}
};

struct BlowupDetected : Error {
    explicit BlowupDetected(const std::string& w) : Error("BlowupDetected", w) {}
};

/// Thrown when the two independent eigenvalue routes disagree on a count.
/// Both counts are kept for diagnostics.
class MethodDisagreement : public Error {
public:
    MethodDisagreement(int matrix_count, int shooting_count, double near_zero,
                       const std::string& w)
        : Error("MethodDisagreement", w),
          matrix_count_(matrix_count),
          shooting_count_(shooting_count),
          eigenvalue_near_zero_(near_zero) {}

    int matrix_count() const noexcept { return matrix_count_; }
    int shooting_count() const noexcept { return shooting_count_; }
    double eigenvalue_near_zero() const noexcept { return eigenvalue_near_zero_; }

private:
    int matrix_count_;
    int shooting_count_;
    double eigenvalue_near_zero_;
};

} // namespace hbl
