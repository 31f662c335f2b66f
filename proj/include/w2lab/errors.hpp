#pragma once

#include <stdexcept>
#include <string>

namespace w2lab {

// Base class for all library errors.  Every error carries a stable
// machine-readable code (snake_case) alongside the human-readable message;
// the CLI surfaces the code in its JSON error envelope.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// A measure must carry at least one atom of positive mass.
struct EmptyMeasure : Error {
    explicit EmptyMeasure(const std::string& m = "measure has no atoms with positive mass")
        : Error("empty_measure", m) {}
};

// Two objects that must live in the same ambient dimension do not.
struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& m = "ambient dimensions disagree")
        : Error("dimension_mismatch", m) {}
};

// An operation restricted to one-dimensional measures received d != 1.
struct WrongDimension : Error {
    explicit WrongDimension(const std::string& m = "operation requires one-dimensional input")
        : Error("wrong_dimension", m) {}
};

// A kernel fails row-stochasticity or the barycenter (mean-preservation) law.
struct MartingaleViolation : Error {
    explicit MartingaleViolation(const std::string& m = "kernel violates the martingale property")
        : Error("martingale_violation", m) {}
};

// A kernel or coupling is indexed against a measure whose support does not match.
struct SupportMismatch : Error {
    explicit SupportMismatch(const std::string& m = "support points do not match")
        : Error("support_mismatch", m) {}
};

// A coupling claimed optimal fails the duality-gap test.
struct NotOptimal : Error {
    explicit NotOptimal(const std::string& m = "coupling is not optimal for the quadratic cost")
        : Error("not_optimal", m) {}
};

// A quadratic objective's matrix is not symmetric positive-definite.
struct NotStrictlyConvex : Error {
    explicit NotStrictlyConvex(const std::string& m = "objective is not strictly convex")
        : Error("not_strictly_convex", m) {}
};

// Frank-Wolfe hit its iteration cap before reaching the duality-gap target.
struct FWStalled : Error {
    explicit FWStalled(const std::string& m = "face minimization stalled before reaching gap tolerance")
        : Error("fw_stalled", m) {}
};

// A face-restricted subproblem has no feasible point (corrupt inputs).
struct InfeasibleFace : Error {
    explicit InfeasibleFace(const std::string& m = "optimal-face subproblem is infeasible")
        : Error("infeasible_face", m) {}
};

// Instance exceeds a guard limit for an exhaustive routine.
struct TooLarge : Error {
    explicit TooLarge(const std::string& m = "instance too large for exhaustive enumeration")
        : Error("too_large", m) {}
};

// A regression/fit was requested with too few sample points.
struct NotEnoughPoints : Error {
    explicit NotEnoughPoints(const std::string& m = "not enough sample points")
        : Error("not_enough_points", m) {}
};

// A derivative was requested at a point where the map does not exist.
struct NotDifferentiable : Error {
    explicit NotDifferentiable(const std::string& m = "functional is not differentiable at this measure")
        : Error("not_differentiable", m) {}
};

// An internal invariant that the theory guarantees failed to hold.
struct AssertionFailed : Error {
    explicit AssertionFailed(const std::string& m = "internal certification assertion failed")
        : Error("assertion_failed", m) {}
};

// Malformed caller input that fits no more specific category.
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& m) : Error("invalid_argument", m) {}
};

// Malformed serialized input (JSON schema violations, bad numbers).
struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error("parse_error", m) {}
};

// File could not be read or written.
struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io_error", m) {}
};

// An iterative solver exceeded its safety pivot cap.  With exact arithmetic
// and Bland's rule this indicates a genuine bug, so it is surfaced loudly.
struct SolverStalled : Error {
    explicit SolverStalled(const std::string& m = "simplex exceeded its pivot cap")
        : Error("solver_stalled", m) {}
};

} // namespace w2lab
