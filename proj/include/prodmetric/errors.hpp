#ifndef PRODMETRIC_ERRORS_HPP
#define PRODMETRIC_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prodmetric {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input text (expressions, condition specs, file contents).
/// Exit-code category: input error.
struct InputError : Error {
    using Error::Error;
};

/// Parse failure with a byte offset into the source text.
struct SyntaxError : InputError {
    SyntaxError(const std::string& msg, std::size_t offset)
        : InputError(msg + " (at offset " + std::to_string(offset) + ")"),
          offset(offset) {}
    std::size_t offset;
};

/// Dimension/arity mismatch between a function and its arguments.
struct ArityError : InputError {
    using InputError::InputError;
};

/// A value violates a domain invariant (K < 1, reducing generator, ...).
struct DomainError : InputError {
    using InputError::InputError;
};

/// Zero pattern of a triplet is not a permutation of (0,l,l).
struct InvalidTriplet : InputError {
    using InputError::InputError;
};

struct LabelClash : InputError {
    using InputError::InputError;
};

struct TooSmall : InputError {
    using InputError::InputError;
};

struct TooLarge : InputError {
    using InputError::InputError;
};

struct DegenerateCriterion : InputError {
    using InputError::InputError;
};

/// Runtime evaluation failure (NaN/inf result, log of nonpositive, ...).
/// Exit-code category: internal/evaluation error.
struct EvaluationError : Error {
    EvaluationError(const std::string& msg, std::size_t begin = 0, std::size_t end = 0)
        : Error(msg), begin(begin), end(end) {}
    std::size_t begin;
    std::size_t end;
};

/// The triplet sampler detected a generator it cannot bisect against.
struct SamplerUnsupported : Error {
    using Error::Error;
};

/// A product construction violated axiom (S1); carries the witness pair.
struct NotAmenableOnThisInstance : Error {
    NotAmenableOnThisInstance(const std::string& msg,
                              std::string label_x, std::string label_y)
        : Error(msg), label_x(std::move(label_x)), label_y(std::move(label_y)) {}
    std::string label_x;
    std::string label_y;
};

}  // namespace prodmetric

#endif  // PRODMETRIC_ERRORS_HPP
