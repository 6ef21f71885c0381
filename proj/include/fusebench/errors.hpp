#ifndef FUSEBENCH_ERRORS_HPP
#define FUSEBENCH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fusebench {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A matrix required to be symmetric positive definite is not.
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// Incompatible matrix/vector dimensions.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A degrees-of-freedom parameter violates the constraint of the
/// distribution or sampler it was handed to.
class InvalidDof : public Error {
public:
    using Error::Error;
};

/// Scalar argument outside the domain of a special function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Density evaluated at a point outside the support of the distribution.
class OutOfSupport : public Error {
public:
    using Error::Error;
};

/// The denominator matrix of the two-node fusion weights is singular.
class SingularDenominator : public Error {
public:
    using Error::Error;
};

/// Convex combination weights do not satisfy the simplex constraints.
class WeightSumError : public Error {
public:
    using Error::Error;
};

/// Malformed input document (syntax level).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input with invalid field values.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Filesystem read/write failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace fusebench

#endif
