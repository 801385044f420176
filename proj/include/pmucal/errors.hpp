#pragma once

#include <stdexcept>
#include <string>

namespace pmucal {

/// Base class for all toolkit errors. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data malformed or inconsistent (files, stores, CSV).
class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DuplicateId : public ParseError {
public:
    using ParseError::ParseError;
};

class MissingReference : public ParseError {
public:
    using ParseError::ParseError;
};

/// Numerical failures. All signal that the data cannot support the
/// requested estimate, not a programming error.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Condition estimate exceeded the threshold: the regression does not
/// determine all unknowns (insufficient excitation, duplicated data, ...).
class RankDeficient : public NumericalError {
public:
    RankDeficient(const std::string& what, double condition_estimate)
        : NumericalError(what), condition_estimate_(condition_estimate) {}
    double condition_estimate() const { return condition_estimate_; }

private:
    double condition_estimate_;
};

class NoConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TooFewSnapshots : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TooShortSeries : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A denominator of the coefficient-to-parameter map vanished; the message
/// names which one.
class DegenerateCoefficients : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ResultNegativeMagnitude : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class TooManyFailedResamples : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ZeroReference : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EmptyInput : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoCandidates : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularCircuit : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnstableRecursion : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace pmucal
