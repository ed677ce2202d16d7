#pragma once

#include <stdexcept>
#include <string>

namespace infbound {

//! Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! An argument lies outside the domain of the formula being evaluated.
class DomainError : public Error {
public:
    using Error::Error;
};

//! Doubling quantities that need x0 != y0 were asked for at a coincident pair.
class DegeneratePairError : public Error {
public:
    using Error::Error;
};

//! A stencil, window, ball or ray does not fit inside the sampled grid.
class GridError : public Error {
public:
    using Error::Error;
};

//! No touching quadratic could be fitted within the configured defect cap.
class JetFitError : public Error {
public:
    using Error::Error;
};

//! A point was found in the wrong phase set for the requested check.
class PhaseError : public Error {
public:
    using Error::Error;
};

//! A derived constant is not representable as a finite double.
class OverflowError : public Error {
public:
    using Error::Error;
};

//! Malformed input file.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace infbound
