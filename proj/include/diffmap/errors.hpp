#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace diffmap {

// Base class for all recoverable failures raised by this library. Programming
// errors (violated preconditions such as a bad index or mismatched sizes) throw
// std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input matrix contains NaN or infinity.
class NonFiniteInput : public Error {
public:
    using Error::Error;
};

// Every column of the feature matrix is constant; standardization would leave
// nothing to embed.
class AllColumnsConstant : public Error {
public:
    using Error::Error;
};

// Two rows are identical, so their distance is exactly zero and the reciprocal
// similarity is undefined. Carries the offending index pairs.
class CoincidentRows : public Error {
public:
    CoincidentRows(const std::string& msg, std::vector<std::pair<std::size_t, std::size_t>> p)
        : Error(msg), pairs(std::move(p)) {}
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

// A graph node has no incident edges after thresholding.
class IsolatedNode : public Error {
public:
    using Error::Error;
};

// The iterative eigensolver failed to reach the residual tolerance.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

// More eigenpairs were requested than the operator can supply.
class SpectrumExhausted : public Error {
public:
    using Error::Error;
};

// A 1-based nonzero-eigenvector index exceeds the number computed.
class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

// An OA code has no parent LSOA in the hierarchy. Carries the unmapped codes.
class UnmappedArea : public Error {
public:
    UnmappedArea(const std::string& msg, std::vector<std::string> c)
        : Error(msg), codes(std::move(c)) {}
    std::vector<std::string> codes;
};

// The OA->LSOA mapping assigns the same OA to two different LSOAs.
class ConflictingMapping : public Error {
public:
    using Error::Error;
};

// An LSOA present in the hierarchy has no member OAs in the data.
class EmptyLsoa : public Error {
public:
    using Error::Error;
};

// A correlation operand has zero variance.
class ConstantSeries : public Error {
public:
    using Error::Error;
};

// Two series that must be paired have different lengths.
class LengthMismatch : public Error {
public:
    using Error::Error;
};

// A required deprivation domain column is absent.
class MissingDomain : public Error {
public:
    using Error::Error;
};

// A ground-truth or lookup code is not part of the analyzed universe.
class CodeOutsideUniverse : public Error {
public:
    using Error::Error;
};

// Per-domain ranks were requested but the table has none.
class RanksMissing : public Error {
public:
    using Error::Error;
};

// Synthetic generator kind string not recognized.
class UnknownKind : public Error {
public:
    using Error::Error;
};

// -------- file format errors --------

class IoError : public Error {
public:
    using Error::Error;
};

// Header lacks the identifier column.
class MissingIdColumn : public IoError {
public:
    using IoError::IoError;
};

// A cell that must be numeric failed to parse. Carries 1-based row, 0-based
// column, and the raw text.
class NonNumericCell : public IoError {
public:
    NonNumericCell(const std::string& msg, std::size_t r, std::size_t c, std::string t)
        : IoError(msg), row(r), col(c), text(std::move(t)) {}
    std::size_t row;
    std::size_t col;
    std::string text;
};

// The same area code appears on two rows.
class DuplicateAreaId : public IoError {
public:
    using IoError::IoError;
};

// A row has the wrong number of fields.
class MalformedRow : public IoError {
public:
    using IoError::IoError;
};

// A deprivation file lacks one of the seven domain columns.
class MissingDomainColumn : public IoError {
public:
    using IoError::IoError;
};

// Boundary file is not a GeoJSON FeatureCollection with the expected
// code property.
class InvalidGeoJson : public IoError {
public:
    using IoError::IoError;
};

// Config file line is not `key=value` or names an unknown key.
class BadConfig : public IoError {
public:
    using IoError::IoError;
};

} // namespace diffmap
