#pragma once

#include <stdexcept>
#include <string>

namespace snn_sim {

// Base of every error thrown by the library. The CLI maps the subclasses
// onto exit codes, so keep the hierarchy flat and specific.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameter set or simulation setup.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// A neuron state was stepped with the wrong model.
class ModelStateError : public Error {
public:
    using Error::Error;
};

class ShapeMismatchError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

class UnsupportedNetworkError : public Error {
public:
    using Error::Error;
};

// Missing or malformed input files (datasets, bundles).
class DataError : public Error {
public:
    using Error::Error;
};

// Weights bundle failures. Each failure mode has its own type.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

class BlobLengthError : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

class UnknownLayerKindError : public FormatError {
public:
    using FormatError::FormatError;
};

class LayerShapeError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace snn_sim
