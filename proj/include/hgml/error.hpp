#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hgml {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scoring a model on a sample set where no rectangle covers any sample.
class NoCoverageError : public Error {
public:
    NoCoverageError() : Error("no sample is covered by the model") {}
};

// Malformed input that can be attributed to a named field.
class FieldError : public Error {
public:
    FieldError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace hgml
