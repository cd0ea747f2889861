#pragma once

#include <stdexcept>
#include <string>

namespace bnpiv {

// Base for every error raised by the library. Precondition violations on
// plain arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class EmptySampleError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Raised by the Gibbs sampler; carries the sweep index and the block that failed.
class SamplerError : public NumericalError {
public:
    SamplerError(const std::string& what, long iteration, std::string block)
        : NumericalError(what + " (iteration " + std::to_string(iteration) + ", block " + block + ")"),
          iteration_(iteration),
          block_(std::move(block)) {}

    [[nodiscard]] long iteration() const noexcept { return iteration_; }
    [[nodiscard]] const std::string& block() const noexcept { return block_; }

private:
    long iteration_;
    std::string block_;
};

}  // namespace bnpiv
