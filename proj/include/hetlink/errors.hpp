#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hetlink {

/// Problems with input data (files, records, graph contents). Maps to exit code 1.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A mandatory column or file section is missing.
class SchemaError : public DataError {
public:
    explicit SchemaError(const std::string& what) : DataError(what) {}
};

/// A value on a specific line could not be parsed or is out of range.
class RowError : public DataError {
public:
    RowError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Invalid configuration (bad key, bad value, nonpositive counts). Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector or attribute dimensions do not agree.
class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace hetlink
