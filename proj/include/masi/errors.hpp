#pragma once

#include <stdexcept>
#include <string>

namespace masi {

/// Bad flags, incompatible configs, misuse of an API contract. CLI exit 1.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data, I/O failures. CLI exit 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values or numeric breakdown. CLI exit 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The reference line between two coincident points is undefined.
class DegeneratePairError : public UsageError {
public:
    explicit DegeneratePairError(const std::string& msg) : UsageError(msg) {}
};

/// A vector or index not present in a dictionary; carries the offending key.
class LookupError : public UsageError {
public:
    explicit LookupError(const std::string& msg) : UsageError(msg) {}
};

/// A persisted file whose digest or structure does not check out.
class CorruptionError : public DataError {
public:
    explicit CorruptionError(const std::string& msg) : DataError(msg) {}
};

/// Checkpoint/dataset/dictionary combinations that do not belong together.
class CompatibilityError : public UsageError {
public:
    explicit CompatibilityError(const std::string& msg) : UsageError(msg) {}
};

} // namespace masi
