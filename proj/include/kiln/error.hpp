#pragma once

#include <stdexcept>
#include <string>

namespace kiln {

/// Malformed or inconsistent input data (files, schemas, dimensions).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// External detector process failed (spawn error or nonzero exit).
class DetectorError : public std::runtime_error {
public:
    explicit DetectorError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kiln
