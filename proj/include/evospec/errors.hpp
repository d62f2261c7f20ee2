#pragma once

#include <stdexcept>
#include <string>

namespace evospec {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };
struct GridError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };
struct DegenerateVarianceError : Error { using Error::Error; };
struct DegenerateDenominatorError : Error { using Error::Error; };
struct AlgorithmError : Error { using Error::Error; };
struct NumericsError : Error { using Error::Error; };

struct ParseError : Error {
    ParseError(const std::string& msg, long row = 0) : Error(msg), row(row) {}
    long row;
};

}  // namespace evospec
