#pragma once

#include <stdexcept>
#include <string>

namespace crackle {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NonIntegrable : Error { using Error::Error; };
struct QuadratureFailure : Error { using Error::Error; };
struct NoRoot : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct InsufficientDim : Error { using Error::Error; };
struct TooLarge : Error { using Error::Error; };
struct Unsupported : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct DegenerateTest : Error { using Error::Error; };
struct EmptyRegion : Error { using Error::Error; };
struct InsufficientSpread : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

}  // namespace crackle
