#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace plab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainViolation : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct UnknownKind : Error { using Error::Error; };
struct BadDimension : Error { using Error::Error; };
struct BadK : Error { using Error::Error; };
struct NotImmersionAt : Error { using Error::Error; };
struct BadDimensionPair : Error { using Error::Error; };
struct DegenerateTuple : Error { using Error::Error; };
struct TooFewPoints : Error { using Error::Error; };
struct MixedScenario : Error { using Error::Error; };

// Configuration problems carry the offending field so the CLI can name it.
struct ConfigError : Error {
  ConfigError(std::string field_path, const std::string& message)
      : Error(field_path + ": " + message), field(std::move(field_path)) {}
  std::string field;
};

}  // namespace plab
