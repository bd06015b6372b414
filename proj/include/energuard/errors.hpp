#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace energuard {

// Base class for every error the toolkit raises on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- sensor ---
struct IoError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct PermissionDenied : Error { using Error::Error; };
struct SourceExhausted : Error { using Error::Error; };
struct UnknownGenerator : Error { using Error::Error; };

struct HookFailed : Error {
  HookFailed(std::size_t measurement_index, const std::string& what)
      : Error(what), measurement(measurement_index) {}
  std::size_t measurement;  // 1-based index of the failed measurement
};

// --- traceio ---
struct FormatError : Error {
  FormatError(std::size_t line_number, const std::string& what)
      : Error(what), line(line_number) {}
  std::size_t line;
};

struct EmptyClass : Error { using Error::Error; };
struct UnknownAttackName : Error { using Error::Error; };

struct InsufficientTraces : Error {
  InsufficientTraces(std::string class_key, const std::string& what)
      : Error(what), class_name(std::move(class_key)) {}
  std::string class_name;
};

struct TooShort : Error {
  TooShort(std::size_t trace_index, const std::string& what)
      : Error(what), trace(trace_index) {}
  std::size_t trace;
};

struct DegenerateData : Error { using Error::Error; };

// --- nn / models ---
struct ShapeMismatch : Error { using Error::Error; };
struct ShapeUnderflow : Error { using Error::Error; };
struct DivergenceDetected : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct CorruptModel : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };

// --- baselines / metrics ---
struct SingleClass : Error { using Error::Error; };
struct SingleClassTruth : Error { using Error::Error; };
struct NotBinary : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };

// --- engine ---
struct CommandFailed : Error { using Error::Error; };
struct SinkError : Error { using Error::Error; };

}  // namespace energuard
