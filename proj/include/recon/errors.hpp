#pragma once

#include <stdexcept>
#include <string>

namespace recon {

/// Base class for every error raised by the library. `kind()` is a short
/// stable tag that the CLI maps to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error("invalid-argument", w) {}
};

struct UnsupportedSize : Error {
  explicit UnsupportedSize(const std::string& w) : Error("unsupported-size", w) {}
};

/// A computation would exceed a configured budget (enumeration size, search
/// nodes). The message names the budget knob.
struct ResourceError : Error {
  explicit ResourceError(const std::string& w) : Error("resource", w) {}
};

struct CorruptedDeck : Error {
  explicit CorruptedDeck(const std::string& w) : Error("corrupted-deck", w) {}
};

struct GenerationError : Error {
  explicit GenerationError(const std::string& w) : Error("generation", w) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error("shape", w) {}
};

struct TrainingError : Error {
  explicit TrainingError(const std::string& w) : Error("training", w) {}
};

struct InvalidDataset : Error {
  explicit InvalidDataset(const std::string& w) : Error("invalid-dataset", w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

}  // namespace recon
