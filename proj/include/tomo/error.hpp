#pragma once

#include <stdexcept>
#include <string>

namespace tomo {

// Base for every error raised by the toolkit. Validation failures derive from
// Error directly; IoError marks filesystem/format problems so the CLI can map
// them to a distinct exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedTermError : public Error {
 public:
  using Error::Error;
};

class DegenerateStrategyError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tomo
